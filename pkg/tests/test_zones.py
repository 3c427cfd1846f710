import math

import numpy as np
import pytest

from safecell.geometry import make_synthetic_camera
from safecell.zones import (
    ControlPointSet,
    ZoneParams,
    ZonePartition,
    build_fence_mesh,
    build_zones,
    convex_hull,
    danger_boundary,
    disk_boundary_points,
    mask_to_pgm,
    rasterize_hull_of_disks,
    read_pgm,
    write_pgm,
    zone_boundary,
)
from safecell.geometry import PointBehindCamera, project_world_to_model
from oracles import (
    fill_polygon_bruteforce,
    gift_wrap_hull,
    point_in_convex_polygon,
)


def overhead_cam(width=128, height=106, height_m=2.0):
    fov = 2.0 * math.atan(1.0 / height_m)
    return make_synthetic_camera(height_m, width, height, fov)


# -- convex hull ---------------------------------------------------------------


def test_hull_of_triangle_is_triangle():
    hull = convex_hull([(0, 0), (4, 0), (0, 4)])
    assert hull.shape == (3, 2)
    assert set(map(tuple, hull)) == {(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)}


def test_hull_drops_interior_point():
    hull = convex_hull([(0, 0), (4, 0), (4, 4), (0, 4), (2, 2)])
    assert set(map(tuple, hull)) == {(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)}


def test_hull_starts_lowest_then_leftmost_and_is_ccw():
    hull = convex_hull([(3, 1), (0, 0), (4, 0), (4, 4), (0, 4)])
    assert tuple(hull[0]) == (0.0, 0.0)
    # CCW: positive signed area
    x, y = hull[:, 0], hull[:, 1]
    area2 = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area2 > 0


def test_hull_empty_input_raises():
    with pytest.raises(ValueError):
        convex_hull(np.zeros((0, 2)))


def test_hull_single_and_collinear_degenerate():
    assert convex_hull([(2, 3)]).shape == (1, 2)
    line = convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])
    assert line.shape == (2, 2)
    assert set(map(tuple, line)) == {(0.0, 0.0), (3.0, 3.0)}


def test_hull_matches_gift_wrap_on_random_sets():
    rng = np.random.default_rng(42)
    for _ in range(300):
        n = rng.integers(1, 13)
        pts = rng.integers(0, 32, size=(n, 2)).astype(float)
        fast = convex_hull(pts)
        slow = gift_wrap_hull(pts)
        assert np.array_equal(fast, slow), f"hull mismatch for {pts.tolist()}"


# -- disk sampling and rasterization ---------------------------------------------


def test_disk_samples_axis_aligned_are_exact():
    pts = disk_boundary_points([(10.0, 20.0)], 5)
    assert [10.0 + 5.0, 20.0] in pts.tolist()
    assert [10.0, 20.0 + 5.0] in pts.tolist()
    assert [10.0 - 5.0, 20.0] in pts.tolist()


def test_disk_sample_centers_round_half_up():
    pts_a = disk_boundary_points([(10.5, 20.49)], 1)
    pts_b = disk_boundary_points([(11.0, 20.0)], 1)
    assert np.array_equal(pts_a, pts_b)


def test_single_disk_mask_is_filled_16gon():
    r = 6
    mask = rasterize_hull_of_disks([(16.0, 16.0)], r, 32, 32)
    hull = convex_hull(disk_boundary_points([(16.0, 16.0)], r))
    want = fill_polygon_bruteforce(hull, 32, 32)
    assert np.array_equal(mask, want)
    # sanity: contains the center and the four axis extremes
    assert mask[16, 16] and mask[16, 16 + r] and mask[16 + r, 16]
    assert mask[16, 16 - r] and mask[16 - r, 16]
    assert not mask[16 + r, 16 + r]


def test_two_disk_stadium_matches_bruteforce():
    centers = [(8.0, 10.0), (24.0, 22.0)]
    r = 4
    mask = rasterize_hull_of_disks(centers, r, 32, 32)
    hull = gift_wrap_hull(disk_boundary_points(centers, r))
    want = fill_polygon_bruteforce(hull, 32, 32)
    assert np.array_equal(mask, want)
    one_disk = rasterize_hull_of_disks(centers[:1], r, 32, 32)
    assert mask.sum() >= one_disk.sum()


def test_rasterized_radius_monotonicity():
    centers = [(10.0, 12.0), (20.0, 18.0)]
    small = rasterize_hull_of_disks(centers, 3, 32, 32)
    large = rasterize_hull_of_disks(centers, 6, 32, 32)
    assert not (small & ~large).any()


def test_rasterization_clips_to_frame():
    mask = rasterize_hull_of_disks([(-10.0, -10.0)], 4, 32, 32)
    assert not mask.any()
    edge = rasterize_hull_of_disks([(0.0, 0.0)], 4, 32, 32)
    assert edge[0, 0] and edge.any()


def test_fill_matches_per_pixel_oracle_on_random_hulls():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = rng.integers(1, 7)
        centers = rng.uniform(2, 29, size=(n, 2))
        r = int(rng.integers(1, 7))
        mask = rasterize_hull_of_disks(centers, r, 32, 32)
        hull = gift_wrap_hull(disk_boundary_points(centers, r))
        want = fill_polygon_bruteforce(hull, 32, 32)
        assert np.array_equal(mask, want)


# -- zone partitions -------------------------------------------------------------


def one_point_robot(x=0.0, y=0.0, z=0.3):
    return ControlPointSet(np.array([[x, y, z]]), label="robot")


def test_zero_margin_means_empty_danger_zone():
    cam = overhead_cam()
    params = ZoneParams(region_radius_px=6, margin_px=0)
    part = build_zones(one_point_robot(), [], params, cam)
    assert not part.danger.any()
    assert np.array_equal(part.human, ~part.robot)


def test_single_point_disk_and_annulus_against_distance_oracle():
    cam = overhead_cam()
    params = ZoneParams(region_radius_px=6, margin_px=4)
    cp = one_point_robot()
    part = build_zones(cp, [], params, cam)
    pix, _ = project_world_to_model(cp.points[0], cam)
    cx, cy = math.floor(pix.u + 0.5), math.floor(pix.v + 0.5)
    hull_in = gift_wrap_hull(disk_boundary_points([(cx, cy)], 6))
    hull_out = gift_wrap_hull(disk_boundary_points([(cx, cy)], 10))
    h, w = part.shape
    for v in range(cy - 14, cy + 15):
        for u in range(cx - 14, cx + 15):
            inside_in = point_in_convex_polygon((u, v), hull_in)
            inside_out = point_in_convex_polygon((u, v), hull_out)
            assert part.robot[v, u] == inside_in
            assert part.danger[v, u] == (inside_out and not inside_in)


def test_partition_disjoint_and_complete():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(6, 4), cam)
    r, d, h = part.robot, part.danger, part.human
    assert not (r & d).any() and not (r & h).any() and not (d & h).any()
    assert (r | d | h).all()


def test_partition_validation_rejects_overlap():
    ones = np.ones((4, 4), dtype=bool)
    zeros = np.zeros((4, 4), dtype=bool)
    with pytest.raises(ValueError):
        ZonePartition(robot=ones, danger=ones, human=zeros)
    with pytest.raises(ValueError):
        ZonePartition(robot=zeros, danger=zeros, human=zeros)


def test_object_enlarges_robot_zone_monotonically():
    cam = overhead_cam()
    params = ZoneParams(5, 3)
    base = build_zones(one_point_robot(), [], params, cam)
    obj = ControlPointSet(np.array([[0.4, 0.2, 0.2]]), label="object")
    with_obj = build_zones(one_point_robot(), [obj], params, cam)
    assert not (base.robot & ~with_obj.robot).any()
    assert (with_obj.robot & ~base.robot).any()


def test_object_pixels_never_in_human_zone():
    cam = overhead_cam()
    params = ZoneParams(5, 3)
    rng = np.random.default_rng(5)
    for _ in range(25):
        obj_pts = rng.uniform([-0.5, -0.4, 0.05], [0.5, 0.4, 0.5], size=(8, 3))
        obj = ControlPointSet(obj_pts, label="object")
        part = build_zones(one_point_robot(), [obj], params, cam)
        m_obj = rasterize_hull_of_disks(
            [project_world_to_model(p, cam)[0] for p in obj_pts],
            params.region_radius_px,
            cam.intrinsics.width,
            cam.intrinsics.height,
        )
        assert not (m_obj & part.human).any()
        assert not (m_obj & ~part.robot).any()


def test_margin_monotonicity():
    cam = overhead_cam()
    cp = one_point_robot()
    small = build_zones(cp, [], ZoneParams(6, 2), cam)
    large = build_zones(cp, [], ZoneParams(6, 6), cam)
    covered_small = small.robot | small.danger
    covered_large = large.robot | large.danger
    assert not (covered_small & ~covered_large).any()


def test_all_points_behind_camera_raises():
    cam = overhead_cam()
    above = ControlPointSet(np.array([[0.0, 0.0, 5.0]]), label="robot")
    with pytest.raises(PointBehindCamera):
        build_zones(above, [], ZoneParams(5, 3), cam)


# -- boundaries and fence ----------------------------------------------------------


def test_danger_boundary_approximates_outer_circle():
    cam = overhead_cam(width=160, height=160)
    params = ZoneParams(region_radius_px=20, margin_px=15)
    cp = one_point_robot(z=0.0)
    part = build_zones(cp, [], params, cam)
    boundary = danger_boundary(part)
    pix, _ = project_world_to_model(cp.points[0], cam)
    center = np.array([math.floor(pix.u + 0.5), math.floor(pix.v + 0.5)])
    radii = np.linalg.norm(boundary - center, axis=1)
    assert np.all(np.abs(radii - 35.0) <= 1.0)


def test_danger_boundary_vertices_live_in_danger_zone():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(6, 4), cam)
    for u, v in danger_boundary(part):
        assert part.danger[int(v), int(u)]
        assert not part.human[int(v), int(u)]


def test_danger_boundary_is_convex():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(6, 4), cam)
    b = danger_boundary(part)
    n = len(b)
    for i in range(n):
        o, a, c = b[i], b[(i + 1) % n], b[(i + 2) % n]
        assert (a[0] - o[0]) * (c[1] - o[1]) - (a[1] - o[1]) * (c[0] - o[0]) >= 0


def test_danger_boundary_requires_nonempty_danger():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(6, 0), cam)
    with pytest.raises(ValueError):
        danger_boundary(part)


def test_fence_mesh_square_boundary_has_8_triangles():
    cam = overhead_cam()
    square = np.array([(40.0, 40.0), (80.0, 40.0), (80.0, 70.0), (40.0, 70.0)])
    mesh = build_fence_mesh(square, ZoneParams(5, 3, fence_height_m=0.8), cam)
    assert mesh.triangles.shape == (8, 3, 3)


def test_fence_vertices_on_plane_or_at_height():
    cam = overhead_cam()
    h = 0.8
    square = np.array([(40.0, 40.0), (80.0, 40.0), (80.0, 70.0), (40.0, 70.0)])
    mesh = build_fence_mesh(square, ZoneParams(5, 3, fence_height_m=h), cam)
    zs = mesh.triangles[:, :, 2].reshape(-1)
    assert np.all((np.abs(zs) < 1e-9) | (np.abs(zs - h) < 1e-9))


def test_fence_base_reprojects_onto_boundary():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(8, 5), cam)
    boundary = danger_boundary(part)
    mesh = build_fence_mesh(boundary, ZoneParams(8, 5, fence_height_m=1.0), cam)
    base_pts = mesh.triangles[:, :, :][mesh.triangles[:, :, 2] < 1e-9]
    boundary_set = {tuple(v) for v in boundary}
    for p in base_pts:
        pix, _ = project_world_to_model(p, cam)
        d = min(
            math.hypot(pix.u - bu, pix.v - bv) for bu, bv in boundary_set
        )
        assert d < 0.5


def test_fence_mesh_counts_match_boundary_length():
    cam = overhead_cam()
    part = build_zones(one_point_robot(), [], ZoneParams(8, 5), cam)
    boundary = danger_boundary(part)
    mesh = build_fence_mesh(boundary, ZoneParams(8, 5), cam)
    assert mesh.triangles.shape[0] == 2 * len(boundary)


def test_fence_mesh_degenerate_two_vertex_boundary():
    cam = overhead_cam()
    mesh = build_fence_mesh(np.array([(40.0, 40.0), (60.0, 40.0)]), ZoneParams(5, 3), cam)
    assert mesh.triangles.shape[0] == 2  # single wall segment


# -- PGM export --------------------------------------------------------------------


def test_pgm_round_trip(tmp_path):
    mask = rasterize_hull_of_disks([(10.0, 12.0)], 5, 32, 24)
    data = mask_to_pgm(mask)
    assert data.startswith(b"P5\n32 24\n255\n")
    path = tmp_path / "mask.pgm"
    write_pgm(path, mask)
    assert np.array_equal(read_pgm(path), mask)


def test_zone_boundary_requires_nonempty_mask():
    with pytest.raises(ValueError):
        zone_boundary(np.zeros((8, 8), dtype=bool))


# -- property tests ------------------------------------------------------------------

from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=60, deadline=None)
@given(
    r1=st.integers(1, 8),
    extra=st.integers(0, 8),
    seed=st.integers(0, 10_000),
)
def test_union_radius_monotonicity_property(r1, extra, seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(4, 44, size=(rng.integers(1, 5), 2))
    small = rasterize_hull_of_disks(centers, r1, 48, 48)
    large = rasterize_hull_of_disks(centers, r1 + extra, 48, 48)
    assert not (small & ~large).any()


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), margin=st.integers(0, 6))
def test_partition_invariants_property(seed, margin):
    rng = np.random.default_rng(seed)
    cam = overhead_cam(width=64, height=53)
    pts = rng.uniform([-0.6, -0.5, 0.05], [0.6, 0.5, 0.6], size=(4, 3))
    part = build_zones(
        ControlPointSet(pts, label="robot"), [], ZoneParams(4, margin), cam
    )
    assert not (part.robot & part.danger).any()
    assert not (part.robot & part.human).any()
    assert not (part.danger & part.human).any()
    assert (part.robot | part.danger | part.human).all()


def test_pgm_export_matches_golden_file():
    from pathlib import Path

    golden = Path(__file__).parent / "golden" / "two_disk_hull_48x40_r6.pgm"
    mask = rasterize_hull_of_disks([(12.0, 14.0), (34.0, 22.0)], 6, 48, 40)
    assert mask_to_pgm(mask) == golden.read_bytes()
