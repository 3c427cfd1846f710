"""Three-zone partition of the workspace image: robot, danger, and human.

Masks are boolean numpy arrays of shape (height, width), indexed [v, u].
A pixel belongs to a rasterized region iff its center (integer coordinates)
lies inside or on the region polygon. Zone construction is pure; a
ZonePartition is immutable after construction and safe to share read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    CameraModel,
    PointBehindCamera,
    backproject_pixel_to_plane,
    project_points,
)

Mask = np.ndarray  # bool, shape (height, width)

DISK_SAMPLES = 16
# Boundary directions of the disk polygon. Offsets within 1e-9 of zero are
# snapped so axis-aligned samples land exactly on pixel centers; without the
# snap, cos(pi/2) dirt makes boundary-pixel membership depend on FP noise.
_ANGLES = np.arange(DISK_SAMPLES) * (2.0 * np.pi / DISK_SAMPLES)
_UNIT_OFFSETS = np.stack([np.cos(_ANGLES), np.sin(_ANGLES)], axis=1)
_UNIT_OFFSETS[np.abs(_UNIT_OFFSETS) < 1e-9] = 0.0
_UNIT_OFFSETS.flags.writeable = False


@dataclass(frozen=True)
class ZoneParams:
    """Pixel-space zone sizing: region radius, danger margin, fence height.

    Defaults correspond to roughly 8 cm and 6 cm on a 2 m workspace imaged
    at 512 px width.
    """

    region_radius_px: int = 20
    margin_px: int = 15
    fence_height_m: float = 1.0

    def __post_init__(self):
        if self.region_radius_px < 1:
            raise ValueError("region radius must be >= 1 px")
        if self.margin_px < 0:
            raise ValueError("danger margin must be >= 0 px")
        if self.fence_height_m <= 0:
            raise ValueError("fence height must be positive")


@dataclass(frozen=True)
class ControlPointSet:
    """Sparse 3D points covering the extreme parts of the robot or an object."""

    points: np.ndarray  # (N, 3) meters, robot frame
    label: str = "robot"  # "robot" | "object"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if p.shape[0] == 0:
            raise ValueError("control point set must be non-empty")
        if self.label not in ("robot", "object"):
            raise ValueError(f"unknown control point label {self.label!r}")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "points", p)


@dataclass(frozen=True)
class ZonePartition:
    """Disjoint and jointly complete robot / danger / human masks."""

    robot: Mask
    danger: Mask
    human: Mask

    def __post_init__(self):
        r, d, h = (np.asarray(m, dtype=bool) for m in (self.robot, self.danger, self.human))
        if not (r.shape == d.shape == h.shape) or r.ndim != 2:
            raise ValueError("zone masks must share one (height, width) shape")
        if (r & d).any() or (r & h).any() or (d & h).any():
            raise ValueError("zone masks must be pairwise disjoint")
        if not (r | d | h).all():
            raise ValueError("zone masks must cover the full frame")
        for m in (r, d, h):
            m.flags.writeable = False
        object.__setattr__(self, "robot", r)
        object.__setattr__(self, "danger", d)
        object.__setattr__(self, "human", h)

    @property
    def shape(self) -> tuple[int, int]:
        return self.robot.shape


@dataclass(frozen=True)
class FenceMesh:
    """Vertical wall triangles (T, 3, 3) in the robot frame, meters."""

    triangles: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.triangles, dtype=float).reshape(-1, 3, 3)
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "triangles", t)


def convex_hull(points) -> np.ndarray:
    """Minimal convex polygon around 2D points (monotone-chain scan).

    Returns an (M, 2) array in counter-clockwise order (treating (x, y) as
    standard math axes), starting from the lowest-then-leftmost vertex, with
    collinear interior points removed. Degenerate inputs yield a single
    vertex or a 2-vertex polyline.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("convex hull of empty point set")
    pts = np.unique(pts, axis=0)  # lexicographic sort by (x, y) + dedupe
    if pts.shape[0] == 1:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    # rotate so the lowest (min y), then leftmost (min x) vertex comes first
    start = np.lexsort((hull[:, 0], hull[:, 1]))[0]
    return np.roll(hull, -start, axis=0)


def disk_boundary_points(centers, radius: float) -> np.ndarray:
    """Boundary samples of disks around pixel centers (rounded half-up)."""
    if radius < 1:
        raise ValueError("disk radius must be >= 1 px")
    c = np.floor(np.asarray(centers, dtype=float).reshape(-1, 2) + 0.5)
    off = _UNIT_OFFSETS * float(radius)
    return (c[:, None, :] + off[None, :, :]).reshape(-1, 2)


def fill_convex_polygon(vertices, width: int, height: int) -> Mask:
    """Rasterize a convex polygon: pixel set iff its center is inside or on it.

    Row spans come from inclusive edge/scanline intersections, so boundary
    pixels are included on all sides (matches a per-pixel point-in-polygon
    test, which the golden tests rely on).
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 2)
    n = verts.shape[0]
    if n == 0:
        raise ValueError("cannot rasterize an empty polygon")
    xs, ys = verts[:, 0], verts[:, 1]
    jj = np.roll(np.arange(n), -1) if n > 1 else np.array([0])
    x_i, y_i = xs, ys
    x_j, y_j = xs[jj], ys[jj]

    rows = np.arange(height, dtype=float)[:, None]
    y_lo = np.minimum(y_i, y_j)[None, :]
    y_hi = np.maximum(y_i, y_j)[None, :]
    straddle = (y_lo <= rows) & (rows <= y_hi)

    horizontal = y_j == y_i
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rows - y_i[None, :]) / (y_j - y_i)[None, :]
        x_at = x_i[None, :] + t * (x_j - x_i)[None, :]
    x_lo = np.where(horizontal[None, :], np.minimum(x_i, x_j)[None, :], x_at)
    x_hi = np.where(horizontal[None, :], np.maximum(x_i, x_j)[None, :], x_at)

    left = np.min(np.where(straddle, x_lo, np.inf), axis=1)
    right = np.max(np.where(straddle, x_hi, -np.inf), axis=1)

    cols = np.arange(width, dtype=float)[None, :]
    return (cols >= left[:, None]) & (cols <= right[:, None])


def rasterize_hull_of_disks(centers, radius: float, width: int, height: int) -> Mask:
    """Filled convex hull of disks of ``radius`` around the given pixel centers.

    Content outside the frame is clipped; an entirely off-frame hull yields
    an empty mask. Monotone in the radius: a larger radius never clears a
    set pixel.
    """
    hull = convex_hull(disk_boundary_points(centers, radius))
    return fill_convex_polygon(hull, width, height)


def build_zones(
    robot_cp: ControlPointSet,
    objects: list[ControlPointSet] | tuple[ControlPointSet, ...],
    params: ZoneParams,
    cam: CameraModel,
) -> ZonePartition:
    """Construct the robot/danger/human partition for one robot pose.

    The robot zone is the dilated hull of the projected robot control points
    united with each carried object's dilated hull; the danger zone is the
    extra margin ring around that union; the human zone is the remainder of
    the frame. Control points behind the camera are dropped; a set with no
    projectable points is an error.
    """
    w, h = cam.intrinsics.width, cam.intrinsics.height
    r_in = params.region_radius_px
    r_out = params.region_radius_px + params.margin_px

    def centers_of(cps: ControlPointSet) -> np.ndarray:
        pix, _, in_front = project_points(cps.points, cam)
        if not in_front.any():
            raise PointBehindCamera(
                f"no {cps.label} control point projects in front of the camera"
            )
        return pix[in_front]

    robot_centers = centers_of(robot_cp)
    inner = rasterize_hull_of_disks(robot_centers, r_in, w, h)
    outer = rasterize_hull_of_disks(robot_centers, r_out, w, h)
    for obj in objects:
        oc = centers_of(obj)
        inner |= rasterize_hull_of_disks(oc, r_in, w, h)
        outer |= rasterize_hull_of_disks(oc, r_out, w, h)
    robot = inner
    danger = outer & ~robot
    human = ~(robot | danger)
    return ZonePartition(robot=robot, danger=danger, human=human)


def zone_boundary(mask: Mask) -> np.ndarray:
    """Convex outline (pixel coordinates, CCW) of the set pixels of a mask."""
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise ValueError("cannot outline an empty mask")
    rows = np.flatnonzero(m.any(axis=1))
    first = np.argmax(m[rows], axis=1)
    last = m.shape[1] - 1 - np.argmax(m[rows, ::-1], axis=1)
    pts = np.concatenate(
        [np.stack([first, rows], axis=1), np.stack([last, rows], axis=1)]
    ).astype(float)
    return convex_hull(pts)


def danger_boundary(partition: ZonePartition) -> np.ndarray:
    """Outer boundary polygon of robot + danger zones (feeds the fence)."""
    if not partition.danger.any():
        raise ValueError("danger zone is empty")
    return zone_boundary(partition.robot | partition.danger)


def build_fence_mesh(
    boundary,
    params: ZoneParams,
    cam: CameraModel,
    plane_z: float = 0.0,
) -> FenceMesh:
    """Extrude the boundary polygon into a vertical wall of triangles.

    Every boundary pixel is back-projected onto the workspace plane; each
    edge becomes one quad (two triangles) reaching ``fence_height_m`` above
    the plane. Zero-length edges are dropped. A degenerate 2-vertex boundary
    produces a single wall segment.
    """
    verts = np.asarray(boundary, dtype=float).reshape(-1, 2)
    n = verts.shape[0]
    if n < 2:
        raise ValueError("fence boundary needs at least 2 vertices")
    base = np.array([backproject_pixel_to_plane(v, cam, plane_z) for v in verts])
    top = base + np.array([0.0, 0.0, params.fence_height_m])
    edges = [(i, (i + 1) % n) for i in range(n)] if n >= 3 else [(0, 1)]
    tris = []
    for i, j in edges:
        if np.linalg.norm(base[j] - base[i]) < 1e-12:
            continue
        tris.append([base[i], base[j], top[j]])
        tris.append([base[i], top[j], top[i]])
    return FenceMesh(np.array(tris, dtype=float).reshape(-1, 3, 3))


def mask_to_pgm(mask: Mask) -> bytes:
    """Binary PGM (P5, maxval 255) with set pixels at 255."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + (m.astype(np.uint8) * 255).tobytes()


def write_pgm(path, mask: Mask) -> None:
    with open(path, "wb") as fh:
        fh.write(mask_to_pgm(mask))


def read_pgm(path) -> Mask:
    """Read back a P5 mask written by write_pgm (255 -> True)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM file")
    fields: list[bytes] = []
    idx = 2
    while len(fields) < 3:
        while idx < len(data) and data[idx : idx + 1].isspace():
            idx += 1
        if data[idx : idx + 1] == b"#":
            while idx < len(data) and data[idx : idx + 1] != b"\n":
                idx += 1
            continue
        start = idx
        while idx < len(data) and not data[idx : idx + 1].isspace():
            idx += 1
        fields.append(data[start:idx])
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError("expected maxval 255")
    raw = np.frombuffer(data[idx + 1 :], dtype=np.uint8, count=w * h)
    return raw.reshape(h, w) >= 128
