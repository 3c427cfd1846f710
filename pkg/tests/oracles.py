"""Independent brute-force oracles the implementation is checked against.

Everything here is deliberately written with the slowest, most obvious
algorithm available and shares no code with the package internals.
"""

from __future__ import annotations

import numpy as np


def gift_wrap_hull(points) -> np.ndarray:
    """Jarvis-march convex hull, CCW from the lowest-then-leftmost point.

    Collinear points on hull edges are skipped (farthest point wins), so the
    output is strictly convex, matching the canonical form of the fast path.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    n = pts.shape[0]
    if n == 1:
        return pts
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    start = pts[order[0]]
    hull = [start]
    current = start
    while True:
        candidate = None
        for p in pts:
            if np.array_equal(p, current):
                continue
            if candidate is None:
                candidate = p
                continue
            ca, cb = candidate - current, p - current
            cr = ca[0] * cb[1] - ca[1] * cb[0]
            if cr < 0:
                candidate = p
            elif cr == 0:
                # collinear: keep the farther point
                if np.linalg.norm(p - current) > np.linalg.norm(candidate - current):
                    candidate = p
        if candidate is None or np.array_equal(candidate, start):
            break
        hull.append(candidate)
        current = candidate
        if len(hull) > n + 1:
            raise RuntimeError("gift wrap failed to terminate")
    out = np.array(hull)
    if out.shape[0] == 2:
        # canonical 2-point order: lowest-then-leftmost first
        if (out[1][1], out[1][0]) < (out[0][1], out[0][0]):
            out = out[::-1]
    return out


def point_in_convex_polygon(point, vertices) -> bool:
    """Inside-or-on test for a CCW convex polygon via edge cross products."""
    verts = np.asarray(vertices, dtype=float)
    p = np.asarray(point, dtype=float)
    n = verts.shape[0]
    if n == 1:
        return bool(np.all(p == verts[0]))
    px, py = float(p[0]), float(p[1])
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < 0:
            return False
    return True


def fill_polygon_bruteforce(vertices, width: int, height: int) -> np.ndarray:
    """Per-pixel point-in-polygon rasterization."""
    mask = np.zeros((height, width), dtype=bool)
    for v in range(height):
        for u in range(width):
            mask[v, u] = point_in_convex_polygon((u, v), vertices)
    return mask


def changes_bruteforce(model: np.ndarray, frame: np.ndarray, tau: float) -> np.ndarray:
    """Per-pixel loop version of the depth change test."""
    h, w = model.shape
    out = np.zeros((h, w), dtype=bool)
    for v in range(h):
        for u in range(w):
            a = float(model[v, u])
            b = float(frame[v, u])
            if a > 0 and b > 0 and abs(np.float32(a) - np.float32(b)) >= np.float32(tau):
                out[v, u] = True
    return out


def connected_components_8(mask: np.ndarray, min_size: int) -> list[frozenset]:
    """8-connected components by queue flood fill, size-filtered.

    Returns a list of frozensets of (v, u) pixel tuples.
    """
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for v0 in range(h):
        for u0 in range(w):
            if not mask[v0, u0] or seen[v0, u0]:
                continue
            comp = []
            queue = [(v0, u0)]
            seen[v0, u0] = True
            while queue:
                v, u = queue.pop()
                comp.append((v, u))
                for dv in (-1, 0, 1):
                    for du in (-1, 0, 1):
                        if dv == 0 and du == 0:
                            continue
                        nv, nu = v + dv, u + du
                        if 0 <= nv < h and 0 <= nu < w and mask[nv, nu] and not seen[nv, nu]:
                            seen[nv, nu] = True
                            queue.append((nv, nu))
            if len(comp) >= min_size:
                comps.append(frozenset(comp))
    return comps


def compose_homogeneous(rot_a, t_a, rot_b, t_b, point) -> np.ndarray:
    """Apply 4x4 matrices M_a @ M_b to a point (b first, then a)."""

    def mat(rot, t):
        m = np.eye(4)
        m[:3, :3] = rot
        m[:3, 3] = t
        return m

    ph = np.array([point[0], point[1], point[2], 1.0])
    return (mat(rot_a, t_a) @ mat(rot_b, t_b) @ ph)[:3]


def planar_2link_end(l1: float, l2: float, q1: float, q2: float) -> np.ndarray:
    """Closed-form planar 2-link end effector position."""
    x = l1 * np.cos(q1) + l2 * np.cos(q1 + q2)
    y = l1 * np.sin(q1) + l2 * np.sin(q1 + q2)
    return np.array([x, y, 0.0])


def dilated_hull_masks_bruteforce(
    robot_centers,
    object_center_sets,
    radius_in: int,
    radius_out: int,
    width: int,
    height: int,
    disk_points,
):
    """Zone masks from first principles: gift-wrap hulls of the shared disk
    samples, then per-pixel point-in-polygon fills and set algebra."""

    def region(center_sets, radius):
        mask = np.zeros((height, width), dtype=bool)
        for centers in center_sets:
            hull = gift_wrap_hull(disk_points(centers, radius))
            mask |= fill_polygon_bruteforce(hull, width, height)
        return mask

    inner = region([robot_centers], radius_in)
    outer = region([robot_centers], radius_out)
    for oc in object_center_sets:
        inner |= region([oc], radius_in)
        outer |= region([oc], radius_out)
    robot = inner
    danger = outer & ~robot
    human = ~(robot | danger)
    return robot, danger, human
