"""Simulated robot cell: kinematic arm, scene primitives, depth rendering.

The renderer stands in for the ceiling depth sensor: for every pixel it
intersects the viewing ray with all scene primitives (z-buffer over analytic
ray/primitive intersections) and falls back to the workspace table plane.
Rendering is deterministic: identical scenes produce bit-identical frames.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import CameraModel, DepthImage, RigidTransform, rotation_about_axis
from .zones import ControlPointSet

STREAM_MAGIC = b"SCDEPTH1"


# ---------------------------------------------------------------------------
# kinematic chain


@dataclass(frozen=True)
class LinkSpec:
    """One serial link: joint axis, fixed offset after the joint, capsule body.

    The link frame is parent_frame @ Rot(axis, q) @ offset; the capsule runs
    from the parent joint origin to the link origin unless endpoints are
    given explicitly (in the link frame).
    """

    axis: np.ndarray
    offset: RigidTransform
    capsule_radius: float
    capsule_p0: np.ndarray | None = None
    capsule_p1: np.ndarray | None = None

    def __post_init__(self):
        if self.capsule_radius <= 0:
            raise ValueError("capsule radius must be positive")
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or np.linalg.norm(a) == 0:
            raise ValueError("joint axis must be a non-zero 3-vector")
        object.__setattr__(self, "axis", a / np.linalg.norm(a))
        p0 = self.capsule_p0
        if p0 is None:
            # parent origin expressed in this link's frame
            inv = self.offset.inverse()
            p0 = inv.translation.copy()
        object.__setattr__(self, "capsule_p0", np.asarray(p0, dtype=float))
        p1 = self.capsule_p1 if self.capsule_p1 is not None else np.zeros(3)
        object.__setattr__(self, "capsule_p1", np.asarray(p1, dtype=float))


@dataclass(frozen=True)
class KinematicChain:
    links: tuple[LinkSpec, ...]
    limits_lo: np.ndarray
    limits_hi: np.ndarray
    base: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if len(self.links) < 2:
            raise ValueError("chain needs at least 2 links")
        lo = np.asarray(self.limits_lo, dtype=float)
        hi = np.asarray(self.limits_hi, dtype=float)
        if lo.shape != (len(self.links),) or hi.shape != lo.shape:
            raise ValueError("joint limits must match the number of links")
        if np.any(lo > hi):
            raise ValueError("lower joint limits exceed upper limits")
        object.__setattr__(self, "limits_lo", lo)
        object.__setattr__(self, "limits_hi", hi)

    @property
    def dof(self) -> int:
        return len(self.links)


def _dh_offset(d: float, a: float, alpha: float) -> RigidTransform:
    rot = rotation_about_axis([1.0, 0.0, 0.0], alpha)
    return RigidTransform(np.eye(3), [0.0, 0.0, d]).compose(
        RigidTransform(rot, np.zeros(3)).compose(
            RigidTransform(np.eye(3), [a, 0.0, 0.0])
        )
    )


def ur5_like_chain(base_xy=(0.0, 0.0)) -> KinematicChain:
    """Six-joint arm with public UR5 link lengths, capsule bodies included."""
    dh = [
        # (d, a, alpha, capsule radius)
        (0.089159, 0.0, np.pi / 2, 0.065),
        (0.0, -0.425, 0.0, 0.055),
        (0.0, -0.39225, 0.0, 0.05),
        (0.10915, 0.0, np.pi / 2, 0.045),
        (0.09465, 0.0, -np.pi / 2, 0.045),
        (0.0823, 0.0, 0.0, 0.045),
    ]
    links = tuple(
        LinkSpec(axis=np.array([0.0, 0.0, 1.0]), offset=_dh_offset(d, a, alpha),
                 capsule_radius=r)
        for d, a, alpha, r in dh
    )
    n = len(links)
    base = RigidTransform(np.eye(3), [base_xy[0], base_xy[1], 0.0])
    return KinematicChain(
        links=links,
        limits_lo=np.full(n, -2.0 * np.pi),
        limits_hi=np.full(n, 2.0 * np.pi),
        base=base,
    )


def forward_kinematics(
    chain: KinematicChain, q
) -> tuple[list[RigidTransform], ControlPointSet]:
    """Link frames by successive rigid composition + the control point set.

    Control points are both capsule endpoints of every link, in the robot
    frame. Out-of-limit joint angles raise.
    """
    qv = np.asarray(q, dtype=float)
    if qv.shape != (chain.dof,):
        raise ValueError(f"expected {chain.dof} joint angles, got shape {qv.shape}")
    if np.any(qv < chain.limits_lo - 1e-12) or np.any(qv > chain.limits_hi + 1e-12):
        raise ValueError("joint angles outside configured limits")
    frames: list[RigidTransform] = []
    T = chain.base
    points = []
    for link, angle in zip(chain.links, qv):
        joint = RigidTransform(rotation_about_axis(link.axis, angle), np.zeros(3))
        T = T.compose(joint).compose(link.offset)
        frames.append(T)
        points.append(T.apply(link.capsule_p0))
        points.append(T.apply(link.capsule_p1))
    return frames, ControlPointSet(points=np.array(points), label="robot")


def chain_capsules(chain: KinematicChain, frames: list[RigidTransform]) -> list["ScenePrimitive"]:
    """Scene capsules for each link body at the given FK frames."""
    prims = []
    for link, T in zip(chain.links, frames):
        p0 = T.apply(link.capsule_p0)
        p1 = T.apply(link.capsule_p1)
        prims.append(capsule_between(p0, p1, link.capsule_radius, tag="robot-link"))
    return prims


# ---------------------------------------------------------------------------
# scene primitives


@dataclass(frozen=True)
class ScenePrimitive:
    """capsule | sphere | box with a pose, metric dimensions, and a tag.

    capsule: dimensions = (radius, length), segment along local z.
    sphere:  dimensions = (radius,).
    box:     dimensions = (sx, sy, sz) full extents, local axes.
    """

    shape: str
    pose: RigidTransform
    dimensions: tuple[float, ...]
    tag: str = "static"

    def __post_init__(self):
        if self.shape not in ("capsule", "sphere", "box"):
            raise ValueError(f"unknown primitive shape {self.shape!r}")
        if any(d <= 0 for d in self.dimensions):
            raise ValueError("primitive dimensions must be positive")
        want = {"capsule": 2, "sphere": 1, "box": 3}[self.shape]
        if len(self.dimensions) != want:
            raise ValueError(f"{self.shape} needs {want} dimensions")


def _frame_aligning_z(direction: np.ndarray) -> np.ndarray:
    """Rotation whose local z maps to ``direction`` (unit)."""
    z = direction
    helper = np.array([1.0, 0.0, 0.0])
    if abs(z @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    x = np.cross(helper, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def capsule_between(p0, p1, radius: float, tag: str = "static") -> ScenePrimitive:
    """Capsule primitive spanning two world points."""
    a = np.asarray(p0, dtype=float)
    b = np.asarray(p1, dtype=float)
    d = b - a
    length = float(np.linalg.norm(d))
    if length < 1e-12:
        return ScenePrimitive("sphere", RigidTransform(np.eye(3), a), (radius,), tag)
    rot = _frame_aligning_z(d / length)
    mid = (a + b) / 2.0
    return ScenePrimitive("capsule", RigidTransform(rot, mid), (radius, length), tag)


def box_at(center, size, tag: str = "static", rotation=None) -> ScenePrimitive:
    rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    return ScenePrimitive("box", RigidTransform(rot, np.asarray(center, float)),
                          tuple(float(s) for s in size), tag)


def capsule_endpoints(prim: ScenePrimitive) -> tuple[np.ndarray, np.ndarray]:
    if prim.shape != "capsule":
        raise ValueError("not a capsule")
    half = prim.dimensions[1] / 2.0
    return (
        prim.pose.apply(np.array([0.0, 0.0, -half])),
        prim.pose.apply(np.array([0.0, 0.0, half])),
    )


def box_corner_points(prim: ScenePrimitive) -> np.ndarray:
    """The 8 corners of a box primitive in the world frame."""
    if prim.shape != "box":
        raise ValueError("not a box")
    hx, hy, hz = (d / 2.0 for d in prim.dimensions)
    corners = np.array(
        [[sx * hx, sy * hy, sz * hz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    return prim.pose.apply(corners)


# ---------------------------------------------------------------------------
# depth renderer


class DepthRenderer:
    """Z-buffer depth camera over analytic ray-primitive intersections.

    Pixels that hit nothing get the table-plane depth (or 0 when the ray
    misses the plane as well). Per-primitive work is restricted to the
    primitive's projected screen footprint.
    """

    def __init__(self, cam: CameraModel, table_z: float = 0.0):
        self.cam = cam
        self.table_z = table_z
        k = cam.intrinsics
        us = (np.arange(k.width, dtype=float) - k.cx) / k.fx
        vs = (np.arange(k.height, dtype=float) - k.cy) / k.fy
        ext = cam.extrinsics
        # world-frame, un-normalized ray directions with camera-z component 1,
        # so the ray parameter equals camera depth
        self._dirs = (
            us[None, :, None] * ext.rotation[:, 0][None, None, :]
            + vs[:, None, None] * ext.rotation[:, 1][None, None, :]
            + ext.rotation[:, 2][None, None, :]
        )
        self._origin = ext.translation
        self._background = self._plane_depth()

    def _plane_depth(self) -> np.ndarray:
        dz = self._dirs[:, :, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (self.table_z - self._origin[2]) / dz
        s = np.where(np.isfinite(s) & (s > 0), s, np.inf)
        return s

    def _footprint(self, centers: np.ndarray, radius: float) -> tuple[int, int, int, int] | None:
        """Conservative pixel rect covering spheres (centers, radius)."""
        k = self.cam.intrinsics
        ext = self.cam.extrinsics
        pc = (np.atleast_2d(centers) - ext.translation) @ ext.rotation
        z = pc[:, 2]
        if np.any(z - radius <= 1e-6):
            return 0, 0, k.width, k.height  # too close: test the whole frame
        u = k.fx * pc[:, 0] / z + k.cx
        v = k.fy * pc[:, 1] / z + k.cy
        rad_px = max(k.fx, k.fy) * radius / np.min(z - radius) + 2.0
        u0 = int(np.floor(np.min(u) - rad_px))
        v0 = int(np.floor(np.min(v) - rad_px))
        u1 = int(np.ceil(np.max(u) + rad_px)) + 1
        v1 = int(np.ceil(np.max(v) + rad_px)) + 1
        u0, v0 = max(u0, 0), max(v0, 0)
        u1, v1 = min(u1, k.width), min(v1, k.height)
        if u0 >= u1 or v0 >= v1:
            return None
        return u0, v0, u1, v1

    def render(self, primitives, frame_index: int = 0) -> DepthImage:
        zbuf = self._background.copy()
        for prim in primitives:
            self._splat(zbuf, prim)
        depth = np.where(np.isfinite(zbuf), zbuf, 0.0).astype(np.float32)
        k = self.cam.intrinsics
        return DepthImage(k.width, k.height, depth, frame_index)

    def _splat(self, zbuf: np.ndarray, prim: ScenePrimitive) -> None:
        if prim.shape == "sphere":
            centers = prim.pose.translation[None, :]
            bound = prim.dimensions[0]
        elif prim.shape == "capsule":
            p0, p1 = capsule_endpoints(prim)
            centers = np.stack([p0, p1])
            bound = prim.dimensions[0]
        else:
            centers = prim.pose.translation[None, :]
            bound = float(np.linalg.norm(prim.dimensions)) / 2.0
        rect = self._footprint(centers, bound)
        if rect is None:
            return
        u0, v0, u1, v1 = rect
        d = self._dirs[v0:v1, u0:u1].reshape(-1, 3)
        o = self._origin
        if prim.shape == "sphere":
            s = _ray_sphere(o, d, prim.pose.translation, prim.dimensions[0])
        elif prim.shape == "capsule":
            p0, p1 = capsule_endpoints(prim)
            s = _ray_capsule(o, d, p0, p1, prim.dimensions[0])
        else:
            s = _ray_box(o, d, prim)
        s = s.reshape(v1 - v0, u1 - u0)
        view = zbuf[v0:v1, u0:u1]
        np.minimum(view, s, out=view)


def _ray_sphere(o: np.ndarray, d: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    oc = o - center
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * (d @ oc)
    c = oc @ oc - radius * radius
    disc = b * b - 4.0 * a * c
    hit = disc >= 0
    s = np.full(d.shape[0], np.inf)
    if hit.any():
        root = np.sqrt(disc[hit])
        s0 = (-b[hit] - root) / (2.0 * a[hit])
        s1 = (-b[hit] + root) / (2.0 * a[hit])
        near = np.where(s0 > 1e-9, s0, np.where(s1 > 1e-9, s1, np.inf))
        s[hit] = near
    return s


def _ray_capsule(o, d, p0, p1, radius: float) -> np.ndarray:
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length < 1e-12:
        return _ray_sphere(o, d, p0, radius)
    ah = axis / length
    m = o - p0
    d_perp = d - np.outer(d @ ah, ah)
    m_perp = m - (m @ ah) * ah
    a = np.einsum("ij,ij->i", d_perp, d_perp)
    b = 2.0 * (d_perp @ m_perp)
    c = m_perp @ m_perp - radius * radius
    s = np.full(d.shape[0], np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4.0 * a * c
        ok = (disc >= 0) & (a > 1e-18)
        root = np.sqrt(np.where(ok, disc, 0.0))
        s0 = (-b - root) / (2.0 * a)
        s1 = (-b + root) / (2.0 * a)
    for cand in (s0, s1):
        y = (m @ ah) + cand * (d @ ah)
        valid = ok & (cand > 1e-9) & (y >= 0.0) & (y <= length)
        s = np.where(valid & (cand < s), cand, s)
    s = np.minimum(s, _ray_sphere(o, d, p0, radius))
    s = np.minimum(s, _ray_sphere(o, d, p1, radius))
    return s


def _ray_box(o, d, prim: ScenePrimitive) -> np.ndarray:
    rot = prim.pose.rotation
    half = np.asarray(prim.dimensions, dtype=float) / 2.0
    ob = rot.T @ (o - prim.pose.translation)
    db = d @ rot
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / db
        t1 = (-half[None, :] - ob[None, :]) * inv
        t2 = (half[None, :] - ob[None, :]) * inv
    tmin = np.max(np.minimum(t1, t2), axis=1)
    tmax = np.min(np.maximum(t1, t2), axis=1)
    # axis-parallel rays: inv is +-inf, products become +-inf or nan when the
    # origin sits exactly on a slab plane; nan never wins a comparison, which
    # is the conservative miss
    hit = (tmax >= tmin) & (tmax > 1e-9) & np.isfinite(tmin)
    s = np.where(hit & (tmin > 1e-9), tmin, np.inf)
    return s


def render_depth(
    primitives,
    cam: CameraModel,
    table_z: float = 0.0,
    frame_index: int = 0,
) -> DepthImage:
    """One-shot rendering helper (prefer DepthRenderer for frame streams)."""
    return DepthRenderer(cam, table_z).render(primitives, frame_index)


# ---------------------------------------------------------------------------
# trajectories and intrusion scripts


@dataclass(frozen=True)
class Trajectory:
    """Joint-space waypoints with linear interpolation between them."""

    times: np.ndarray  # (K,) strictly increasing seconds
    waypoints: np.ndarray  # (K, dof)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        if t.ndim != 1 or t.size != w.shape[0] or t.size == 0:
            raise ValueError("times and waypoints must align")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("waypoint times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "waypoints", w)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        """Joint vector at time t, clamped to the first/last waypoint."""
        ts, ws = self.times, self.waypoints
        if t <= ts[0]:
            return ws[0].copy()
        if t >= ts[-1]:
            return ws[-1].copy()
        i = int(np.searchsorted(ts, t, side="right")) - 1
        f = (t - ts[i]) / (ts[i + 1] - ts[i])
        return ws[i] + f * (ws[i + 1] - ws[i])

    def scaled_to(self, duration: float) -> "Trajectory":
        if duration <= 0:
            raise ValueError("duration must be positive")
        span = self.times[-1] - self.times[0]
        if span == 0:
            return Trajectory(np.array([0.0]), self.waypoints[:1])
        t = (self.times - self.times[0]) * (duration / span)
        return Trajectory(t, self.waypoints)


@dataclass(frozen=True)
class IntrusionEvent:
    """A primitive moving along a keyframed path (e.g. an operator forearm).

    Positions interpolate linearly between keyframes; the primitive's
    orientation follows the keyframe segment start. Active only within
    [times[0], times[-1]].
    """

    times: np.ndarray  # (K,) seconds, sorted, non-negative
    poses: tuple[RigidTransform, ...]
    primitive: ScenePrimitive  # pose field is replaced per frame

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0 or t.size != len(self.poses):
            raise ValueError("times and poses must align")
        if np.any(t < 0) or (t.size > 1 and not np.all(np.diff(t) > 0)):
            raise ValueError("intrusion times must be sorted and non-negative")
        object.__setattr__(self, "times", t)

    def active(self, t: float) -> bool:
        return self.times[0] <= t <= self.times[-1]

    def primitive_at(self, t: float) -> ScenePrimitive:
        ts = self.times
        if t <= ts[0]:
            pose = self.poses[0]
        elif t >= ts[-1]:
            pose = self.poses[-1]
        else:
            i = int(np.searchsorted(ts, t, side="right")) - 1
            f = (t - ts[i]) / (ts[i + 1] - ts[i])
            a, b = self.poses[i], self.poses[i + 1]
            pose = RigidTransform(
                a.rotation, a.translation + f * (b.translation - a.translation)
            )
        return replace(self.primitive, pose=pose)


# ---------------------------------------------------------------------------
# the simulated cell


@dataclass
class CarriedObject:
    size: tuple[float, float, float]
    grasp_offset: RigidTransform  # object pose in the gripper frame


class CellSim:
    """Kinematic cell state: robot, carried object, statics, intrusions.

    ``step`` advances the wall clock always and the robot trajectory clock
    only while robot motion is allowed, which is how the session gates the
    arm without disturbing operator-side events.
    """

    def __init__(self, chain: KinematicChain, q_home, table_z: float = 0.0):
        self.chain = chain
        self.table_z = table_z
        self.q = np.asarray(q_home, dtype=float).copy()
        self.time = 0.0
        self.trajectory: Trajectory | None = None
        self.traj_clock = 0.0
        self.statics: list[ScenePrimitive] = []
        self.intrusions: list[IntrusionEvent] = []
        self.carried: CarriedObject | None = None
        self._update_kinematics()

    def _update_kinematics(self) -> None:
        self.frames, self.control_points = forward_kinematics(self.chain, self.q)

    @property
    def gripper_frame(self) -> RigidTransform:
        return self.frames[-1]

    def set_trajectory(self, traj: Trajectory | None) -> None:
        self.trajectory = traj
        self.traj_clock = 0.0
        if traj is not None:
            self.q = traj.at(0.0)
            self._update_kinematics()

    def trajectory_done(self) -> bool:
        return self.trajectory is None or self.traj_clock >= self.trajectory.duration

    def attach_object(self, size, grasp_offset: RigidTransform | None = None) -> None:
        self.carried = CarriedObject(
            tuple(float(s) for s in size),
            grasp_offset or RigidTransform.identity(),
        )

    def release_object(self, leave_in_scene: bool = False) -> None:
        if self.carried and leave_in_scene:
            self.statics.append(self.carried_primitive())
        self.carried = None

    def carried_primitive(self) -> ScenePrimitive:
        if self.carried is None:
            raise ValueError("no object is grasped")
        pose = self.gripper_frame.compose(self.carried.grasp_offset)
        return ScenePrimitive("box", pose, self.carried.size, tag="carried-object")

    def add_intrusion(self, event: IntrusionEvent) -> None:
        self.intrusions.append(event)

    def step(self, dt: float, robot_moving: bool = True) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.time += dt
        if robot_moving and self.trajectory is not None:
            self.traj_clock = min(self.traj_clock + dt, self.trajectory.duration)
            self.q = self.trajectory.at(self.traj_clock)
            self._update_kinematics()

    def scene_primitives(self) -> list[ScenePrimitive]:
        prims = chain_capsules(self.chain, self.frames)
        if self.carried is not None:
            prims.append(self.carried_primitive())
        prims.extend(self.statics)
        prims.extend(
            ev.primitive_at(self.time) for ev in self.intrusions if ev.active(self.time)
        )
        return prims

    def object_control_points(self) -> ControlPointSet | None:
        """Corners of the carried object's bounding box, for the zone build."""
        if self.carried is None:
            return None
        return ControlPointSet(box_corner_points(self.carried_primitive()), label="object")


def step(sim: CellSim, dt: float, robot_moving: bool = True) -> CellSim:
    """Advance the cell by dt (mutates and returns the same sim)."""
    sim.step(dt, robot_moving=robot_moving)
    return sim


def load_scene_config(path):
    """Read a declarative scene description (YAML).

    Returns (primitives, trajectories, intrusions). Schema::

        primitives:
          - {shape: sphere, center: [x, y, z], radius: r, tag: static}
          - {shape: box, center: [x, y, z], size: [sx, sy, sz], tag: static}
          - {shape: capsule, from: [x, y, z], to: [x, y, z], radius: r}
        trajectories:
          - {name: sweep, times: [...], waypoints: [[q...], ...]}
        intrusions:
          - {radius: r, length: l, times: [...], positions: [[x, y, z], ...]}
    """
    import yaml

    raw = yaml.safe_load(open(path, "r", encoding="utf-8"))
    primitives: list[ScenePrimitive] = []
    for p in raw.get("primitives", ()):
        shape = p["shape"]
        tag = p.get("tag", "static")
        if shape == "sphere":
            primitives.append(
                ScenePrimitive("sphere", RigidTransform.from_translation(p["center"]),
                               (float(p["radius"]),), tag)
            )
        elif shape == "box":
            primitives.append(box_at(p["center"], p["size"], tag=tag))
        elif shape == "capsule":
            primitives.append(capsule_between(p["from"], p["to"], float(p["radius"]), tag=tag))
        else:
            raise ValueError(f"unknown primitive shape {shape!r}")
    trajectories = {
        str(t["name"]): Trajectory(t["times"], t["waypoints"])
        for t in raw.get("trajectories", ())
    }
    intrusions = []
    for ev in raw.get("intrusions", ()):
        poses = tuple(RigidTransform.from_translation(p) for p in ev["positions"])
        template = ScenePrimitive(
            "capsule",
            poses[0],
            (float(ev["radius"]), float(ev["length"])),
            tag="intrusion",
        )
        intrusions.append(IntrusionEvent(ev["times"], poses, template))
    return primitives, trajectories, intrusions


# ---------------------------------------------------------------------------
# depth stream files


class DepthStreamWriter:
    """Binary depth stream: magic, W, H, frame count, then float32 LE frames."""

    def __init__(self, path, width: int, height: int):
        self.path = path
        self.width = width
        self.height = height
        self.count = 0
        self._fh = open(path, "wb")
        self._fh.write(STREAM_MAGIC)
        self._fh.write(struct.pack("<III", width, height, 0))

    def append(self, frame: DepthImage) -> None:
        if (frame.width, frame.height) != (self.width, self.height):
            raise ValueError("frame size does not match the stream header")
        self._fh.write(frame.depth.astype("<f4").tobytes())
        self.count += 1

    def close(self) -> None:
        self._fh.seek(len(STREAM_MAGIC) + 8)
        self._fh.write(struct.pack("<I", self.count))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_depth_stream(path) -> tuple[int, int, list[np.ndarray]]:
    """Read a recorded stream. Returns (width, height, frames).

    A corrupt header raises; a truncated body raises after collecting the
    complete frames, with the partial list attached as ``exc.frames``.
    """
    with open(path, "rb") as fh:
        head = fh.read(len(STREAM_MAGIC) + 12)
        if len(head) < len(STREAM_MAGIC) + 12 or head[: len(STREAM_MAGIC)] != STREAM_MAGIC:
            raise ValueError("not a depth stream file (bad header)")
        width, height, count = struct.unpack("<III", head[len(STREAM_MAGIC):])
        frames: list[np.ndarray] = []
        frame_bytes = width * height * 4
        for _ in range(count):
            raw = fh.read(frame_bytes)
            if len(raw) < frame_bytes:
                err = ValueError(
                    f"depth stream truncated: {len(frames)} of {count} frames readable"
                )
                err.frames = frames  # type: ignore[attr-defined]
                raise err
            frames.append(
                np.frombuffer(raw, dtype="<f4").reshape(height, width).astype(np.float32)
            )
    return width, height, frames
