"""Camera models and coordinate transforms for the workspace model.

Coordinate conventions
======================
World frame = robot base frame (right-handed, meters):
  X/Y span the workspace table, Z points up, table surface at Z = 0.

Camera frame (standard computer vision):
  X right in the image, Y down, Z forward along the optical axis.
  ``CameraModel.extrinsics`` is the camera pose *in the world frame*,
  i.e. world_point = R @ camera_point + t.

Image frame:
  u right (column), v down (row), units pixels. Depth values are the
  camera-frame Z coordinate in meters (not ray length). Pixel centers sit
  at integer coordinates; real-valued projections are rasterized by
  rounding half-up.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

ORTHO_TOL = 1e-9


class PointBehindCamera(ValueError):
    """Raised when a point has non-positive depth along the optical axis."""


class PixelCoord(NamedTuple):
    u: float
    v: float


def _as_vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid transform: rotation (3x3 orthonormal, det +1) + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float)
        t = _as_vec3(self.translation, "translation").copy()
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
            raise ValueError("transform contains non-finite values")
        if np.max(np.abs(r.T @ r - np.eye(3))) > ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation determinant must be +1 (no reflections)")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_translation(t) -> "RigidTransform":
        return RigidTransform(np.eye(3), _as_vec3(t, "t"))

    def apply(self, points) -> np.ndarray:
        """Transform a (3,) point or (N, 3) array of points."""
        p = np.asarray(points, dtype=float)
        if p.shape == (3,):
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Composition: apply ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -(rt @ self.translation))

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (not necessarily unit) axis."""
    a = _as_vec3(axis, "axis")
    n = np.linalg.norm(a)
    if n == 0:
        raise ValueError("axis must be non-zero")
    x, y, z = a / n
    c, s = math.cos(angle), math.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class CameraModel:
    intrinsics: CameraIntrinsics
    extrinsics: RigidTransform  # camera pose in the world (robot) frame


@dataclass
class DepthImage:
    """W x H grid of metric depth values; 0 encodes "no sensor return"."""

    width: int
    height: int
    depth: np.ndarray = field(repr=False)
    frame_index: int = 0

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float32)
        if d.shape != (self.height, self.width):
            raise ValueError(
                f"depth array shape {d.shape} != (height, width) = "
                f"({self.height}, {self.width})"
            )
        if not np.all(np.isfinite(d)):
            raise ValueError("depth values must be finite")
        if np.any(d < 0):
            raise ValueError("depth values must be non-negative")
        self.depth = d

    def copy(self) -> "DepthImage":
        return DepthImage(self.width, self.height, self.depth.copy(), self.frame_index)


def project_world_to_model(point, cam: CameraModel) -> tuple[PixelCoord, float]:
    """Pin-hole projection of a world point into the workspace-model image.

    Returns the real-valued pixel and the camera-frame depth. Raises
    PointBehindCamera when the point is on or behind the image plane.
    """
    p = _as_vec3(point, "point")
    if not np.all(np.isfinite(p)):
        raise ValueError("point contains NaN or infinite values")
    ext = cam.extrinsics
    pc = ext.rotation.T @ (p - ext.translation)
    z = pc[2]
    if z <= 0.0:
        raise PointBehindCamera(f"point depth {z:.6g} is not positive")
    k = cam.intrinsics
    u = k.fx * pc[0] / z + k.cx
    v = k.fy * pc[1] / z + k.cy
    return PixelCoord(u, v), float(z)


def project_points(points, cam: CameraModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch projection. Returns (pixels (N,2), depths (N,), in_front (N,) bool).

    Points behind the camera get in_front=False instead of raising.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    ext = cam.extrinsics
    pc = (p - ext.translation) @ ext.rotation
    z = pc[:, 2]
    in_front = np.isfinite(z) & (z > 0.0)
    k = cam.intrinsics
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * pc[:, 0] / z + k.cx
        v = k.fy * pc[:, 1] / z + k.cy
    return np.stack([u, v], axis=1), z, in_front


def backproject_model_to_world(pixel, depth: float, cam: CameraModel) -> np.ndarray:
    """Inverse of project_world_to_model: pixel + camera depth -> world point."""
    if depth <= 0.0:
        raise ValueError(f"depth must be positive, got {depth}")
    u, v = float(pixel[0]), float(pixel[1])
    k = cam.intrinsics
    pc = np.array([(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth])
    ext = cam.extrinsics
    return ext.rotation @ pc + ext.translation


def backproject_pixel_to_plane(pixel, cam: CameraModel, plane_z: float = 0.0) -> np.ndarray:
    """Intersect the pixel's viewing ray with the horizontal plane z = plane_z."""
    u, v = float(pixel[0]), float(pixel[1])
    k = cam.intrinsics
    d_cam = np.array([(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0])
    ext = cam.extrinsics
    d = ext.rotation @ d_cam
    o = ext.translation
    if abs(d[2]) < 1e-12:
        raise ValueError("viewing ray is parallel to the workspace plane")
    s = (plane_z - o[2]) / d[2]
    if s <= 0.0:
        raise ValueError("workspace plane is behind the camera for this pixel")
    hit = o + s * d
    hit[2] = plane_z
    return hit


def transform_to_holo_frame(
    point,
    marker_in_robot: RigidTransform,
    holo_in_marker: RigidTransform,
) -> np.ndarray:
    """Map a robot-frame point into the headset display frame.

    Applies the robot->marker transform first, then marker->headset.
    """
    return holo_in_marker.apply(marker_in_robot.apply(_as_vec3(point, "point")))


def make_synthetic_camera(
    height_m: float, width: int, height: int, fov_rad: float
) -> CameraModel:
    """Ceiling camera looking straight down at the table, X aligned with world X.

    ``fov_rad`` is the full horizontal field of view. Deterministic: equal
    specs produce equal models.
    """
    if height_m <= 0:
        raise ValueError("camera height must be positive")
    if not (0.0 < fov_rad < math.pi):
        raise ValueError("fov must be in (0, pi)")
    if width < 1 or height < 1:
        raise ValueError("image size must be at least 1x1")
    f = (width / 2.0) / math.tan(fov_rad / 2.0)
    intr = CameraIntrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0,
                            width=width, height=height)
    # 180 deg about X: camera Z points along world -Z (down), X stays aligned.
    rot = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    ext = RigidTransform(rot, np.array([0.0, 0.0, height_m]))
    return CameraModel(intr, ext)


def load_camera_config(path) -> CameraModel:
    """Read a camera from a plain key-value text file.

    Keys: fx, fy, cx, cy, width, height, rotation (9 row-major values),
    translation (3 values). '#' starts a comment; blank lines ignored.
    """
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    required = {"fx", "fy", "cx", "cy", "width", "height", "rotation", "translation"}
    missing = required - values.keys()
    if missing:
        raise ValueError(f"camera config missing keys: {sorted(missing)}")
    intr = CameraIntrinsics(
        fx=float(values["fx"]),
        fy=float(values["fy"]),
        cx=float(values["cx"]),
        cy=float(values["cy"]),
        width=int(values["width"]),
        height=int(values["height"]),
    )
    rot = np.array([float(x) for x in values["rotation"].split()], dtype=float)
    if rot.size != 9:
        raise ValueError("rotation must have 9 row-major values")
    tr = np.array([float(x) for x in values["translation"].split()], dtype=float)
    if tr.size != 3:
        raise ValueError("translation must have 3 values")
    return CameraModel(intr, RigidTransform(rot.reshape(3, 3), tr))


def save_camera_config(path, cam: CameraModel) -> None:
    k, e = cam.intrinsics, cam.extrinsics
    rot = " ".join(repr(float(x)) for x in e.rotation.reshape(-1))
    tr = " ".join(repr(float(x)) for x in e.translation)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"fx = {k.fx!r}\nfy = {k.fy!r}\ncx = {k.cx!r}\ncy = {k.cy!r}\n"
            f"width = {k.width}\nheight = {k.height}\n"
            f"rotation = {rot}\ntranslation = {tr}\n"
        )
