"""Poses, the pinhole camera model and back-projection.

World frame: y is up, planar worlds live in the x-z plane. A pose's rotation is
a pure yaw about +y; at heading 0 the camera frame coincides with the world
frame, so the optical axis is +z and the image u-axis points along +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

UP = np.array([0.0, 1.0, 0.0])


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians to [-pi, pi)."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def heading_rotation(heading: float) -> np.ndarray:
    """World-from-camera rotation for a yaw of ``heading`` about +y.

    Columns are the camera x, y and z axes expressed in the world frame; the
    x-axis is ``UP x forward`` so the construction matches the viewpoint frame
    built in :mod:`frontiernav.grounding`.
    """
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True)
class Pose:
    position: tuple[float, float, float]
    heading: float = 0.0

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3:
            raise InvalidInputError(f"position must be a 3-vector, got {self.position!r}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    @classmethod
    def planar(cls, x: float, z: float, heading: float = 0.0, height: float = 0.0) -> "Pose":
        return cls((x, height, z), heading)

    @property
    def xz(self) -> tuple[float, float]:
        return (self.position[0], self.position[2])

    @property
    def forward(self) -> np.ndarray:
        return np.array([math.sin(self.heading), 0.0, math.cos(self.heading)])

    def rotation(self) -> np.ndarray:
        return heading_rotation(self.heading)

    def with_position(self, position) -> "Pose":
        return Pose(tuple(position), self.heading)

    def with_heading(self, heading: float) -> "Pose":
        return Pose(self.position, heading)


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    max_depth: float = 3.5

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInputError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidInputError("principal point must lie inside the image")
        if not self.max_depth > 0:
            raise InvalidInputError("max_depth must be positive")

    @classmethod
    def from_fov(
        cls, width: int = 160, height: int = 120, hfov_deg: float = 79.0, max_depth: float = 3.5
    ) -> "CameraModel":
        """Square-pixel camera with the principal point on the centre column."""
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0, width=width, height=height, max_depth=max_depth)

    @property
    def hfov(self) -> float:
        """Horizontal field of view in radians, measured over the pixel edges."""
        return math.atan(self.cx / self.fx) + math.atan((self.width - self.cx) / self.fx)

    def column_directions(self) -> np.ndarray:
        """Camera-frame ray directions, one per column, scaled so that z = 1."""
        u = np.arange(self.width, dtype=float)
        dirs = np.zeros((self.width, 3))
        dirs[:, 0] = (u - self.cx) / self.fx
        dirs[:, 2] = 1.0
        return dirs


def project(point, camera: CameraModel, pose: Pose) -> tuple[float, float, float]:
    """Pinhole projection of a world point to ``(u, v, depth)``.

    ``depth`` is the camera-frame z coordinate; points at or behind the image
    plane have no projection and raise.
    """
    cam = pose.rotation().T @ (np.asarray(point, dtype=float) - np.asarray(pose.position))
    if cam[2] <= 0.0:
        raise InvalidInputError("point is not in front of the camera")
    u = camera.fx * cam[0] / cam[2] + camera.cx
    v = camera.fy * cam[1] / cam[2] + camera.cy
    return (float(u), float(v), float(cam[2]))


def back_project(pixel, depth: float, camera: CameraModel, pose: Pose) -> np.ndarray:
    """World point seen at ``pixel`` with camera-frame depth ``depth``."""
    u, v = float(pixel[0]), float(pixel[1])
    if not (0.0 <= u < camera.width and 0.0 <= v < camera.height):
        raise InvalidInputError(f"pixel {(u, v)} outside a {camera.width}x{camera.height} image")
    if not (0.0 < depth <= camera.max_depth):
        raise InvalidInputError(f"depth {depth} outside (0, {camera.max_depth}]")
    ray = np.array([(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0])
    return np.asarray(pose.position) + pose.rotation() @ (depth * ray)


def euclidean_distance(a, b) -> float:
    return math.dist(tuple(a), tuple(b))
