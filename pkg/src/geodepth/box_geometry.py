"""3D boxes, their corners, projected 2D boxes and angle conventions.

A :class:`Box3D` is ``(W, H, L, x, y, z, r_y)`` with ``(x, y, z)`` the
*bottom* centre in the camera frame (y down). The box extends from ``y - H``
(top face) to ``y`` (bottom face). Yaw ``r_y`` rotates about the camera y
axis; at ``r_y = 0`` the length axis is aligned with camera x.

Corner order
------------
Corners are enumerated by the sign triple ``(sx, sy, sz)`` in lexicographic
order over ``{-1, +1}^3``::

    index  sx  sy  sz
      0    -1  -1  -1
      1    -1  -1  +1
      2    -1  +1  -1
      3    -1  +1  +1
      4    +1  -1  -1
      5    +1  -1  +1
      6    +1  +1  -1
      7    +1  +1  +1

``sx`` picks the end along the length axis, ``sz`` the side along the width
axis and ``sy = -1`` the top face (``dy = -H``), ``sy = +1`` the bottom face
(``dy = 0``). Offsets are::

    dx = sx * L/2 * cos(r_y) + sz * W/2 * sin(r_y)
    dz = -sx * L/2 * sin(r_y) + sz * W/2 * cos(r_y)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .camera import MIN_DEPTH, CalibratedCamera, beta_from_pixel, project_point, project_points
from .errors import GeometryDomainError

_SIGNS = np.array([(sx, sy, sz) for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)


def normalize_angle(a: float) -> float:
    """Wrap an angle into ``[-pi, pi)``; in-range values are returned untouched."""
    if -math.pi <= a < math.pi:
        return a
    r = math.fmod(a + math.pi, 2.0 * math.pi)
    if r < 0:
        r += 2.0 * math.pi
    r -= math.pi
    # fmod can land exactly on pi after the shift for inputs like 3*pi
    return -math.pi if r >= math.pi else r


def _check_dims(**dims):
    for name, val in dims.items():
        if not val > 0:
            raise GeometryDomainError(f"box dimension {name} must be positive, got {val!r}")


@dataclass(frozen=True)
class Box3D:
    W: float
    H: float
    L: float
    x: float
    y: float
    z: float
    ry: float = 0.0

    def __post_init__(self):
        _check_dims(W=self.W, H=self.H, L=self.L)
        for name in ("W", "H", "L", "x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "ry", normalize_angle(float(self.ry)))

    @property
    def bottom_center(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def translated(self, dx=0.0, dy=0.0, dz=0.0) -> "Box3D":
        return Box3D(self.W, self.H, self.L, self.x + dx, self.y + dy, self.z + dz, self.ry)

    def footprint(self) -> np.ndarray:
        """Bird's-eye footprint as a counter-clockwise ``(4, 2)`` polygon in (x, z)."""
        c, s = math.cos(self.ry), math.sin(self.ry)
        local = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float) * [self.L / 2, self.W / 2]
        x = self.x + local[:, 0] * c + local[:, 1] * s
        z = self.z - local[:, 0] * s + local[:, 1] * c
        poly = np.stack([x, z], axis=1)
        return poly if _signed_area(poly) >= 0 else poly[::-1].copy()

    @property
    def volume(self) -> float:
        return self.W * self.H * self.L


def _signed_area(poly) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned image box stored as centre ``(u, v)`` and size ``(w, h)``."""

    u: float
    v: float
    w: float
    h: float
    kind: str = "annotated"

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise GeometryDomainError(f"2D box size must be non-negative, got w={self.w}, h={self.h}")
        if self.kind not in ("annotated", "projected"):
            raise ValueError(f"unknown Box2D kind {self.kind!r}")

    @classmethod
    def from_ltrb(cls, left, top, right, bottom, kind="annotated") -> "Box2D":
        return cls((left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top, kind)

    @property
    def ltrb(self) -> tuple:
        return (self.u - self.w / 2.0, self.v - self.h / 2.0, self.u + self.w / 2.0, self.v + self.h / 2.0)


class CornerSet(NamedTuple):
    corners: np.ndarray  # (8, 3) camera frame
    offsets: np.ndarray  # (8, 3) relative to the bottom centre


class AngleSet(NamedTuple):
    ry: float
    theta: float
    alpha: float
    beta: float


def corner_offsets(W, H, L, ry) -> np.ndarray:
    """``(8, 3)`` corner offsets from the bottom centre, in the documented order."""
    _check_dims(W=W, H=H, L=L)
    c, s = math.cos(ry), math.sin(ry)
    sx, sy, sz = _SIGNS[:, 0], _SIGNS[:, 1], _SIGNS[:, 2]
    dx = sx * (L / 2.0) * c + sz * (W / 2.0) * s
    dy = np.where(sy < 0, -float(H), 0.0)
    dz = -sx * (L / 2.0) * s + sz * (W / 2.0) * c
    return np.stack([dx, dy, dz], axis=1)


def corners_camera(box: Box3D) -> CornerSet:
    off = corner_offsets(box.W, box.H, box.L, box.ry)
    return CornerSet(box.bottom_center + off, off)


def delta_z_max(W, L, ry) -> float:
    """Largest depth offset of any corner from the bottom centre."""
    _check_dims(W=W, L=L)
    return 0.5 * abs(L * math.sin(ry)) + 0.5 * abs(W * math.cos(ry))


def project_box(box: Box3D, cam: CalibratedCamera) -> Box2D:
    """Tight pixel rectangle around the eight projected corners.

    Every corner must be in front of the camera; there is no clipping.
    """
    corners = corners_camera(box).corners
    if np.any(corners[:, 2] < MIN_DEPTH):
        raise GeometryDomainError(f"box at z={box.z} has corners behind the camera; cannot project")
    uvz = project_points(corners, cam)
    left, right = float(uvz[:, 0].min()), float(uvz[:, 0].max())
    top, bottom = float(uvz[:, 1].min()), float(uvz[:, 1].max())
    return Box2D.from_ltrb(left, top, right, bottom, kind="projected")


def bottom_center_pixel(box: Box3D, cam: CalibratedCamera):
    return project_point(box.bottom_center, cam)


def viewing_angle(x, z) -> float:
    return math.atan2(x, z)


def alpha_from_ry(ry, x, z) -> float:
    """Observation angle from global yaw and the bottom-centre position."""
    if not z > 0:
        raise GeometryDomainError(f"observation angle undefined for z={z!r} <= 0")
    return normalize_angle(ry - math.atan2(x, z))


def ry_from_alpha(alpha, x, z) -> float:
    if not z > 0:
        raise GeometryDomainError(f"yaw undefined for z={z!r} <= 0")
    return normalize_angle(alpha + math.atan2(x, z))


def angle_set(box: Box3D, cam: CalibratedCamera) -> AngleSet:
    v_o = bottom_center_pixel(box, cam).v
    return AngleSet(box.ry, viewing_angle(box.x, box.z), alpha_from_ry(box.ry, box.x, box.z), beta_from_pixel(v_o, cam))
