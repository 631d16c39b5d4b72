"""Pinhole camera model.

Camera frame is right-handed: x right, y down, z forward. Pixel ``v`` grows
with ``y``. A calibration may carry the residual translation column of a
3x4 projection matrix (``t_proj``); with ``t_proj == 0`` projection is the
plain ``K @ p / z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GeometryDomainError

MIN_DEPTH = 1e-6  # metres


@dataclass(frozen=True)
class CalibratedCamera:
    f_u: float
    f_v: float
    c_u: float
    c_v: float
    t_proj: tuple = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        if not (self.f_u > 0 and self.f_v > 0):
            raise GeometryDomainError(f"focal lengths must be positive, got f_u={self.f_u}, f_v={self.f_v}")
        t = tuple(float(c) for c in self.t_proj)
        if len(t) != 3:
            raise GeometryDomainError("t_proj must have three components")
        object.__setattr__(self, "t_proj", t)
        for name in ("f_u", "f_v", "c_u", "c_v"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_projection_matrix(cls, P) -> "CalibratedCamera":
        """Extract intrinsics from a 3x4 (or 12-element) projection matrix."""
        P = np.asarray(P, dtype=float).reshape(3, 4)
        return cls(P[0, 0], P[1, 1], P[0, 2], P[1, 2], (P[0, 3], P[1, 3], P[2, 3]))

    @property
    def intrinsic_matrix(self) -> np.ndarray:
        return np.array([[self.f_u, 0.0, self.c_u], [0.0, self.f_v, self.c_v], [0.0, 0.0, 1.0]])

    @property
    def projection_matrix(self) -> np.ndarray:
        P = np.zeros((3, 4))
        P[:, :3] = self.intrinsic_matrix
        P[:, 3] = self.t_proj
        return P


class PixelPoint(NamedTuple):
    u: float
    v: float
    z: float


def _check_depth(z, what="point"):
    if not z >= MIN_DEPTH:
        raise GeometryDomainError(f"{what} has depth z={z!r} m; it lies behind (or on) the camera plane")


def project_point(p, cam: CalibratedCamera) -> PixelPoint:
    """Project a camera-frame point (metres) to pixel coordinates.

    The homogeneous scale is ``z + t_proj[2]`` so that the result equals a
    full 3x4 matrix multiply; for intrinsic-only cameras it is just ``z``.
    """
    x, y, z = (float(c) for c in p)
    _check_depth(z)
    tx, ty, tz = cam.t_proj
    w = z + tz
    _check_depth(w, "homogeneous scale of point")
    return PixelPoint((cam.f_u * x + cam.c_u * z + tx) / w, (cam.f_v * y + cam.c_v * z + ty) / w, z)


def project_points(points, cam: CalibratedCamera) -> np.ndarray:
    """Vectorised :func:`project_point`; returns an ``(N, 3)`` array of (u, v, z)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    if pts.size and not np.all(z >= MIN_DEPTH):
        bad = int(np.argmin(z))
        _check_depth(float(z[bad]), f"point #{bad}")
    tx, ty, tz = cam.t_proj
    w = z + tz
    out = np.empty_like(pts)
    out[:, 0] = (cam.f_u * pts[:, 0] + cam.c_u * z + tx) / w
    out[:, 1] = (cam.f_v * pts[:, 1] + cam.c_v * z + ty) / w
    out[:, 2] = z
    return out


def backproject_pixel(u, v, z, cam: CalibratedCamera) -> np.ndarray:
    """Camera-frame point that projects to pixel ``(u, v)`` at depth ``z``."""
    z = float(z)
    _check_depth(z, "pixel")
    tx, ty, tz = cam.t_proj
    w = z + tz
    return np.array([(u * w - cam.c_u * z - tx) / cam.f_u, (v * w - cam.c_v * z - ty) / cam.f_v, z])


def backproject_depth_map(depth, cam: CalibratedCamera, valid=None) -> np.ndarray:
    """Turn an ``(H, W)`` depth map into an ``(H, W, 3)`` map of camera-frame points.

    Cell ``(r, c)`` is treated as pixel ``(u=c, v=r)``. Cells that are masked
    out, non-finite or not strictly in front of the camera become NaN.
    """
    d = np.asarray(depth, dtype=float)
    if d.ndim != 2 or d.size == 0:
        raise ValueError(f"depth map must be a non-empty 2-D grid, got shape {d.shape}")
    ok = np.isfinite(d) & (d >= MIN_DEPTH)
    if valid is not None:
        ok &= np.asarray(valid, dtype=bool)
    tx, ty, tz = cam.t_proj
    ok &= (d + tz) >= MIN_DEPTH
    rows, cols = np.indices(d.shape, dtype=float)
    w = d + tz
    out = np.stack(
        [(cols * w - cam.c_u * d - tx) / cam.f_u, (rows * w - cam.c_v * d - ty) / cam.f_v, d], axis=-1
    )
    out[~ok] = np.nan
    return out


def beta_from_pixel(v_o, cam: CalibratedCamera) -> float:
    """Vertical angle between the ray through image row ``v_o`` and the horizontal plane."""
    return math.atan((v_o - cam.c_v) / cam.f_v)
