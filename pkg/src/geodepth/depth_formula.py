"""Depth of an object from its projected height, 3D height, pose and camera.

Forward model
-------------
With the bottom centre at depth ``z`` and ``y = z * tan(beta)``, the
projected box height pairs the far/near corner depths ``z -+ dz`` with the
two vertical corner offsets ``(dy_hi, dy_lo)``::

    h = f_v * (y + dy_hi) / (z - dz) - f_v * (y + dy_lo) / (z + dz)

Two offset conventions are supported:

``"y_down"`` (default)
    ``(dy_hi, dy_lo) = (0, -H)``. The top face sits at ``y - H``, consistent
    with :mod:`geodepth.box_geometry`. For boxes entirely below the horizon
    (``y >= H``) the forward model equals the exact corner-based height.
``"plus_h"``
    ``(dy_hi, dy_lo) = (H, 0)``, the vertical offsets taken as ``{0, +H}``.

Clearing denominators gives ``z**2 - b*z - c = 0`` with
``b = (f_v / h) * (2 * tan(beta) * dz + H)`` and
``c = dz**2 + s * H * f_v * dz / h`` where ``s = dy_hi + dy_lo`` over ``H``
(-1 for ``y_down``, +1 for ``plus_h``). See docs/DEPTH_DERIVATION.md.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .box_geometry import Box3D, bottom_center_pixel, delta_z_max, project_box
from .camera import CalibratedCamera, beta_from_pixel
from .errors import GeometryDomainError
from .parallel import parallel_map

CONVENTIONS = {"y_down": -1.0, "plus_h": 1.0}
DEFAULT_CONVENTION = "y_down"
MIN_PIXEL_HEIGHT = 0.5


def _offset_sign(convention: str) -> float:
    try:
        return CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown convention {convention!r}; expected one of {sorted(CONVENTIONS)}") from None


@dataclass(frozen=True)
class GeometryObservation:
    h: float
    beta: float
    H: float
    dz: float
    f_v: float

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryDomainError(f"projected height must be positive, got h={self.h!r}")
        if not self.H > 0:
            raise GeometryDomainError(f"3D height must be positive, got H={self.H!r}")
        if not self.dz >= 0:
            raise GeometryDomainError(f"dz must be non-negative, got {self.dz!r}")
        if not self.f_v > 0:
            raise GeometryDomainError(f"f_v must be positive, got {self.f_v!r}")


@dataclass(frozen=True)
class DepthV2Scale:
    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise GeometryDomainError(f"scale factor must be positive, got k={self.k!r}")


def height_forward(z, beta, H, dz, f_v, convention=DEFAULT_CONVENTION) -> float:
    """Projected 2D height (pixels) of a box at depth ``z``."""
    s = _offset_sign(convention)
    if not z > dz:
        raise GeometryDomainError(f"z={z!r} must exceed dz={dz!r}; the near corner would be at or behind the camera")
    y = z * math.tan(beta)
    if s < 0:
        hi, lo = 0.0, -H
    else:
        hi, lo = H, 0.0
    return f_v * (y + hi) / (z - dz) - f_v * (y + lo) / (z + dz)


def _check_h(h, minimum=0.0):
    if not h > minimum:
        raise GeometryDomainError(f"projected height h={h!r} px must exceed {minimum} px")


def depth_full(obs: GeometryObservation, convention=DEFAULT_CONVENTION) -> float:
    """Positive root of the depth quadratic; exact inverse of :func:`height_forward`."""
    s = _offset_sign(convention)
    _check_h(obs.h, MIN_PIXEL_HEIGHT)
    ratio = obs.f_v / obs.h
    b = ratio * (2.0 * math.tan(obs.beta) * obs.dz + obs.H)
    c = obs.dz * obs.dz + s * obs.H * ratio * obs.dz
    disc = b * b + 4.0 * c
    if disc < 0:
        raise GeometryDomainError(
            f"negative discriminant {disc!r} for h={obs.h}, beta={obs.beta}, H={obs.H}, dz={obs.dz}, f_v={obs.f_v}"
        )
    z = 0.5 * b + 0.5 * math.sqrt(disc)
    if not z > 0:
        raise GeometryDomainError(f"no positive depth for h={obs.h}, beta={obs.beta}, H={obs.H}, dz={obs.dz}")
    return z


def depth_v1(h, beta, H, dz, f_v) -> float:
    """Linear term of the full formula alone."""
    _check_h(h)
    return (f_v / h) * (2.0 * math.tan(beta) * dz + H)


def depth_v2(h, H, scale) -> float:
    """``k * H / h``; ``scale`` may be a :class:`DepthV2Scale` or a bare number."""
    _check_h(h)
    k = scale.k if isinstance(scale, DepthV2Scale) else DepthV2Scale(float(scale)).k
    return k * H / h


def observe_box(box: Box3D, cam: CalibratedCamera) -> GeometryObservation:
    """Build the formula inputs for a box from its exact corner projection."""
    h = project_box(box, cam).h
    beta = beta_from_pixel(bottom_center_pixel(box, cam).v, cam)
    return GeometryObservation(h, beta, box.H, delta_z_max(box.W, box.L, box.ry), cam.f_v)


COMPARE_HEADER = (
    "index", "z_true", "h", "beta", "dz", "z_full", "z_v1", "z_v2",
    "abs_err_full", "abs_err_v1", "abs_err_v2", "rel_err_full", "rel_err_v1", "rel_err_v2", "error",
)


@dataclass(frozen=True)
class FormulaComparison:
    index: int
    z_true: float
    h: float = math.nan
    beta: float = math.nan
    dz: float = math.nan
    z_full: float = math.nan
    z_v1: float = math.nan
    z_v2: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def abs_err(self, which):
        return abs(getattr(self, f"z_{which}") - self.z_true)

    def rel_err(self, which):
        return self.abs_err(which) / self.z_true

    def as_row(self) -> dict:
        row = {name: getattr(self, name) for name in ("index", "z_true", "h", "beta", "dz", "z_full", "z_v1", "z_v2")}
        for which in ("full", "v1", "v2"):
            row[f"abs_err_{which}"] = self.abs_err(which)
            row[f"rel_err_{which}"] = self.rel_err(which)
        row["error"] = self.error
        return {k: row[k] for k in COMPARE_HEADER}


def _compare_one(args):
    index, box, cam, k, convention = args
    try:
        obs = observe_box(box, cam)
        return FormulaComparison(
            index, box.z, obs.h, obs.beta, obs.dz,
            depth_full(obs, convention),
            depth_v1(obs.h, obs.beta, obs.H, obs.dz, obs.f_v),
            depth_v2(obs.h, obs.H, k),
        )
    except GeometryDomainError as exc:
        return FormulaComparison(index, box.z, error=str(exc))


def compare_formulas(boxes, cam: CalibratedCamera, k=None, convention=DEFAULT_CONVENTION, jobs=1):
    """Recover each box's depth with the full, v1 and v2 formulas.

    ``h`` comes from the exact corner projection and ``beta`` from the
    projected bottom centre. ``k`` defaults to ``cam.f_v``. Boxes that fail
    a domain check produce a row with ``error`` set instead of aborting.
    """
    k = cam.f_v if k is None else k
    return parallel_map(_compare_one, [(i, b, cam, k, convention) for i, b in enumerate(boxes)], jobs)
