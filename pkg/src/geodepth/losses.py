"""Training objectives as scalar functions returning value and analytic gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryDomainError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class FocalConfig:
    alpha_f: float = 2.0
    beta_f: float = 4.0

    def __post_init__(self):
        if self.alpha_f < 0 or self.beta_f < 0:
            raise ValueError("focal exponents must be non-negative")


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0


@dataclass(frozen=True)
class UncertainDepthPrediction:
    d_pred: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise GeometryDomainError(f"sigma must be positive, got {self.sigma!r}")


def focal_variant(p, y, cfg: FocalConfig = FocalConfig()):
    """Penalty-reduced focal loss for a heatmap cell.

    Returns ``(loss, dloss_dp)``. ``y == 1`` marks an object centre; other
    ``y`` values are Gaussian-splatted negatives.
    """
    a, b = cfg.alpha_f, cfg.beta_f
    if y == 1:
        if not 0 < p <= 1:
            raise GeometryDomainError(f"p={p!r} outside (0, 1] for a positive location")
        q = 1.0 - p
        loss = -(q**a) * math.log(p)
        grad = (a * q ** (a - 1) * math.log(p) if a != 0 and q > 0 else 0.0) - q**a / p
        return loss + 0.0, grad
    if not 0 <= y <= 1:
        raise GeometryDomainError(f"target y={y!r} outside [0, 1]")
    if not 0 <= p < 1:
        raise GeometryDomainError(f"p={p!r} outside [0, 1) for a negative location")
    w = (1.0 - y) ** b
    log_q = math.log1p(-p)
    loss = -w * p**a * log_q
    grad = -w * ((a * p ** (a - 1) * log_q if a != 0 and p > 0 else 0.0) - p**a / (1.0 - p))
    return loss + 0.0, grad


def uncertainty_l1(pred: UncertainDepthPrediction, d_gt):
    """Laplacian-uncertainty L1 depth loss.

    Returns ``(loss, dloss_dpred, dloss_dsigma)``. The derivative in
    ``d_pred`` at zero residual is taken as 0.
    """
    e = d_gt - pred.d_pred
    s = pred.sigma
    loss = SQRT2 / s * abs(e) + math.log(s)
    d_pred = -SQRT2 / s * float(np.sign(e))
    d_sigma = (s - SQRT2 * abs(e)) / (s * s)
    return loss, d_pred, d_sigma


def optimal_sigma(residual) -> float:
    """Minimiser of :func:`uncertainty_l1` over sigma for a fixed residual."""
    return SQRT2 * abs(residual)


def l1_loss(pred, target) -> float:
    """Sum of absolute differences (used for 2D offsets/sizes and 3D dimensions)."""
    return float(np.sum(np.abs(np.asarray(pred, dtype=float) - np.asarray(target, dtype=float))))


def total_loss(l_c, l_2d, l_3d, w: LossWeights = LossWeights()) -> float:
    return l_c + w.lambda1 * l_2d + w.lambda2 * l_3d


def regression_2d_loss(pred, target) -> float:
    """L1 over the 6-tuple (2D offset x2, 3D offset x2, 2D size x2)."""
    pred, target = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    if pred.shape != (6,) or target.shape != (6,):
        raise ValueError("2D regression targets are 6-tuples")
    return l1_loss(pred, target)


def regression_3d_loss(dims_pred, dims_gt, depth: UncertainDepthPrediction, d_gt) -> float:
    """L1 on the three box dimensions plus the uncertainty-weighted depth term."""
    return l1_loss(dims_pred, dims_gt) + uncertainty_l1(depth, d_gt)[0]
