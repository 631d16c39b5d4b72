"""Per-object depth error metrics, optionally bucketed by ground-truth range.

With ``d = log(pred) - log(gt)``:

* ``silog  = 100 * sqrt(mean(d**2) - mean(d)**2)``
* ``abs_rel = 100 * mean(|pred - gt| / gt)``
* ``sq_rel  = 100 * mean((pred - gt)**2 / gt)``
* ``irmse   = 1000 * sqrt(mean((1/pred - 1/gt)**2))``  (1/km)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError

DEFAULT_RANGES = ((0.0, 10.0), (0.0, 20.0), (0.0, 30.0), (0.0, 40.0))
CSV_HEADER = ("range_lo", "range_hi", "count", "silog", "abs_rel", "sq_rel", "irmse")


@dataclass(frozen=True)
class DepthErrorStats:
    silog: float
    abs_rel: float
    sq_rel: float
    irmse: float
    count: int
    range: tuple = (0.0, math.inf)

    def as_row(self) -> dict:
        d = asdict(self)
        lo, hi = d.pop("range")
        return {"range_lo": lo, "range_hi": hi, **{k: d[k] for k in CSV_HEADER[2:]}}


def depth_errors(pred, gt, range_=(0.0, math.inf)) -> DepthErrorStats:
    pred = np.asarray(pred, dtype=float).ravel()
    gt = np.asarray(gt, dtype=float).ravel()
    if pred.shape != gt.shape:
        raise InputError(f"length mismatch: {pred.size} predictions vs {gt.size} ground truths")
    if pred.size == 0:
        raise InputError("need at least one depth pair")
    if not (np.all(pred > 0) and np.all(gt > 0)):
        raise InputError("depths must be strictly positive")
    d = np.log(pred) - np.log(gt)
    # clamp tiny negative variance from rounding
    var = max(0.0, float(np.mean(d * d) - np.mean(d) ** 2))
    diff = pred - gt
    return DepthErrorStats(
        silog=100.0 * math.sqrt(var),
        abs_rel=100.0 * float(np.mean(np.abs(diff) / gt)),
        sq_rel=100.0 * float(np.mean(diff * diff / gt)),
        irmse=1000.0 * math.sqrt(float(np.mean((1.0 / pred - 1.0 / gt) ** 2))),
        count=int(pred.size),
        range=tuple(range_),
    )


def bucketed_depth_errors(pairs, ranges=DEFAULT_RANGES) -> list:
    """Stats per range over ``(pred, gt, gt_depth)`` triples with ``lo <= gt_depth < hi``.

    Empty buckets report ``count = 0`` and zero metrics.
    """
    arr = np.asarray(list(pairs), dtype=float).reshape(-1, 3)
    out = []
    for lo, hi in ranges:
        sel = arr[(arr[:, 2] >= lo) & (arr[:, 2] < hi)]
        if len(sel) == 0:
            out.append(DepthErrorStats(0.0, 0.0, 0.0, 0.0, 0, (lo, hi)))
        else:
            out.append(depth_errors(sel[:, 0], sel[:, 1], (lo, hi)))
    return out
