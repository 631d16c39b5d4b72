"""Synthetic scenes and dataset-level studies of the depth/height relation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .box_geometry import Box3D, alpha_from_ry, corners_camera, delta_z_max, project_box
from .camera import CalibratedCamera, project_points
from .depth_formula import DEFAULT_CONVENTION, GeometryObservation, depth_full
from .errors import ConfigurationError, GeometryDomainError
from .iou import iou_2d
from .kitti_io import FrameCalib, FrameEntry, LabelRecord

KITTI_P2_CAMERA = CalibratedCamera(721.5377, 721.5377, 609.5593, 172.854)
KITTI_IMAGE_SIZE = (1242, 375)  # width, height


@dataclass(frozen=True)
class SyntheticSceneSpec:
    seed: int = 0
    boxes_per_frame: int = 4
    z_range: tuple = (5.0, 60.0)
    x_range: tuple = (-15.0, 15.0)
    y_range: tuple = (1.5, 1.9)  # bottom-centre height below the camera
    yaw_range: tuple = (-math.pi, math.pi)
    dims_mean: tuple = (1.62, 1.53, 3.89)  # W, H, L
    dims_spread: tuple = (0.10, 0.14, 0.42)
    camera: CalibratedCamera = KITTI_P2_CAMERA
    image_size: tuple = KITTI_IMAGE_SIZE
    category: str = "Car"
    decimals: int = 2  # rounding of 3D label values; None keeps full precision

    def __post_init__(self):
        for name in ("z_range", "x_range", "y_range", "yaw_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigurationError(f"{name} is empty: {lo} > {hi}")
        if self.boxes_per_frame < 0:
            raise ConfigurationError("boxes_per_frame must be >= 0")


MAX_ATTEMPTS_PER_BOX = 1000


def fully_visible(box: Box3D, cam: CalibratedCamera, image_size=KITTI_IMAGE_SIZE, min_depth=0.1) -> bool:
    corners = corners_camera(box).corners
    if np.any(corners[:, 2] < min_depth):
        return False
    uv = project_points(corners, cam)
    w, h = image_size
    return bool(np.all(uv[:, 0] >= 0) and np.all(uv[:, 0] < w) and np.all(uv[:, 1] >= 0) and np.all(uv[:, 1] < h))


def _sample_box(rng, spec: SyntheticSceneSpec) -> Box3D:
    W, H, L = (max(0.2, rng.normal(m, s)) for m, s in zip(spec.dims_mean, spec.dims_spread))
    vals = [W, H, L, rng.uniform(*spec.x_range), rng.uniform(*spec.y_range), rng.uniform(*spec.z_range),
            rng.uniform(*spec.yaw_range)]
    if spec.decimals is not None:
        vals = [round(v, spec.decimals) for v in vals]
        vals[:3] = [max(v, 10.0 ** -spec.decimals) for v in vals[:3]]
    return Box3D(*vals)


def _generate_frame(spec: SyntheticSceneSpec, index: int) -> FrameEntry:
    rng = np.random.default_rng([spec.seed, index])
    labels, attempts = [], 0
    budget = MAX_ATTEMPTS_PER_BOX * spec.boxes_per_frame
    while len(labels) < spec.boxes_per_frame:
        attempts += 1
        if attempts > budget:
            raise ConfigurationError(
                f"frame {index}: accepted {len(labels)} of {spec.boxes_per_frame} boxes after {budget} draws; "
                "the scene settings leave almost no fully visible boxes"
            )
        box = _sample_box(rng, spec)
        if not fully_visible(box, spec.camera, spec.image_size):
            continue
        bbox = project_box(box, spec.camera).ltrb
        alpha = alpha_from_ry(box.ry, box.x, box.z)
        labels.append(LabelRecord.from_box3d(spec.category, box, bbox, alpha))
    return FrameEntry(f"{index:06d}", labels, FrameCalib.from_camera(spec.camera))


def generate_scenes(spec: SyntheticSceneSpec, n_frames: int) -> list:
    """Deterministic synthetic frames; every box is fully in view.

    Each frame draws from its own generator seeded by ``(seed, frame index)``
    so output does not depend on how frames are scheduled.
    """
    return [_generate_frame(spec, i) for i in range(n_frames)]


def _labelled_boxes(frames):
    for frame in frames:
        if frame.labels is None or frame.calib is None:
            continue
        cam = frame.calib.camera
        for rec in frame.labels:
            if not rec.ignorable:
                yield frame, rec, cam


# misalignment -------------------------------------------------------------

MISALIGN_BUCKETS = ((0.0, 10.0), (10.0, 20.0), (20.0, 40.0), (40.0, math.inf))
MISALIGN_HEADER = ("range_lo", "range_hi", "count", "mean_iou", "mean_abs_dw", "mean_abs_dh",
                   "mean_abs_du", "mean_abs_dv", "truncated", "skipped")


@dataclass
class MisalignmentBucket:
    range_lo: float
    range_hi: float
    count: int = 0
    mean_iou: float = math.nan
    mean_abs_dw: float = math.nan
    mean_abs_dh: float = math.nan
    mean_abs_du: float = math.nan
    mean_abs_dv: float = math.nan
    truncated: int = 0  # projected box leaves the image; excluded from the means
    skipped: int = 0  # corners behind the camera

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in MISALIGN_HEADER}


def misalignment_report(frames, image_size=KITTI_IMAGE_SIZE, buckets=MISALIGN_BUCKETS) -> list:
    """Compare annotated 2D boxes with the boxes obtained by projecting the 3D labels."""
    samples = defaultdict(list)
    truncated, skipped = defaultdict(int), defaultdict(int)
    any_sample = False
    W, H = image_size
    for _, rec, cam in _labelled_boxes(frames):
        any_sample = True
        z = rec.location[2]
        key = next((b for b in buckets if b[0] <= z < b[1]), None)
        if key is None:
            continue
        try:
            proj = project_box(rec.to_box3d(), cam)
        except GeometryDomainError:
            skipped[key] += 1
            continue
        l, t, r, b = proj.ltrb
        if l < 0 or t < 0 or r > W or b > H:
            truncated[key] += 1
            continue
        ann = rec.box2d
        samples[key].append((iou_2d(ann, proj), abs(ann.w - proj.w), abs(ann.h - proj.h),
                             abs(ann.u - proj.u), abs(ann.v - proj.v)))
    if not any_sample:
        return []
    rows = []
    for key in buckets:
        row = MisalignmentBucket(key[0], key[1], truncated=truncated[key], skipped=skipped[key])
        if samples[key]:
            arr = np.array(samples[key])
            row.count = len(arr)
            row.mean_iou, row.mean_abs_dw, row.mean_abs_dh, row.mean_abs_du, row.mean_abs_dv = (
                float(v) for v in arr.mean(axis=0))
        rows.append(row)
    return rows


# depth spread table ---------------------------------------------------------

@dataclass(frozen=True)
class SpreadCell:
    max: float
    min: float
    count: int

    @property
    def diff(self) -> float:
        return self.max - self.min


@dataclass
class DepthSpreadTable:
    h_buckets: tuple
    H_buckets: tuple
    h_tol: float
    H_tol: float
    use_projected: bool
    cells: dict = field(default_factory=dict)  # (h, H) -> SpreadCell
    average: dict = field(default_factory=dict)  # h -> (mean max, mean min, mean diff, n groups)

    def rows(self) -> list:
        out = []
        for h in self.h_buckets:
            for H in self.H_buckets:
                c = self.cells.get((h, H))
                out.append({"h": h, "H": H, "max": c.max if c else math.nan, "min": c.min if c else math.nan,
                            "diff": c.diff if c else math.nan, "count": c.count if c else 0})
            avg = self.average.get(h)
            out.append({"h": h, "H": "avg", "max": avg[0] if avg else math.nan, "min": avg[1] if avg else math.nan,
                        "diff": avg[2] if avg else math.nan, "count": avg[3] if avg else 0})
        return out


SPREAD_HEADER = ("h", "H", "max", "min", "diff", "count")


def _in_bucket(value, center, tol):
    return center - tol <= value < center + tol


def depth_spread_table(frames, h_buckets=(30.0, 35.0), H_buckets=(1.49, 1.50, 1.51, 1.52),
                       h_tol=0.5, H_tol=0.005, use_projected=True) -> DepthSpreadTable:
    """Max/min/diff of label depth for objects sharing a 2D height and a 3D height.

    Buckets are half-open: ``center - tol <= value < center + tol``. The
    ``average`` column averages, per ``h`` bucket, the max/min/diff over every
    3D-height group of width ``2 * H_tol`` present in the data.
    """
    # a small slack absorbs decimal-to-binary error in centimetre labels
    slack = 1e-9
    per_cell = defaultdict(list)
    per_h_group = defaultdict(lambda: defaultdict(list))
    for _, rec, cam in _labelled_boxes(frames):
        if use_projected:
            try:
                h = project_box(rec.to_box3d(), cam).h
            except GeometryDomainError:
                continue
        else:
            h = rec.bbox_height
        H, z = rec.dims[0], rec.location[2]
        for hc in h_buckets:
            if not _in_bucket(h, hc, h_tol):
                continue
            per_h_group[hc][math.floor((H + H_tol + slack) / (2 * H_tol))].append(z)
            for Hc in H_buckets:
                if _in_bucket(H + slack, Hc, H_tol):
                    per_cell[(hc, Hc)].append(z)
    table = DepthSpreadTable(tuple(h_buckets), tuple(H_buckets), h_tol, H_tol, use_projected)
    for key, zs in per_cell.items():
        table.cells[key] = SpreadCell(max(zs), min(zs), len(zs))
    for hc, groups in per_h_group.items():
        mx = [max(zs) for zs in groups.values()]
        mn = [min(zs) for zs in groups.values()]
        table.average[hc] = (float(np.mean(mx)), float(np.mean(mn)), float(np.mean(np.subtract(mx, mn))), len(groups))
    return table


# sensitivity sweep ----------------------------------------------------------

CAR_FOOTPRINTS = ((1.6, 3.9), (1.5, 3.5), (1.7, 4.2))  # (W, L)
SWEEP_HEADER = ("beta", "ry", "W", "L", "dz", "z", "error")


@dataclass(frozen=True)
class SweepCell:
    beta: float
    ry: float
    W: float
    L: float
    dz: float
    z: float = math.nan
    error: str = ""

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in SWEEP_HEADER}


@dataclass
class SweepResult:
    cells: list
    z_min: float
    z_max: float

    @property
    def spread(self) -> float:
        return self.z_max - self.z_min if self.cells and math.isfinite(self.z_min) else 0.0


def default_beta_grid(n=16):
    return tuple(np.linspace(-0.05, 0.10, n))


def default_yaw_grid(n=73):
    return tuple(np.linspace(-math.pi, math.pi, n))


def sensitivity_sweep(H, h, f_v, betas=None, yaws=None, footprints=CAR_FOOTPRINTS,
                      convention=DEFAULT_CONVENTION) -> SweepResult:
    """Depth recovered by the full formula over a (beta, yaw, footprint) grid.

    Holding ``h`` and ``H`` fixed, the spread of the recovered depths shows how
    much pose and position alone move the answer.
    """
    betas = default_beta_grid() if betas is None else tuple(betas)
    yaws = default_yaw_grid() if yaws is None else tuple(yaws)
    footprints = tuple(footprints)
    if not (betas and yaws and footprints):
        raise ValueError("sweep grids must be non-empty")
    cells, zs = [], []
    for W, L in footprints:
        for ry in yaws:
            dz = delta_z_max(W, L, ry)
            for beta in betas:
                try:
                    z = depth_full(GeometryObservation(h, beta, H, dz, f_v), convention)
                except GeometryDomainError as exc:
                    cells.append(SweepCell(beta, ry, W, L, dz, error=str(exc)))
                    continue
                cells.append(SweepCell(beta, ry, W, L, dz, z))
                zs.append(z)
    if not zs:
        return SweepResult(cells, math.nan, math.nan)
    return SweepResult(cells, min(zs), max(zs))
