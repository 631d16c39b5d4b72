"""Reading and writing label and calibration files in the KITTI devkit layout.

See docs/FORMATS.md for the frozen field layout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .box_geometry import Box2D, Box3D
from .camera import CalibratedCamera
from .errors import ParseError

LABEL_FIELDS = (
    "type", "truncated", "occluded", "alpha",
    "bbox_left", "bbox_top", "bbox_right", "bbox_bottom",
    "height", "width", "length", "x", "y", "z", "rotation_y", "score",
)

# plain decimal literal; rejects '1_000', 'nan', 'inf', '1,5'
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")


def _real(token, line_no, col):
    if not _NUMBER.match(token):
        raise ParseError(f"expected a real number in field {LABEL_FIELDS[col - 1]!r}, got {token!r}", line_no, col)
    return float(token)


@dataclass(frozen=True)
class LabelRecord:
    category: str
    truncation: float
    occlusion: int
    alpha: float
    bbox: tuple  # (left, top, right, bottom)
    dims: tuple  # (h, w, l) in file order
    location: tuple  # (x, y, z) bottom centre
    rotation_y: float
    score: Optional[float] = None

    @property
    def ignorable(self) -> bool:
        """DontCare regions and sentinel-valued records."""
        return self.category == "DontCare" or min(self.dims) <= 0 or self.location[2] <= -999

    @property
    def box2d(self) -> Box2D:
        return Box2D.from_ltrb(*self.bbox)

    @property
    def bbox_height(self) -> float:
        return self.bbox[3] - self.bbox[1]

    def to_box3d(self) -> Box3D:
        h, w, l = self.dims
        x, y, z = self.location
        return Box3D(W=w, H=h, L=l, x=x, y=y, z=z, ry=self.rotation_y)

    @classmethod
    def from_box3d(cls, category, box: Box3D, bbox, alpha, truncation=0.0, occlusion=0, score=None):
        return cls(
            category, float(truncation), int(occlusion), float(alpha), tuple(float(b) for b in bbox),
            (box.H, box.W, box.L), (box.x, box.y, box.z), box.ry, score,
        )

    def with_score(self, score) -> "LabelRecord":
        return replace(self, score=None if score is None else float(score))


def parse_label_line(line: str, line_no: Optional[int] = None) -> LabelRecord:
    """Parse one whitespace-separated label line (15 fields, optional 16th score)."""
    tokens = line.split()
    if len(tokens) not in (15, 16):
        raise ParseError(f"expected 15 or 16 fields, found {len(tokens)}", line_no)
    category = tokens[0]
    vals = [_real(tok, line_no, i + 1) for i, tok in enumerate(tokens[1:], start=1)]
    occ_token = tokens[2]
    if not _INTEGER.match(occ_token):
        raise ParseError(f"occlusion must be an integer, got {occ_token!r}", line_no, 3)
    occlusion = int(occ_token)
    if not -1 <= occlusion <= 3:
        raise ParseError(f"occlusion level {occlusion} outside -1..3", line_no, 3)
    left, top, right, bottom = vals[3:7]
    if right < left or bottom < top:
        raise ParseError(f"degenerate 2D box ({left}, {top}, {right}, {bottom})", line_no, 5)
    return LabelRecord(
        category=category,
        truncation=vals[0],
        occlusion=occlusion,
        alpha=vals[2],
        bbox=(left, top, right, bottom),
        dims=tuple(vals[7:10]),
        location=tuple(vals[10:13]),
        rotation_y=vals[13],
        score=vals[14] if len(vals) == 15 else None,
    )


def parse_label_text(text: str) -> list:
    return [parse_label_line(line, i) for i, line in enumerate(text.splitlines(), start=1) if line.strip()]


def read_label_file(path) -> list:
    return parse_label_text(Path(path).read_text(encoding="ascii"))


def format_real(value: float) -> str:
    """At least two decimals, more only when needed to round-trip exactly."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot serialise non-finite value {value!r}")
    text = np.format_float_positional(value, unique=True, trim="k", min_digits=2)
    return "0.00" if text in ("-0.00", "-0.0") else text


def serialize_label(rec: LabelRecord) -> str:
    fields = [rec.category, format_real(rec.truncation), str(int(rec.occlusion)), format_real(rec.alpha)]
    fields += [format_real(v) for v in (*rec.bbox, *rec.dims, *rec.location, rec.rotation_y)]
    if rec.score is not None:
        fields.append(format_real(rec.score))
    return " ".join(fields)


def serialize_labels(records) -> str:
    return "".join(serialize_label(r) + "\n" for r in records)


CALIB_SIZES = {"R0_rect": 9}
REFERENCE_KEY = "P2"


def _expected_size(key):
    if key in CALIB_SIZES:
        return CALIB_SIZES[key]
    if re.fullmatch(r"P\d+", key) or key.startswith("Tr_"):
        return 12
    return None


@dataclass(frozen=True)
class FrameCalib:
    matrices: dict = field(default_factory=dict)  # key -> np.ndarray (flat)
    reference_key: str = REFERENCE_KEY

    @property
    def camera(self) -> CalibratedCamera:
        return CalibratedCamera.from_projection_matrix(self.matrices[self.reference_key])

    def projection(self, key=None) -> np.ndarray:
        return np.asarray(self.matrices[key or self.reference_key], dtype=float).reshape(3, 4)

    @classmethod
    def from_camera(cls, cam: CalibratedCamera, key=REFERENCE_KEY) -> "FrameCalib":
        return cls({key: cam.projection_matrix.reshape(-1)}, key)


def parse_calib_file(text: str, reference_key: str = REFERENCE_KEY) -> FrameCalib:
    """Parse ``Key: v1 v2 ...`` lines; the reference key's 3x4 matrix becomes the camera."""
    matrices = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("expected 'Key: values'", line_no)
        key, rest = line.split(":", 1)
        key = key.strip()
        values = []
        for col, tok in enumerate(rest.split(), start=1):
            if not _NUMBER.match(tok):
                raise ParseError(f"non-numeric value {tok!r}", line_no, col, key)
            values.append(float(tok))
        expected = _expected_size(key)
        if expected is not None and len(values) != expected:
            raise ParseError(f"expected {expected} reals, found {len(values)}", line_no, key=key)
        matrices[key] = np.array(values)
    if reference_key not in matrices:
        raise ParseError("reference projection matrix missing", key=reference_key)
    calib = FrameCalib(matrices, reference_key)
    calib.camera  # validates focal lengths
    return calib


def read_calib_file(path, reference_key: str = REFERENCE_KEY) -> FrameCalib:
    return parse_calib_file(Path(path).read_text(encoding="ascii"), reference_key)


def serialize_calib(calib: FrameCalib) -> str:
    return "".join(
        f"{key}: " + " ".join(repr(float(v)) for v in np.ravel(mat)) + "\n" for key, mat in calib.matrices.items()
    )


@dataclass
class FrameEntry:
    frame_id: str
    labels: Optional[list] = None
    calib: Optional[FrameCalib] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def load_frame_set(label_dir, calib_dir, ids, reference_key: str = REFERENCE_KEY) -> list:
    """Load ``<id>.txt`` label/calibration pairs in ascending id order.

    Missing or malformed files produce an entry with ``error`` set. If every
    requested id fails to load, :class:`FileNotFoundError` is raised.
    """
    label_dir, calib_dir = Path(label_dir), Path(calib_dir)
    for d in (label_dir, calib_dir):
        if not d.is_dir():
            raise NotADirectoryError(f"not a readable directory: {d}")
    entries = []
    for frame_id in sorted(set(ids)):
        entry = FrameEntry(frame_id)
        label_path, calib_path = label_dir / f"{frame_id}.txt", calib_dir / f"{frame_id}.txt"
        missing = [str(p) for p in (label_path, calib_path) if not p.is_file()]
        if missing:
            entry.error = "missing " + ", ".join(missing)
        else:
            try:
                entry.labels = read_label_file(label_path)
                entry.calib = read_calib_file(calib_path, reference_key)
            except ParseError as exc:
                entry.error = f"{frame_id}: {exc}"
        entries.append(entry)
    if entries and not any(e.ok for e in entries):
        raise FileNotFoundError(f"none of the {len(entries)} requested frames could be loaded")
    return entries


def list_frame_ids(label_dir) -> list:
    return sorted(p.stem for p in Path(label_dir).glob("*.txt"))
