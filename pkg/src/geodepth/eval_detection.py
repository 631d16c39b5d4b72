"""Average precision for 2D, bird's-eye and 3D detection.

Detections are matched greedily in descending score order (ties keep input
order); each ground truth takes at most one detection. A detection is a
true positive if it matches a ground truth that is valid for the chosen
difficulty, ignored if it matches a ground truth outside the difficulty
(or of a neighbouring class), is shorter than the difficulty's minimum
height, or falls inside a DontCare region; otherwise it is a false
positive. AP is the mean interpolated precision over an 11-point grid
``{0, 0.1, ..., 1}`` or a 40-point grid ``{1/40, ..., 1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InputError
from .iou import intersection_2d, iou_2d, iou_3d, iou_bev
from .parallel import parallel_map

DIFFICULTIES = ("easy", "moderate", "hard")
MIN_HEIGHT = {"easy": 40.0, "moderate": 25.0, "hard": 25.0}
MAX_OCCLUSION = {"easy": 0, "moderate": 1, "hard": 2}
MAX_TRUNCATION = {"easy": 0.15, "moderate": 0.30, "hard": 0.50}
NEIGHBOR_CLASSES = {"Car": ("Van",), "Pedestrian": ("Person_sitting",)}
TASKS = ("detection2d", "bev", "detection3d")

TP, FP, IGNORED = "tp", "fp", "ignored"


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.7
    recall_positions: int = 40
    difficulty: str = "moderate"
    task: str = "detection3d"
    category: str = "Car"

    def __post_init__(self):
        if not 0 < self.iou_threshold <= 1:
            raise ValueError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        if self.recall_positions not in (11, 40):
            raise ValueError(f"recall_positions must be 11 or 40, got {self.recall_positions}")
        if self.difficulty not in DIFFICULTIES:
            raise ValueError(f"unknown difficulty {self.difficulty!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class APResult:
    ap: float
    pr: list = field(default_factory=list)  # (recall, precision) per score threshold
    interpolated: list = field(default_factory=list)  # precision at each grid recall
    n_gt: int = 0
    n_tp: int = 0
    n_fp: int = 0
    n_ignored: int = 0

    def to_dict(self) -> dict:
        return {
            "ap": self.ap, "n_gt": self.n_gt, "n_tp": self.n_tp, "n_fp": self.n_fp, "n_ignored": self.n_ignored,
            "pr": [list(p) for p in self.pr], "interpolated": list(self.interpolated),
        }


def recall_grid(positions: int) -> list:
    """Grid recalls as ``(numerator, denominator)`` pairs."""
    if positions == 11:
        return [(i, 10) for i in range(11)]
    if positions == 40:
        return [(i, 40) for i in range(1, 41)]
    raise ValueError(f"unsupported recall grid {positions}")


def assign_difficulty(rec) -> str:
    """Easiest tier whose height/occlusion/truncation limits the record meets."""
    for tier in DIFFICULTIES:
        if (
            rec.bbox_height >= MIN_HEIGHT[tier]
            and rec.occlusion <= MAX_OCCLUSION[tier]
            and rec.truncation <= MAX_TRUNCATION[tier]
        ):
            return tier
    return "ignored"


def _allowed(rec, difficulty) -> bool:
    tier = assign_difficulty(rec)
    return tier != "ignored" and DIFFICULTIES.index(tier) <= DIFFICULTIES.index(difficulty)


def _overlap_fn(task):
    if task == "detection2d":
        return lambda d, g: iou_2d(d.bbox, g.bbox)
    if task == "bev":
        return lambda d, g: iou_bev(d.to_box3d(), g.to_box3d())
    return lambda d, g: iou_3d(d.to_box3d(), g.to_box3d())


def _split_gts(gts, cfg):
    valid, ignored, dontcare = [], [], []
    neighbors = NEIGHBOR_CLASSES.get(cfg.category, ())
    for g in gts:
        if g.category == "DontCare":
            dontcare.append(g)
        elif g.category == cfg.category:
            (valid if _allowed(g, cfg.difficulty) else ignored).append(g)
        elif g.category in neighbors:
            ignored.append(g)
    return valid, ignored, dontcare


def _best_match(det, candidates, taken, overlap, threshold):
    best, best_iou = None, -1.0
    for i, g in enumerate(candidates):
        if taken[i]:
            continue
        o = overlap(det, g)
        if o >= threshold and o > best_iou:
            best, best_iou = i, o
    return best


def match_frame(dets, gts, cfg: EvalConfig):
    """Classify one frame's detections; returns ``([(score, status), ...], n_valid_gt)``."""
    dets = [d for d in dets if d.category == cfg.category]
    for d in dets:
        if d.score is None:
            raise InputError("every detection needs a score")
    valid, ignored, dontcare = _split_gts(gts, cfg)
    overlap = _overlap_fn(cfg.task)
    taken_valid, taken_ignored = [False] * len(valid), [False] * len(ignored)
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    out = []
    for i in order:
        d = dets[i]
        j = _best_match(d, valid, taken_valid, overlap, cfg.iou_threshold)
        if j is not None:
            taken_valid[j] = True
            out.append((d.score, TP))
            continue
        j = _best_match(d, ignored, taken_ignored, overlap, cfg.iou_threshold)
        if j is not None:
            taken_ignored[j] = True
            out.append((d.score, IGNORED))
        elif d.bbox_height < MIN_HEIGHT[cfg.difficulty] or _in_dontcare(d, dontcare, cfg.iou_threshold):
            out.append((d.score, IGNORED))
        else:
            out.append((d.score, FP))
    return out, len(valid)


def _in_dontcare(det, dontcare, threshold) -> bool:
    l, t, r, b = det.bbox
    area = (r - l) * (b - t)
    if area <= 0:
        return False
    return any(intersection_2d(det.bbox, dc.bbox) / area >= threshold for dc in dontcare)


def interpolated_ap(points, n_gt, positions):
    """AP from ``(tp, fp)`` counts at each score threshold.

    Returns ``(ap, interpolated_precisions)``. Grid comparisons are exact
    integer comparisons.
    """
    grid = recall_grid(positions)
    interp = []
    for num, den in grid:
        best = 0.0
        if n_gt > 0:
            for tp, fp in points:
                if tp + fp > 0 and tp * den >= num * n_gt:
                    best = max(best, tp / (tp + fp))
        interp.append(best)
    return 100.0 * math.fsum(interp) / len(grid), interp


def evaluate_frames(det_frames, gt_frames, cfg: EvalConfig, jobs=1) -> APResult:
    """AP over several frames; ``det_frames[i]`` pairs with ``gt_frames[i]``."""
    det_frames, gt_frames = list(det_frames), list(gt_frames)
    if len(det_frames) != len(gt_frames):
        raise InputError(f"{len(det_frames)} detection frames vs {len(gt_frames)} ground-truth frames")
    matched = parallel_map(_match_args, [(d, g, cfg) for d, g in zip(det_frames, gt_frames)], jobs)
    n_gt = sum(n for _, n in matched)
    flat = [(score, status, f, k) for f, (res, _) in enumerate(matched) for k, (score, status) in enumerate(res)]
    flat.sort(key=lambda e: (-e[0], e[2], e[3]))
    points, tp, fp, n_ign = [], 0, 0, 0
    for idx, (score, status, _, _) in enumerate(flat):
        if status == TP:
            tp += 1
        elif status == FP:
            fp += 1
        else:
            n_ign += 1
        last_of_tie = idx + 1 == len(flat) or flat[idx + 1][0] != score
        if last_of_tie and tp + fp > 0:
            points.append((tp, fp))
    ap, interp = interpolated_ap(points, n_gt, cfg.recall_positions)
    pr = [(tp_ / n_gt if n_gt else 0.0, tp_ / (tp_ + fp_)) for tp_, fp_ in points]
    return APResult(ap, pr, interp, n_gt, tp, fp, n_ign)


def _match_args(args):
    return match_frame(*args)


def evaluate_ap(dets, gts, cfg: EvalConfig) -> APResult:
    """AP for a single frame's detections and ground truths."""
    return evaluate_frames([dets], [gts], cfg)


def evaluate_report(det_frames, gt_frames, task="detection3d", iou_threshold=0.7, recall_positions=40,
                    category="Car", jobs=1) -> dict:
    """AP for every difficulty, as a JSON-ready dict."""
    report = {"task": task, "category": category, "iou_threshold": iou_threshold,
              "recall_positions": recall_positions, "difficulties": {}}
    for diff in DIFFICULTIES:
        cfg = EvalConfig(iou_threshold, recall_positions, diff, task, category)
        report["difficulties"][diff] = evaluate_frames(det_frames, gt_frames, cfg, jobs).to_dict()
    return report
