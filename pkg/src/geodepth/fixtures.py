"""Golden fixtures: frozen input/expected pairs re-checked against the live code.

Each fixture file holds a JSON list of objects::

    {
      "name": "...",
      "operation": "<key of OPERATIONS>",
      "input": {...},
      "expected": <json value>,
      "check": "approx" | "greater" | "raises",   # default "approx"
      "tolerance": {"rel": 1e-9, "abs": 1e-12},     # optional
      "provenance": {"tag": "trivial" | "derived" | "published", "note": "..."}
    }

``published`` marks values copied from published result tables.

``"raises"`` expects ``expected`` to name an exception class from
:mod:`geodepth.errors`.
"""

from __future__ import annotations

import json
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, box_geometry as bg, camera, depth_formula as df, errors, eval_depth, eval_detection as ed
from . import iou, kitti_io, losses

FIXTURE_DIR = Path(__file__).with_name("fixtures")
PROVENANCE_TAGS = ("trivial", "derived", "published")


def _cam(d):
    return camera.CalibratedCamera(d["f_u"], d["f_v"], d["c_u"], d["c_v"], tuple(d.get("t_proj", (0.0, 0.0, 0.0))))


def _box(d):
    return bg.Box3D(d["W"], d["H"], d["L"], d["x"], d["y"], d["z"], d.get("ry", 0.0))


def _label(line):
    return kitti_io.parse_label_line(line)


def _obs(i):
    return df.GeometryObservation(i["h"], i["beta"], i["H"], i["dz"], i["f_v"])


def _load_frames(i):
    with tempfile.TemporaryDirectory() as tmp:
        ld, cd = Path(tmp, "label"), Path(tmp, "calib")
        ld.mkdir()
        cd.mkdir()
        for fid, text in i.get("labels", {}).items():
            (ld / f"{fid}.txt").write_text(text)
        for fid, text in i.get("calibs", {}).items():
            (cd / f"{fid}.txt").write_text(text)
        entries = kitti_io.load_frame_set(ld, cd, i["ids"])
    return [{"id": e.frame_id, "n_labels": None if e.labels is None else len(e.labels), "ok": e.ok} for e in entries]


def _frames_from_spec(i):
    spec = analysis.SyntheticSceneSpec(seed=i.get("seed", 0), boxes_per_frame=i.get("boxes_per_frame", 4))
    return analysis.generate_scenes(spec, i["n_frames"])


def _cli_run(i):
    from .cli import main

    return main(i["argv"])


def _verify_inline(i):
    with tempfile.TemporaryDirectory() as tmp:
        Path(tmp, "inline.json").write_text(json.dumps(i["fixtures"]))
        return [r.passed for r in verify_fixtures(tmp)]


OPERATIONS = {
    "camera.project_point": lambda i: list(camera.project_point(i["p"], _cam(i["cam"]))),
    "camera.backproject_pixel": lambda i: camera.backproject_pixel(i["u"], i["v"], i["z"], _cam(i["cam"])).tolist(),
    "camera.backproject_depth_map": lambda i: np.nan_to_num(
        camera.backproject_depth_map(i["depth"], _cam(i["cam"]), i.get("valid")), nan=-1.0).tolist(),
    "camera.beta_from_pixel": lambda i: camera.beta_from_pixel(i["v_o"], _cam(i["cam"])),
    "box_geometry.corner_offsets": lambda i: bg.corner_offsets(i["W"], i["H"], i["L"], i["ry"]).tolist(),
    "box_geometry.corners_camera": lambda i: bg.corners_camera(_box(i["box"])).corners.tolist(),
    "box_geometry.delta_z_max": lambda i: bg.delta_z_max(i["W"], i["L"], i["ry"]),
    "box_geometry.project_box": lambda i: list(bg.project_box(_box(i["box"]), _cam(i["cam"])).ltrb),
    "box_geometry.alpha_from_ry": lambda i: bg.alpha_from_ry(i["ry"], i["x"], i["z"]),
    "box_geometry.ry_from_alpha": lambda i: bg.ry_from_alpha(i["alpha"], i["x"], i["z"]),
    "depth_formula.height_forward": lambda i: df.height_forward(
        i["z"], i["beta"], i["H"], i["dz"], i["f_v"], i.get("convention", df.DEFAULT_CONVENTION)),
    "depth_formula.depth_full": lambda i: df.depth_full(_obs(i), i.get("convention", df.DEFAULT_CONVENTION)),
    "depth_formula.depth_v1": lambda i: df.depth_v1(i["h"], i["beta"], i["H"], i["dz"], i["f_v"]),
    "depth_formula.depth_v2": lambda i: df.depth_v2(i["h"], i["H"], df.DepthV2Scale(i["k"])),
    "depth_formula.compare_formulas": lambda i: [
        {"z_true": r.z_true, "z_full": r.z_full, "z_v1": r.z_v1, "z_v2": r.z_v2}
        for r in df.compare_formulas([_box(b) for b in i["boxes"]], _cam(i["cam"]))],
    "kitti_io.parse_label_line": lambda i: _label_dict(_label(i["line"])),
    "kitti_io.serialize_label": lambda i: kitti_io.serialize_label(_label(i["line"])),
    "kitti_io.parse_calib_file": lambda i: _calib_dict(kitti_io.parse_calib_file(i["text"])),
    "kitti_io.load_frame_set": _load_frames,
    "eval_detection.iou_2d": lambda i: iou.iou_2d(i["a"], i["b"]),
    "eval_detection.iou_bev": lambda i: iou.iou_bev(_box(i["a"]), _box(i["b"])),
    "eval_detection.iou_3d": lambda i: iou.iou_3d(_box(i["a"]), _box(i["b"])),
    "eval_detection.assign_difficulty": lambda i: ed.assign_difficulty(_label(i["line"])),
    "eval_detection.evaluate_ap": lambda i: ed.evaluate_ap(
        [_label(l) for l in i["dets"]], [_label(l) for l in i["gts"]], ed.EvalConfig(**i["cfg"])).ap,
    "eval_depth.depth_errors": lambda i: _stats_dict(eval_depth.depth_errors(i["pred"], i["gt"])),
    "eval_depth.bucketed_depth_errors": lambda i: [
        s.count for s in eval_depth.bucketed_depth_errors(i["pairs"], [tuple(r) for r in i["ranges"]])],
    "losses.focal_variant": lambda i: losses.focal_variant(
        i["p"], i["y"], losses.FocalConfig(i.get("alpha_f", 2.0), i.get("beta_f", 4.0)))[0],
    "losses.uncertainty_l1": lambda i: losses.uncertainty_l1(
        losses.UncertainDepthPrediction(i["d_pred"], i["sigma"]), i["d_gt"])[0],
    "losses.total_loss": lambda i: losses.total_loss(
        i["l_c"], i["l_2d"], i["l_3d"], losses.LossWeights(i.get("lambda1", 1.0), i.get("lambda2", 1.0))),
    "analysis.generate_scenes": lambda i: [len(f.labels) for f in _frames_from_spec(i)],
    "analysis.misalignment_report": lambda i: min(
        r.mean_iou for r in analysis.misalignment_report(_frames_from_spec(i)) if r.count),
    "analysis.depth_spread_table": lambda i: _spread_dict(analysis.depth_spread_table(
        [kitti_io.FrameEntry("0", [_label(l) for l in i["lines"]], kitti_io.FrameCalib.from_camera(_cam(i["cam"])))],
        i["h_buckets"], i["H_buckets"], use_projected=i.get("use_projected", True))),
    "analysis.sensitivity_sweep": lambda i: analysis.sensitivity_sweep(
        i["H"], i["h"], i["f_v"], i.get("betas"), i.get("yaws"),
        [tuple(f) for f in i.get("footprints", analysis.CAR_FOOTPRINTS)]).spread,
    "cli.run": _cli_run,
    "fixtures.verify_fixtures": _verify_inline,
}


def _label_dict(rec):
    return {"category": rec.category, "truncation": rec.truncation, "occlusion": rec.occlusion, "alpha": rec.alpha,
            "bbox": list(rec.bbox), "dims": list(rec.dims), "location": list(rec.location),
            "rotation_y": rec.rotation_y, "score": rec.score, "ignorable": rec.ignorable}


def _calib_dict(calib):
    c = calib.camera
    return {"f_u": c.f_u, "f_v": c.f_v, "c_u": c.c_u, "c_v": c.c_v, "t_proj": list(c.t_proj),
            "keys": sorted(calib.matrices)}


def _stats_dict(s):
    return {"silog": s.silog, "abs_rel": s.abs_rel, "sq_rel": s.sq_rel, "irmse": s.irmse, "count": s.count}


def _spread_dict(table):
    return {f"{h}|{H}": [c.max, c.min, c.diff, c.count] for (h, H), c in sorted(table.cells.items())}


@dataclass
class FixtureResult:
    name: str
    operation: str
    passed: bool
    detail: str = ""


def _close(actual, expected, rel, abs_, path="$"):
    """Return ``None`` when equal within tolerance, else a description of the first mismatch."""
    if isinstance(expected, dict):
        if not isinstance(actual, dict) or set(actual) != set(expected):
            return f"{path}: keys {sorted(actual) if isinstance(actual, dict) else actual!r} != {sorted(expected)}"
        for k in expected:
            msg = _close(actual[k], expected[k], rel, abs_, f"{path}.{k}")
            if msg:
                return msg
        return None
    if isinstance(expected, list):
        if not isinstance(actual, (list, tuple)) or len(actual) != len(expected):
            return f"{path}: {actual!r} != {expected!r}"
        for n, (a, e) in enumerate(zip(actual, expected)):
            msg = _close(a, e, rel, abs_, f"{path}[{n}]")
            if msg:
                return msg
        return None
    if isinstance(expected, bool) or expected is None or isinstance(expected, str):
        return None if actual == expected else f"{path}: {actual!r} != {expected!r}"
    if isinstance(expected, (int, float)):
        if not isinstance(actual, (int, float)) or isinstance(actual, bool):
            return f"{path}: {actual!r} is not a number"
        if math.isclose(actual, expected, rel_tol=rel, abs_tol=abs_):
            return None
        return f"{path}: {actual!r} != {expected!r} (rel {rel}, abs {abs_})"
    return f"{path}: unsupported expected value {expected!r}"


def check_fixture(fx) -> FixtureResult:
    name, op = fx.get("name", "?"), fx.get("operation", "?")
    prov = fx.get("provenance", {})
    if prov.get("tag") not in PROVENANCE_TAGS:
        return FixtureResult(name, op, False, f"missing or unknown provenance tag {prov.get('tag')!r}")
    if op not in OPERATIONS:
        return FixtureResult(name, op, False, "unknown operation")
    check = fx.get("check", "approx")
    tol = fx.get("tolerance", {})
    try:
        actual = OPERATIONS[op](fx["input"])
    except Exception as exc:
        if check == "raises" and type(exc).__name__ == fx["expected"]:
            return FixtureResult(name, op, True)
        return FixtureResult(name, op, False, f"raised {type(exc).__name__}: {exc}")
    if check == "raises":
        return FixtureResult(name, op, False, f"expected {fx['expected']}, got {actual!r}")
    if check == "greater":
        ok = actual > fx["expected"]
        return FixtureResult(name, op, ok, "" if ok else f"{actual!r} is not > {fx['expected']!r}")
    msg = _close(actual, fx["expected"], tol.get("rel", 1e-9), tol.get("abs", 1e-12))
    return FixtureResult(name, op, msg is None, msg or "")


def load_fixtures(directory=None) -> list:
    directory = Path(directory) if directory is not None else FIXTURE_DIR
    if not directory.is_dir():
        raise errors.ConfigurationError(f"fixture directory not found: {directory}")
    fixtures = []
    for path in sorted(directory.glob("*.json")):
        data = json.loads(path.read_text())
        fixtures.extend(data if isinstance(data, list) else [data])
    return fixtures


def verify_fixtures(directory=None) -> list:
    """Evaluate every fixture under ``directory`` (default: the packaged set)."""
    return [check_fixture(fx) for fx in load_fixtures(directory)]
