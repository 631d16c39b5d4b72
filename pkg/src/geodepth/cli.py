"""``geodepth`` command-line entry point.

Exit status: 0 on success, 1 on bad input (usage, parse or domain errors,
unreadable files), 2 on an internal invariant violation. Reports are written
atomically; nothing is left behind on failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import shutil
import sys
import tempfile
from pathlib import Path

from . import analysis, eval_depth, kitti_io, reports
from .box_geometry import bottom_center_pixel, delta_z_max, project_box
from .camera import beta_from_pixel
from .depth_formula import (
    COMPARE_HEADER, CONVENTIONS, DEFAULT_CONVENTION, DepthV2Scale, GeometryObservation, compare_formulas,
    depth_full, depth_v1, depth_v2,
)
from .errors import GeoDepthError
from .eval_detection import evaluate_report
from .iou import iou_2d
from .parallel import resolve_jobs

log = logging.getLogger("geodepth")

TASK_ALIASES = {"2d": "detection2d", "bev": "bev", "3d": "detection3d",
                "detection2d": "detection2d", "detection3d": "detection3d"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p, default_format="csv"):
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--raw", action="store_true", help="full float precision instead of 6 significant digits")
    p.add_argument("--jobs", "-j", type=int, default=None,
                   help="worker processes (default: $GEODEPTH_JOBS or CPU count)")


def _frame_source(p):
    p.add_argument("--label-dir", "--kitti-labels", dest="label_dir", help="directory of <id>.txt label files")
    p.add_argument("--calib-dir", help="directory of <id>.txt calibration files")
    p.add_argument("--ids", help="file listing frame ids, one per line (default: every label file)")
    p.add_argument("--synthetic", type=int, metavar="N", help="use N generated frames instead of files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boxes-per-frame", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geodepth", description="Projective depth geometry and KITTI-style evaluation tools.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("project", help="project 3D labels to 2D boxes")
    p.add_argument("--labels", required=True)
    p.add_argument("--calib", required=True)
    _common(p)

    p = sub.add_parser("recover-depth", help="recover per-object depth from geometry")
    p.add_argument("--labels", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--formula", choices=("full", "v1", "v2"), default="full")
    p.add_argument("--k", type=float, default=None, help="scale for v2 (default: f_v)")
    p.add_argument("--convention", choices=sorted(CONVENTIONS), default=DEFAULT_CONVENTION)
    p.add_argument("--h-source", choices=("projected", "annotated"), default="projected")
    _common(p)

    p = sub.add_parser("compare-formulas", help="full vs simplified depth formulas per box")
    p.add_argument("--labels")
    p.add_argument("--calib")
    p.add_argument("--synthetic", type=int, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boxes-per-frame", type=int, default=4)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--convention", choices=sorted(CONVENTIONS), default=DEFAULT_CONVENTION)
    _common(p)

    p = sub.add_parser("misalign-report", help="annotated vs projected 2D boxes by depth")
    _frame_source(p)
    p.add_argument("--image-size", default="1242x375")
    _common(p)

    p = sub.add_parser("depth-stats", help="depth spread for equal 2D/3D heights")
    _frame_source(p)
    p.add_argument("--h-buckets", default="30,35")
    p.add_argument("--H-buckets", dest="H_buckets", default="1.49,1.50,1.51,1.52")
    p.add_argument("--h-tol", type=float, default=0.5)
    p.add_argument("--H-tol", dest="H_tol", type=float, default=0.005)
    p.add_argument("--annotated-h", action="store_true", help="bucket on annotated instead of projected height")
    _common(p)

    p = sub.add_parser("eval-ap", help="average precision per difficulty")
    p.add_argument("--dets", required=True, help="detection label file or directory")
    p.add_argument("--gts", required=True, help="ground-truth label file or directory")
    p.add_argument("--recall", type=int, choices=(11, 40), default=40)
    p.add_argument("--iou", type=float, default=0.7)
    p.add_argument("--task", choices=sorted(TASK_ALIASES), default="3d")
    p.add_argument("--category", default="Car")
    _common(p, default_format="json")

    p = sub.add_parser("depth-metrics", help="SILog/absRel/sqRel/iRMSE by depth range")
    p.add_argument("--input", required=True, help="CSV with columns pred,gt and optional gt_depth")
    p.add_argument("--ranges", default="0-10,0-20,0-30,0-40")
    _common(p)

    p = sub.add_parser("gen-scenes", help="write synthetic label/calib files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boxes-per-frame", type=int, default=4)

    p = sub.add_parser("verify-fixtures", help="re-check golden fixtures against the implementation")
    p.add_argument("--dir", default=None)
    return parser


def _emit(args, rows=None, header=None, obj=None):
    if args.format == "json":
        text = reports.json_text(obj if obj is not None else rows, args.raw)
    else:
        if rows is None:
            raise UsageError("this report has no CSV form; use --format json")
        text = reports.csv_text(rows, header, args.raw)
    if args.out:
        reports.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _load_frames(args):
    if args.synthetic is not None:
        spec = analysis.SyntheticSceneSpec(seed=args.seed, boxes_per_frame=args.boxes_per_frame)
        return analysis.generate_scenes(spec, args.synthetic)
    if not (args.label_dir and args.calib_dir):
        raise UsageError("need --label-dir and --calib-dir, or --synthetic N")
    if args.ids:
        ids = [t for t in Path(args.ids).read_text().split() if t]
    else:
        ids = kitti_io.list_frame_ids(args.label_dir)
    frames = kitti_io.load_frame_set(args.label_dir, args.calib_dir, ids)
    for f in frames:
        if not f.ok:
            log.warning("skipping frame %s: %s", f.frame_id, f.error)
    return [f for f in frames if f.ok]


def cmd_project(args):
    labels = kitti_io.read_label_file(args.labels)
    cam = kitti_io.read_calib_file(args.calib).camera
    header = ("index", "category", "u", "v", "w", "h", "left", "top", "right", "bottom", "iou_annotated", "error")
    rows = []
    for i, rec in enumerate(labels):
        row = dict.fromkeys(header, math.nan)
        row.update(index=i, category=rec.category, error="")
        if rec.ignorable:
            row["error"] = "ignorable record"
        else:
            try:
                box = project_box(rec.to_box3d(), cam)
                l, t, r, b = box.ltrb
                row.update(u=box.u, v=box.v, w=box.w, h=box.h, left=l, top=t, right=r, bottom=b,
                           iou_annotated=iou_2d(rec.bbox, box))
            except GeoDepthError as exc:
                row["error"] = str(exc)
        rows.append(row)
    _emit(args, rows, header)


def cmd_recover_depth(args):
    labels = kitti_io.read_label_file(args.labels)
    cam = kitti_io.read_calib_file(args.calib).camera
    header = ("index", "category", "z_label", "h", "beta", "dz", "z_geo", "error")
    rows = []
    for i, rec in enumerate(labels):
        row = {"index": i, "category": rec.category, "z_label": rec.location[2], "h": math.nan,
               "beta": math.nan, "dz": math.nan, "z_geo": math.nan, "error": ""}
        if rec.ignorable:
            row["error"] = "ignorable record"
            rows.append(row)
            continue
        try:
            box = rec.to_box3d()
            h = project_box(box, cam).h if args.h_source == "projected" else rec.bbox_height
            beta = beta_from_pixel(bottom_center_pixel(box, cam).v, cam)
            dz = delta_z_max(box.W, box.L, box.ry)
            row.update(h=h, beta=beta, dz=dz)
            if args.formula == "full":
                z = depth_full(GeometryObservation(h, beta, box.H, dz, cam.f_v), args.convention)
            elif args.formula == "v1":
                z = depth_v1(h, beta, box.H, dz, cam.f_v)
            else:
                z = depth_v2(h, box.H, DepthV2Scale(args.k if args.k is not None else cam.f_v))
            row["z_geo"] = z
        except GeoDepthError as exc:
            row["error"] = str(exc)
        rows.append(row)
    _emit(args, rows, header)


def cmd_compare_formulas(args):
    if args.synthetic is not None:
        spec = analysis.SyntheticSceneSpec(seed=args.seed, boxes_per_frame=args.boxes_per_frame)
        cam = spec.camera
        boxes = [r.to_box3d() for f in analysis.generate_scenes(spec, args.synthetic) for r in f.labels]
    elif args.labels and args.calib:
        cam = kitti_io.read_calib_file(args.calib).camera
        boxes = [r.to_box3d() for r in kitti_io.read_label_file(args.labels) if not r.ignorable]
    else:
        raise UsageError("need --labels and --calib, or --synthetic N")
    table = compare_formulas(boxes, cam, args.k, args.convention, resolve_jobs(args.jobs))
    _emit(args, [r.as_row() for r in table], COMPARE_HEADER)


def cmd_misalign(args):
    w, h = (int(v) for v in args.image_size.lower().split("x"))
    rows = [r.as_row() for r in analysis.misalignment_report(_load_frames(args), (w, h))]
    _emit(args, rows, analysis.MISALIGN_HEADER)


def cmd_depth_stats(args):
    table = analysis.depth_spread_table(
        _load_frames(args), _floats(args.h_buckets), _floats(args.H_buckets), args.h_tol, args.H_tol,
        use_projected=not args.annotated_h,
    )
    rows = table.rows()
    obj = {"h_tol": args.h_tol, "H_tol": args.H_tol, "use_projected": not args.annotated_h, "rows": rows}
    _emit(args, rows, analysis.SPREAD_HEADER, obj)


def _label_frames(path, ids=None):
    path = Path(path)
    if path.is_dir():
        ids = ids if ids is not None else kitti_io.list_frame_ids(path)
        frames = []
        for i in ids:
            f = path / f"{i}.txt"
            frames.append(kitti_io.read_label_file(f) if f.is_file() else [])
        return ids, frames
    return ["0"], [kitti_io.read_label_file(path)]


def cmd_eval_ap(args):
    ids, gts = _label_frames(args.gts)
    if Path(args.gts).is_dir():
        if not Path(args.dets).is_dir():
            raise UsageError("--dets must be a directory when --gts is a directory")
        _, dets = _label_frames(args.dets, ids)
    else:
        _, dets = _label_frames(args.dets)
    report = evaluate_report(dets, gts, TASK_ALIASES[args.task], args.iou, args.recall, args.category,
                             resolve_jobs(args.jobs))
    report["frames"] = len(ids)
    rows = [{"difficulty": d, "ap": r["ap"], "n_gt": r["n_gt"], "n_tp": r["n_tp"], "n_fp": r["n_fp"]}
            for d, r in report["difficulties"].items()]
    _emit(args, rows, ("difficulty", "ap", "n_gt", "n_tp", "n_fp"), report)


def cmd_depth_metrics(args):
    ranges = []
    for part in args.ranges.split(","):
        lo, hi = part.split("-")
        ranges.append((float(lo), float(hi)))
    triples = []
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"pred", "gt"} - set(reader.fieldnames or ())
        if missing:
            raise UsageError(f"{args.input}: missing column(s) {sorted(missing)}")
        for line_no, rec in enumerate(reader, start=2):
            try:
                pred, gt = float(rec["pred"]), float(rec["gt"])
                gd = float(rec["gt_depth"]) if rec.get("gt_depth") not in (None, "") else gt
            except ValueError as exc:
                raise UsageError(f"{args.input}:{line_no}: {exc}") from None
            triples.append((pred, gt, gd))
    stats = eval_depth.bucketed_depth_errors(triples, ranges)
    _emit(args, [s.as_row() for s in stats], eval_depth.CSV_HEADER)


def cmd_gen_scenes(args):
    spec = analysis.SyntheticSceneSpec(seed=args.seed, boxes_per_frame=args.boxes_per_frame)
    frames = analysis.generate_scenes(spec, args.frames)
    out = Path(args.out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        (tmp / "label_2").mkdir()
        (tmp / "calib").mkdir()
        for f in frames:
            (tmp / "label_2" / f"{f.frame_id}.txt").write_text(kitti_io.serialize_labels(f.labels))
            (tmp / "calib" / f"{f.frame_id}.txt").write_text(kitti_io.serialize_calib(f.calib))
        (tmp / "ids.txt").write_text("".join(f.frame_id + "\n" for f in frames))
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def cmd_verify_fixtures(args):
    from .fixtures import verify_fixtures

    report = verify_fixtures(args.dir)
    for res in report:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name} [{res.operation}]" + ("" if res.passed else f": {res.detail}"))
    failed = sum(not r.passed for r in report)
    print(f"{len(report) - failed}/{len(report)} fixtures passed")
    return 1 if failed else 0


COMMANDS = {
    "project": cmd_project,
    "recover-depth": cmd_recover_depth,
    "compare-formulas": cmd_compare_formulas,
    "misalign-report": cmd_misalign,
    "depth-stats": cmd_depth_stats,
    "eval-ap": cmd_eval_ap,
    "depth-metrics": cmd_depth_metrics,
    "gen-scenes": cmd_gen_scenes,
    "verify-fixtures": cmd_verify_fixtures,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        status = COMMANDS[args.command](args)
        return int(status or 0)
    except (UsageError, GeoDepthError, OSError, ValueError) as exc:
        print(f"geodepth {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # invariant violation or bug
        log.exception("internal error in %s", args.command)
        print(f"geodepth {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
