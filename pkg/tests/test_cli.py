import csv
import io
import json
import subprocess
import sys

import pytest

from geodepth.cli import main
from geodepth.kitti_io import read_label_file


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def scenes(tmp_path, capsys):
    root = tmp_path / "scenes"
    assert run(["gen-scenes", "--out-dir", str(root), "--frames", "6", "--seed", "3"], capsys)[0] == 0
    return root


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_help_and_unknown_flag():
    ok = subprocess.run([sys.executable, "-m", "geodepth", "--help"], capture_output=True, text=True)
    assert ok.returncode == 0 and "eval-ap" in ok.stdout
    for cmd in ("project", "eval-ap", "gen-scenes"):
        assert subprocess.run([sys.executable, "-m", "geodepth", cmd, "--help"], capture_output=True).returncode == 0
    bad = subprocess.run([sys.executable, "-m", "geodepth", "eval-ap", "--dets", "a", "--gts", "b", "--bogus"],
                         capture_output=True, text=True)
    assert bad.returncode == 1 and "--bogus" in bad.stderr


def test_gen_scenes_layout(scenes):
    ids = (scenes / "ids.txt").read_text().split()
    assert ids == [f"{i:06d}" for i in range(6)]
    assert len(read_label_file(scenes / "label_2" / "000000.txt")) == 4
    assert not [p for p in scenes.parent.iterdir() if p.name.startswith(".")]


def test_gen_scenes_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        run(["gen-scenes", "--out-dir", str(tmp_path / name), "--frames", "3", "--seed", "9"], capsys)
    for sub in ("label_2", "calib"):
        for p in (tmp_path / "a" / sub).iterdir():
            assert p.read_bytes() == (tmp_path / "b" / sub / p.name).read_bytes()


def test_project_and_recover(scenes, capsys):
    labels, calib = str(scenes / "label_2" / "000001.txt"), str(scenes / "calib" / "000001.txt")
    code, out, _ = run(["project", "--labels", labels, "--calib", calib], capsys)
    rows = _csv(out)
    assert code == 0 and len(rows) == 4
    assert all(float(r["iou_annotated"]) == pytest.approx(1.0, abs=1e-5) for r in rows)
    code, out, _ = run(["recover-depth", "--labels", labels, "--calib", calib], capsys)
    rows = _csv(out)
    assert code == 0 and all(r["error"] == "" for r in rows)
    # recovery is exact when the whole box lies below the camera centre
    below = [rec.location[1] >= rec.dims[0] for rec in read_label_file(labels)]
    assert any(below)
    for r, exact in zip(rows, below):
        if exact:
            assert float(r["z_geo"]) == pytest.approx(float(r["z_label"]), rel=1e-5)
    code, out, _ = run(["recover-depth", "--labels", labels, "--calib", calib, "--formula", "v2", "--format", "json"],
                       capsys)
    assert code == 0 and len(json.loads(out)) == 4


def test_compare_formulas_deterministic(capsys, tmp_path):
    argv = ["compare-formulas", "--synthetic", "5", "--seed", "1"]
    _, a, _ = run(argv + ["--jobs", "1"], capsys)
    _, b, _ = run(argv + ["--jobs", "2"], capsys)
    assert a == b and len(_csv(a)) == 20
    out = tmp_path / "cmp.csv"
    assert run(argv + ["--out", str(out)], capsys)[0] == 0
    assert out.read_text() == a


def test_misalign_and_depth_stats(scenes, capsys):
    dirs = ["--label-dir", str(scenes / "label_2"), "--calib-dir", str(scenes / "calib")]
    code, out, _ = run(["misalign-report", *dirs], capsys)
    rows = _csv(out)
    assert code == 0 and len(rows) == 4
    assert all(float(r["mean_iou"]) == pytest.approx(1.0) for r in rows if int(r["count"]))
    code, out, _ = run(["depth-stats", "--kitti-labels", str(scenes / "label_2"), "--calib-dir", str(scenes / "calib"),
                        "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["use_projected"] is True
    code, out, _ = run(["depth-stats", "--synthetic", "20"], capsys)
    assert code == 0 and len(_csv(out)) == 10


def test_eval_ap_dirs_and_files(scenes, tmp_path, capsys):
    dets = tmp_path / "dets"
    dets.mkdir()
    for p in (scenes / "label_2").iterdir():
        lines = [line + " 0.9" for line in p.read_text().splitlines()]
        (dets / p.name).write_text("\n".join(lines) + "\n")
    code, out, _ = run(["eval-ap", "--dets", str(dets), "--gts", str(scenes / "label_2"), "--format", "json"], capsys)
    report = json.loads(out)
    assert code == 0 and report["frames"] == 6
    assert report["difficulties"]["hard"]["ap"] == pytest.approx(100.0)
    one = ["--dets", str(dets / "000000.txt"), "--gts", str(scenes / "label_2" / "000000.txt")]
    code, out, _ = run(["eval-ap", *one, "--task", "2d", "--recall", "11", "--format", "csv"], capsys)
    assert code == 0 and [r["difficulty"] for r in _csv(out)] == ["easy", "moderate", "hard"]
    code, _, err = run(["eval-ap", "--dets", str(dets / "000000.txt"), "--gts", str(scenes / "label_2")], capsys)
    assert code == 1 and "directory" in err


def test_depth_metrics(tmp_path, capsys):
    src = tmp_path / "d.csv"
    src.write_text("pred,gt,gt_depth\n11,10,5\n10,10,15\n")
    code, out, _ = run(["depth-metrics", "--input", str(src), "--ranges", "0-10,0-20"], capsys)
    rows = _csv(out)
    assert code == 0 and [r["count"] for r in rows] == ["1", "2"]
    assert float(rows[0]["abs_rel"]) == pytest.approx(10.0)
    src.write_text("pred,oops\n1,2\n")
    assert run(["depth-metrics", "--input", str(src)], capsys)[0] == 1
    src.write_text("pred,gt\n0,2\n")
    assert run(["depth-metrics", "--input", str(src)], capsys)[0] == 1


def test_errors_exit_one(tmp_path, capsys):
    code, _, err = run(["project", "--labels", str(tmp_path / "none.txt"), "--calib", str(tmp_path / "c.txt")], capsys)
    assert code == 1 and err
    bad = tmp_path / "bad.txt"
    bad.write_text("Car 1 2 3\n")
    code, _, err = run(["project", "--labels", str(bad), "--calib", str(bad)], capsys)
    assert code == 1 and "15 or 16" in err
    assert run(["misalign-report"], capsys)[0] == 1
    assert run(["compare-formulas"], capsys)[0] == 1


def test_raw_precision(capsys):
    _, short, _ = run(["compare-formulas", "--synthetic", "1"], capsys)
    _, raw, _ = run(["compare-formulas", "--synthetic", "1", "--raw"], capsys)
    assert len(raw) > len(short)


def test_verify_fixtures_command(capsys):
    code, out, _ = run(["verify-fixtures"], capsys)
    assert code == 0 and out.strip().endswith("fixtures passed")
