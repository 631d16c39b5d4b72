import json

import pytest

from geodepth.errors import ConfigurationError
from geodepth.fixtures import OPERATIONS, PROVENANCE_TAGS, check_fixture, load_fixtures, verify_fixtures

# every public operation, keyed as in the fixture registry
PUBLIC_OPERATIONS = {
    "camera.project_point", "camera.backproject_pixel", "camera.backproject_depth_map", "camera.beta_from_pixel",
    "box_geometry.corner_offsets", "box_geometry.corners_camera", "box_geometry.delta_z_max",
    "box_geometry.project_box", "box_geometry.alpha_from_ry",
    "depth_formula.height_forward", "depth_formula.depth_full", "depth_formula.depth_v1", "depth_formula.depth_v2",
    "depth_formula.compare_formulas",
    "kitti_io.parse_label_line", "kitti_io.serialize_label", "kitti_io.parse_calib_file", "kitti_io.load_frame_set",
    "eval_detection.iou_2d", "eval_detection.iou_bev", "eval_detection.iou_3d", "eval_detection.assign_difficulty",
    "eval_detection.evaluate_ap",
    "eval_depth.depth_errors", "eval_depth.bucketed_depth_errors",
    "losses.focal_variant", "losses.uncertainty_l1", "losses.total_loss",
    "analysis.generate_scenes", "analysis.misalignment_report", "analysis.depth_spread_table",
    "analysis.sensitivity_sweep",
    "cli.run", "fixtures.verify_fixtures",
}


def test_all_packaged_fixtures_pass():
    results = verify_fixtures()
    failed = [(r.name, r.detail) for r in results if not r.passed]
    assert not failed


def test_every_public_operation_has_a_fixture():
    covered = {fx["operation"] for fx in load_fixtures()}
    assert PUBLIC_OPERATIONS <= set(OPERATIONS)
    assert not PUBLIC_OPERATIONS - covered


def test_every_fixture_is_tagged_and_named():
    names = set()
    for fx in load_fixtures():
        assert fx["provenance"]["tag"] in PROVENANCE_TAGS
        assert fx["provenance"]["note"]
        assert fx["name"] not in names
        names.add(fx["name"])


def test_corrupted_fixture_fails(tmp_path, capsys):
    fixtures = load_fixtures()
    victim = next(fx for fx in fixtures if fx["operation"] == "depth_formula.depth_full")
    victim = dict(victim, expected=victim["expected"] * 1.01)
    (tmp_path / "bad.json").write_text(json.dumps([victim]))
    res = verify_fixtures(tmp_path)
    assert len(res) == 1 and not res[0].passed and res[0].name == victim["name"]
    assert res[0].detail

    from geodepth.cli import main
    assert main(["verify-fixtures", "--dir", str(tmp_path)]) == 1
    assert "FAIL " + victim["name"] in capsys.readouterr().out


def test_untagged_or_unknown():
    assert not check_fixture({"name": "x", "operation": "cli.run", "input": {}, "expected": 0}).passed
    assert not check_fixture({"name": "x", "operation": "nope", "input": {}, "expected": 0,
                              "provenance": {"tag": "trivial", "note": "n"}}).passed


def test_missing_directory(tmp_path):
    with pytest.raises(ConfigurationError):
        verify_fixtures(tmp_path / "absent")
