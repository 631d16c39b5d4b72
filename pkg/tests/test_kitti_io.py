import numpy as np
import pytest

from geodepth.camera import CalibratedCamera
from geodepth.errors import ParseError
from geodepth.kitti_io import (
    FrameCalib, LabelRecord, format_real, list_frame_ids, load_frame_set, parse_calib_file, parse_label_line,
    parse_label_text, read_label_file, serialize_calib, serialize_label, serialize_labels,
)

GOLDEN = [
    "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59",
    "Pedestrian 0.00 0 -0.20 712.40 143.00 810.73 307.92 1.89 0.48 1.20 1.84 1.47 8.41 0.01",
    "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10",
    "Car 0.50 2 1.25 0.00 181.43 87.11 283.32 1.50 1.60 3.90 -9.25 1.72 11.30 0.58 0.9871",
]

CALIB_TEXT = """P0: 721.5377 0.0 609.5593 0.0 0.0 721.5377 172.854 0.0 0.0 0.0 1.0 0.0
P2: 721.5377 0.0 609.5593 44.85728 0.0 721.5377 172.854 0.2163791 0.0 0.0 1.0 0.002745884
R0_rect: 0.9999239 0.00983776 -0.007445048 -0.009869795 0.9999421 -0.004278459 0.007402527 0.004351614 0.9999631
Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0
Extra_key: 1 2 3
"""


def test_golden_fields():
    rec = parse_label_line(GOLDEN[0])
    assert rec.category == "Car"
    assert rec.dims == (1.65, 1.67, 3.64)
    assert rec.location == (-0.65, 1.71, 46.70)
    assert rec.bbox == (587.01, 173.33, 614.12, 200.12)
    assert rec.score is None
    assert rec.bbox_height == pytest.approx(26.79)
    box = rec.to_box3d()
    assert (box.W, box.H, box.L) == (1.67, 1.65, 3.64)
    assert parse_label_line(GOLDEN[3]).score == 0.9871


def test_dontcare_is_ignorable():
    assert parse_label_line(GOLDEN[2]).ignorable
    assert not parse_label_line(GOLDEN[0]).ignorable


def test_golden_two_decimal_lines_round_trip_bytes():
    for line in (GOLDEN[0], GOLDEN[1], GOLDEN[3]):
        assert serialize_label(parse_label_line(line)) == line


def test_dontcare_round_trip_values():
    rec = parse_label_line(GOLDEN[2])
    assert parse_label_line(serialize_label(rec)) == rec


def test_format_real():
    assert format_real(1.5) == "1.50"
    assert format_real(-0.0) == "0.00"
    assert format_real(0.1 + 0.2) == "0.30000000000000004"
    assert float(format_real(1e-7)) == 1e-7
    with pytest.raises(ValueError):
        format_real(float("nan"))


def _random_record(rng, decimals):
    def r(lo, hi):
        v = rng.uniform(lo, hi)
        return round(v, decimals) if decimals is not None else v

    left, top = r(0, 1000), r(0, 300)
    return LabelRecord(
        str(rng.choice(["Car", "Van", "Pedestrian", "Cyclist"])), r(0, 1), int(rng.integers(-1, 4)), r(-3.14, 3.14),
        (left, top, left + abs(r(1, 200)), top + abs(r(1, 100))), (r(1, 2), r(1, 2), r(2, 5)),
        (r(-20, 20), r(-1, 3), r(1, 80)), r(-3.14, 3.14), None if rng.random() < 0.5 else r(0, 1),
    )


def test_fuzzed_round_trip_two_decimals(rng):
    for _ in range(1000):
        rec = _random_record(rng, 2)
        line = serialize_label(rec)
        assert parse_label_line(line) == rec
        assert serialize_label(parse_label_line(line)) == line


def test_fuzzed_round_trip_full_precision(rng):
    for _ in range(1000):
        rec = _random_record(rng, None)
        assert parse_label_line(serialize_label(rec)) == rec


def test_multi_line_text(tmp_path):
    recs = parse_label_text("\n".join(GOLDEN) + "\n\n")
    assert len(recs) == 4
    p = tmp_path / "000001.txt"
    p.write_text(serialize_labels(recs))
    assert read_label_file(p) == recs


@pytest.mark.parametrize("line, col", [
    ("Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 abc -1.59", 14),
    ("Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 nan -1.59", 14),
    ("Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 1_0 -1.59", 14),
    ("Car 0.00 5 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.7 -1.59", 3),
    ("Car 0.00 0.5 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.7 -1.59", 3),
    ("Car 0.00 0 -1.58 614.12 173.33 587.01 200.12 1.65 1.67 3.64 -0.65 1.71 46.7 -1.59", 5),
])
def test_malformed_fields_report_position(line, col):
    with pytest.raises(ParseError) as info:
        parse_label_line(line, 7)
    assert info.value.line == 7 and info.value.column == col


def test_wrong_field_count():
    with pytest.raises(ParseError, match="15 or 16"):
        parse_label_line("Car 0 0 0")
    with pytest.raises(ParseError) as info:
        parse_label_text(GOLDEN[0] + "\nCar 1 2\n")
    assert info.value.line == 2


def test_calib_parse():
    calib = parse_calib_file(CALIB_TEXT)
    cam = calib.camera
    assert (cam.f_u, cam.f_v, cam.c_u, cam.c_v) == (721.5377, 721.5377, 609.5593, 172.854)
    assert np.allclose(cam.projection_matrix, calib.projection())
    assert list(calib.matrices["Extra_key"]) == [1, 2, 3]
    assert calib.projection("P0")[0, 3] == 0.0


def test_calib_round_trip():
    calib = parse_calib_file(CALIB_TEXT)
    again = parse_calib_file(serialize_calib(calib))
    assert calib.matrices.keys() == again.matrices.keys()
    for key in calib.matrices:
        assert np.array_equal(calib.matrices[key], again.matrices[key])
    cam = CalibratedCamera(700, 710, 600, 180)
    assert parse_calib_file(serialize_calib(FrameCalib.from_camera(cam))).camera == cam


@pytest.mark.parametrize("text, key", [
    ("P2: 1 2 3\n", "P2"),
    ("P2: 721 0 609 0 0 721 172 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0\n", "R0_rect"),
    ("P2: 721 0 609 0 0 721 172 x 0 0 1 0\n", "P2"),
])
def test_calib_errors_name_key(text, key):
    with pytest.raises(ParseError) as info:
        parse_calib_file(text)
    assert info.value.key == key


def test_calib_missing_reference():
    with pytest.raises(ParseError, match="reference"):
        parse_calib_file("P0: 721 0 609 0 0 721 172 0 0 0 1 0\n")


def _write_frames(root, ids, bad=()):
    (root / "label_2").mkdir()
    (root / "calib").mkdir()
    for i in ids:
        (root / "label_2" / f"{i}.txt").write_text("Car 1 2\n" if i in bad else GOLDEN[0] + "\n")
        (root / "calib" / f"{i}.txt").write_text(CALIB_TEXT)
    return root / "label_2", root / "calib"


def test_load_frame_set(tmp_path):
    labels, calib = _write_frames(tmp_path, ["000002", "000001", "000003"], bad={"000003"})
    entries = load_frame_set(labels, calib, ["000003", "000001", "000002", "000009"])
    assert [e.frame_id for e in entries] == ["000001", "000002", "000003", "000009"]
    assert [e.ok for e in entries] == [True, True, False, False]
    assert "000003" in entries[2].error and "missing" in entries[3].error
    assert entries[0].labels[0].category == "Car"
    assert list_frame_ids(labels) == ["000001", "000002", "000003"]


def test_load_frame_set_all_fail(tmp_path):
    labels, calib = _write_frames(tmp_path, ["000001"], bad={"000001"})
    with pytest.raises(FileNotFoundError):
        load_frame_set(labels, calib, ["000001", "000002"])


def test_load_frame_set_bad_directory(tmp_path):
    with pytest.raises(NotADirectoryError):
        load_frame_set(tmp_path / "nope", tmp_path, ["000001"])
