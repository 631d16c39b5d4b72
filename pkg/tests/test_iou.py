import math

import numpy as np
import pytest

from geodepth.box_geometry import Box2D, Box3D
from geodepth.iou import clip_convex, intersection_2d, iou_2d, iou_3d, iou_bev, polygon_area
from oracles import axis_aligned_iou_3d, monte_carlo_bev_iou
from scenarios import random_box


def test_iou_2d_basic():
    assert iou_2d((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)
    assert iou_2d(Box2D.from_ltrb(0, 0, 2, 2), (0, 0, 2, 2)) == 1.0
    assert iou_2d((0, 0, 1, 1), (1, 0, 2, 1)) == 0.0
    assert intersection_2d((0, 0, 4, 4), (1, 1, 2, 3)) == 2.0


def test_polygon_area_and_clip():
    square = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float)
    assert polygon_area(square) == 4.0
    shifted = square + 1
    assert polygon_area(clip_convex(square, shifted)) == pytest.approx(1.0)
    assert polygon_area(clip_convex(square, square + 5)) == 0.0
    assert polygon_area(square[:2]) == 0.0


def test_identical_boxes(rng):
    for _ in range(50):
        b = random_box(rng)
        assert iou_bev(b, b) == pytest.approx(1.0, abs=1e-12)
        assert iou_3d(b, b) == pytest.approx(1.0, abs=1e-12)


def test_symmetric_and_bounded(rng):
    for _ in range(200):
        a = random_box(rng)
        b = random_box(rng, near=a)
        assert iou_bev(a, b) == pytest.approx(iou_bev(b, a), abs=1e-12)
        assert 0.0 <= iou_3d(a, b) <= 1.0
        same_slab = Box3D(b.W, a.H, b.L, b.x, a.y, b.z, b.ry)
        assert iou_3d(a, same_slab) == pytest.approx(iou_bev(a, same_slab), abs=1e-12)


def test_rotation_by_pi_is_same_footprint():
    a = Box3D(1.6, 1.5, 3.9, 2, 1.6, 20, 0.3)
    assert iou_bev(a, a.__class__(a.W, a.H, a.L, a.x, a.y, a.z, 0.3 + math.pi)) == pytest.approx(1.0)


def test_axis_aligned_exact(rng):
    for _ in range(200):
        a = Box3D(*rng.uniform(0.5, 3, 3), rng.uniform(-2, 2), rng.uniform(1, 2), rng.uniform(8, 12), 0.0)
        b = Box3D(*rng.uniform(0.5, 3, 3), rng.uniform(-2, 2), rng.uniform(1, 2), rng.uniform(8, 12), 0.0)
        bev, vol = axis_aligned_iou_3d(a, b)
        assert iou_bev(a, b) == pytest.approx(bev, abs=1e-12)
        assert iou_3d(a, b) == pytest.approx(vol, abs=1e-12)


def test_disjoint_vertically():
    a = Box3D(1.6, 1.0, 3.9, 0, 1.0, 20, 0.2)
    b = Box3D(1.6, 1.0, 3.9, 0, 3.0, 20, 0.2)
    assert iou_bev(a, b) == pytest.approx(1.0)
    assert iou_3d(a, b) == 0.0


def test_rotated_against_monte_carlo(rng):
    for _ in range(20):
        a = random_box(rng)
        b = random_box(rng, near=a)
        assert iou_bev(a, b) == pytest.approx(monte_carlo_bev_iou(a, b, 400, rng), abs=5e-3)


def test_crossed_rectangles():
    a = Box3D(1.0, 1.0, 4.0, 0, 1, 10, 0.0)
    b = Box3D(1.0, 1.0, 4.0, 0, 1, 10, math.pi / 2)
    assert iou_bev(a, b) == pytest.approx(1 / 7, abs=1e-12)
