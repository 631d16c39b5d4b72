"""Overlap measures for image rectangles, bird's-eye footprints and 3D boxes."""

from __future__ import annotations

import numpy as np

from .box_geometry import Box2D, Box3D

_EPS = 1e-12


def _ltrb(box):
    return box.ltrb if isinstance(box, Box2D) else tuple(float(v) for v in box)


def _area_ltrb(r):
    return max(0.0, r[2] - r[0]) * max(0.0, r[3] - r[1])


def intersection_2d(a, b) -> float:
    a, b = _ltrb(a), _ltrb(b)
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w * h if w > 0 and h > 0 else 0.0


def iou_2d(a, b) -> float:
    """IoU of two axis-aligned rectangles given as :class:`Box2D` or ``(l, t, r, b)``."""
    inter = intersection_2d(a, b)
    if inter <= 0:
        return 0.0
    union = _area_ltrb(_ltrb(a)) + _area_ltrb(_ltrb(b)) - inter
    return inter / union if union > _EPS else 0.0


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def clip_convex(subject, clip) -> np.ndarray:
    """Sutherland-Hodgman clip of ``subject`` by the counter-clockwise convex ``clip``."""
    output = [tuple(p) for p in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        inp, output = output, []
        prev = inp[-1]
        s_prev = side(prev)
        for cur in inp:
            s_cur = side(cur)
            if s_cur >= 0:
                if s_prev < 0:
                    output.append(_cross_point(prev, cur, s_prev, s_cur))
                output.append(cur)
            elif s_prev >= 0:
                output.append(_cross_point(prev, cur, s_prev, s_cur))
            prev, s_prev = cur, s_cur
    return np.array(output, dtype=float).reshape(-1, 2)


def _cross_point(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def bev_intersection(a: Box3D, b: Box3D) -> float:
    return polygon_area(clip_convex(a.footprint(), b.footprint()))


def iou_bev(a: Box3D, b: Box3D) -> float:
    """Rotated footprint IoU in the x-z plane."""
    area_a, area_b = a.W * a.L, b.W * b.L
    inter = bev_intersection(a, b)
    union = area_a + area_b - inter
    if inter <= 0 or union <= _EPS:
        return 0.0
    return min(1.0, inter / union)


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Volume IoU; boxes span ``[y - H, y]`` vertically (y down)."""
    overlap_y = min(a.y, b.y) - max(a.y - a.H, b.y - b.H)
    if overlap_y <= 0:
        return 0.0
    inter = bev_intersection(a, b) * overlap_y
    union = a.volume + b.volume - inter
    if inter <= 0 or union <= _EPS:
        return 0.0
    return min(1.0, inter / union)
