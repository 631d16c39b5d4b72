"""Projective depth geometry for monocular 3D detection, with KITTI-style I/O and evaluation."""

from .box_geometry import (
    AngleSet, Box2D, Box3D, CornerSet, alpha_from_ry, angle_set, corner_offsets, corners_camera, delta_z_max,
    normalize_angle, project_box, ry_from_alpha,
)
from .camera import (
    CalibratedCamera, PixelPoint, backproject_depth_map, backproject_pixel, beta_from_pixel, project_point,
    project_points,
)
from .depth_formula import (
    DepthV2Scale, GeometryObservation, compare_formulas, depth_full, depth_v1, depth_v2, height_forward, observe_box,
)
from .errors import ConfigurationError, GeoDepthError, GeometryDomainError, InputError, ParseError
from .eval_depth import DepthErrorStats, bucketed_depth_errors, depth_errors
from .eval_detection import APResult, EvalConfig, assign_difficulty, evaluate_ap, evaluate_frames
from .iou import iou_2d, iou_3d, iou_bev
from .kitti_io import FrameCalib, LabelRecord, load_frame_set, parse_calib_file, parse_label_line, serialize_label
from .losses import FocalConfig, LossWeights, UncertainDepthPrediction, focal_variant, total_loss, uncertainty_l1

__version__ = "0.1.0"
