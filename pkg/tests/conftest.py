import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geodepth.camera import CalibratedCamera  # noqa: E402


@pytest.fixture
def cam():
    return CalibratedCamera(700.0, 700.0, 600.0, 180.0)


@pytest.fixture
def kitti_cam():
    return CalibratedCamera(721.5377, 721.5377, 609.5593, 172.854, (44.85728, 0.2163791, 0.002745884))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
