import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from convexcore import Ball, ConvexConstraint, HalfSpace  # noqa: E402
from mvsolver import NoiseSource, TimeGrid  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def half_line():
    return ConvexConstraint.indicator(HalfSpace([-1.0], 0.0))


@pytest.fixture
def right_half_plane():
    """{x₁ ≥ 0} ⊂ ℝ²"""
    return ConvexConstraint.indicator(HalfSpace([-1.0, 0.0], 0.0))


@pytest.fixture
def unit_ball():
    return ConvexConstraint.indicator(Ball([0.0, 0.0], 1.0))


@pytest.fixture
def small_grid():
    return TimeGrid(0.0, 1.0, 64)


@pytest.fixture
def noise():
    return NoiseSource(42)
