import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpc.model import GridSpec, ScalarField
from kpc.regularization import FLOOR, clip_display, clip_field, regularize, regularize_field


def test_fixed_values():
    assert regularize(0.0) == 0.0
    assert regularize(1.0) == pytest.approx(math.log(2), abs=1e-12)
    # frozen from direct evaluation
    assert regularize(-1.0) == pytest.approx(-0.398696, abs=5e-7)


def test_floor_and_growth():
    assert regularize(-50.0) == pytest.approx(FLOOR, abs=1e-12)
    assert regularize(-math.inf) == FLOOR
    assert regularize(1e6) - math.log(1e6 + 1) == pytest.approx(0.0, abs=1e-12)


def test_near_identity_at_zero():
    f = np.linspace(-0.1, 0.1, 20001)
    assert np.max(np.abs(regularize(f) - f)) <= 0.015


def test_strictly_increasing_on_samples():
    f = np.sort(np.random.default_rng(0).uniform(-25, 25, 10_000))
    assert np.all(np.diff(regularize(f)) > 0)


@given(st.floats(-25, 25), st.floats(-25, 25))
def test_monotone_pairs(a, b):
    if a < b:
        assert regularize(a) <= regularize(b)


@given(st.floats(-1e300, 1e300))
def test_range(f):
    v = regularize(f)
    assert FLOOR <= v
    assert v <= max(f, 0.0) + 1e-15


def test_array_shape_kept():
    a = np.zeros((2, 3))
    assert regularize(a).shape == (2, 3)


def test_field_masks_to_floor():
    g = GridSpec.square(1, 2)
    fld = ScalarField(g, [[-np.inf, 1.0], [0.0, -2.0]], [[True, False], [False, False]])
    out = regularize_field(fld)
    assert out.values[0, 0] == FLOOR
    assert out.values[0, 1] == pytest.approx(math.log(2))


def test_clip_caps_crests():
    assert clip_display(25.0) == 10.0
    assert clip_display(3.0) == 3.0
    assert clip_display(-1.0) == pytest.approx(regularize(-1.0))
    assert clip_display(3.0, literal=True) == 10.0


def test_clip_field_masked_floor():
    g = GridSpec.square(1, 2)
    fld = ScalarField(g, [[-np.inf, 30.0], [0.5, -2.0]], [[True, False], [False, False]])
    out = clip_field(fld)
    assert out.values[0, 0] == FLOOR and out.values[0, 1] == 10.0
