import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpc.errors import FewerThanTwoTroughs, InsufficientWindow
from kpc.model import GridSpec, soliton
from kpc.rogue import (ExtremeSeries, detect_transient, find_tops, local_maxima_2d,
                       time_series_max, trough_points)


def series(values, t0=-5.0, dt=0.1):
    v = np.asarray(values, dtype=float)
    t = t0 + dt * np.arange(v.size)
    z = np.zeros((v.size, 2))
    return ExtremeSeries(t, v, z, -v, z)


def test_constant_series_has_no_event():
    assert detect_transient(series(np.ones(101))) == []


def test_single_spike():
    v = np.ones(101)
    v[50] = 5.0
    ev = detect_transient(series(v))
    assert len(ev) == 1
    assert ev[0].t_peak == pytest.approx(0.0, abs=1e-12)
    assert ev[0].prominence_ratio == pytest.approx(5.0)
    assert ev[0].background == 1.0


def test_spike_below_threshold():
    v = np.ones(101)
    v[50] = 2.5
    assert detect_transient(series(v)) == []


def test_two_separate_excursions():
    v = np.ones(101)
    v[40] = v[60] = 4.0
    assert len(detect_transient(series(v))) == 2


def test_tie_goes_to_excursion_centre():
    v = np.ones(101)
    v[45:56] = 4.0
    assert detect_transient(series(v))[0].t_peak == pytest.approx(0.0, abs=1e-12)


def test_short_series_raises():
    with pytest.raises(InsufficientWindow):
        detect_transient(series(np.ones(20)))


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50), st.integers(20, 80), st.floats(3.5, 20))
def test_translation_shifts_peak(dt, k, height):
    v = np.ones(101)
    v[k] = height
    s = series(v)
    a = detect_transient(s)
    b = detect_transient(s.shifted(dt))
    assert len(a) == len(b) == 1
    assert b[0].t_peak == pytest.approx(a[0].t_peak + dt, abs=1e-9)


def test_soliton_max_is_constant():
    s = soliton(0.5, 0.5)
    ser = time_series_max(s, GridSpec.square(8, 40), [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(ser.max_value, 0.5, rtol=1e-9)


def test_zero_soliton_max_is_zero():
    ser = time_series_max(soliton(0.5, 0.5, 0.0), GridSpec.square(2, 6), [0.0, 1.0])
    assert np.all(ser.max_value == 0)


def test_times_must_be_sorted(sol):
    with pytest.raises(ValueError):
        time_series_max(sol, GridSpec.square(2, 6), [1.0, 0.0])


def test_single_soliton_has_no_two_troughs(sol):
    with pytest.raises(FewerThanTwoTroughs):
        trough_points(sol, GridSpec.square(8, 40), 0.0)


def test_plateau_counts_once():
    v = np.zeros((4, 4))
    v[1:3, 1:3] = 1.0
    peaks = local_maxima_2d(v, v > 0.5)
    assert peaks.sum() == 1


def test_fig19_two_tops_at_zero(fig19):
    tops = find_tops(fig19, GridSpec.square(15, 200), 0.0)
    assert len(tops) == 2
    (x1, y1), (x2, y2) = tops
    # point symmetric pair on the diagonal
    assert x1 == pytest.approx(-x2, abs=0.2) and y1 == pytest.approx(-y2, abs=0.2)
    assert abs(x1) == pytest.approx(1.27, abs=0.2)
