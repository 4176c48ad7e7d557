import numpy as np
import pytest

from kpc.geometry import (component_mask, half_plane_mask, line_fit_deviation,
                          scan_singular_curve, singular_indicator)
from kpc.kernel import evaluate, field_f_grid
from kpc.model import EvalPoint, GridSpec, breather, soliton
from kpc.regularization import FLOOR


def test_indicator_is_closed_form_for_breather(fig1):
    pt = EvalPoint(0.3, 0.2, 0.0)
    m = fig1.modes[0]
    from kpc.kernel import phase_gamma, phase_upsilon
    g, u = phase_gamma(m, pt, fig1.family), phase_upsilon(m, pt, fig1.family)
    assert singular_indicator(fig1, pt) == pytest.approx(2 * m.lam * u - np.sin(2 * g))


def test_trace_vertices_are_zeros(fig7):
    tr = scan_singular_curve(fig7, GridSpec.square(10, 80), 0.0)
    v = tr.vertices
    assert len(v) > 50
    ev = evaluate(fig7, v[:, 0], v[:, 1], 0.0)
    # |D| relative to its scale is tiny at every vertex
    assert np.all(ev.logabsdet - ev.log_scale < np.log(1e-8))


def test_fig1_trace_is_straight(fig1):
    tr = scan_singular_curve(fig1, GridSpec.square(10, 150), 0.0)
    assert len(tr.segments) == 1
    assert line_fit_deviation(tr.vertices) < 2 * 20 / 150


def test_curved_trace_for_nonzero_chi(fig7):
    tr = scan_singular_curve(fig7, GridSpec.square(10, 150), 0.0)
    assert line_fit_deviation(tr.vertices) > 3 * 20 / 150  # several cells


def test_no_trace_for_soliton():
    tr = scan_singular_curve(soliton(0.5, 0.5), GridSpec.square(5, 40), 0.0)
    assert len(tr) == 0 and tr.vertices.shape == (0, 2)


def test_line_fit_of_collinear_points():
    p = np.column_stack([np.linspace(0, 1, 10), 2 * np.linspace(0, 1, 10) + 1])
    assert line_fit_deviation(p) == pytest.approx(0.0, abs=1e-12)


def test_fig1_two_components(fig1):
    cm = component_mask(fig1, GridSpec.square(10, 120), 0.0)
    assert cm.count == 2
    a, b = cm.sizes()
    assert a == b  # the field is odd about the singular line


def test_restrict_fills_floor(fig1):
    g = GridSpec.square(10, 60)
    cm = component_mask(fig1, g, 0.0)
    fld = field_f_grid(fig1, g, 0.0)
    half = cm.restrict(fld, cm.largest()[0])
    outside = cm.labels != cm.largest()[0]
    assert np.all(half.values[outside] == FLOOR)


def test_half_plane_labels():
    g = GridSpec.square(1, 4)
    cm = half_plane_mask(g, (0, 0), (0, 1))
    assert cm.count == 2
    assert np.all(cm.labels[2:] == 1) and np.all(cm.labels[:2] == 2)
    with pytest.raises(ValueError):
        half_plane_mask(g, (0, 0), (0, 0))
