import math

import numpy as np
import pytest

from kpc.errors import StencilOnSingularSet
from kpc.model import EvalPoint, GridSpec, SolutionSpec, SpectralMode, breather, soliton
from kpc.verification import (DEFAULT_PROBES, ResidualReport, kp_residual, residual_scan,
                              soliton_limit_check, soliton_recipe)


def test_residual_of_soliton_is_small(sol):
    assert kp_residual(sol, EvalPoint(0.3, 0.2, 0.1)) < 1e-8


def test_residual_detects_a_non_solution():
    # breather with the printed unshifted coupling is not a KP solution for chi != 0
    modes = (SpectralMode(0.5, 0.2, 0.6), SpectralMode(1.0, 0.5, -0.7))
    bad = SolutionSpec("hyperbolic", modes, shifted_coupling=False)
    good = SolutionSpec("hyperbolic", modes)
    pt = EvalPoint(3.0, -2.0, 0.2)
    assert kp_residual(bad, pt, precision="double") > 1e3 * kp_residual(good, pt, precision="double")


def test_multiprecision_keeps_fourth_order(fig1):
    # in double the 1/h^4 roundoff of f_xxxx takes over below h ~ 1e-2
    pt = EvalPoint(3.0, -1.0, 0.1)
    r1 = kp_residual(fig1, pt, 5e-3, precision="multi")
    r2 = kp_residual(fig1, pt, 2.5e-3, precision="multi")
    assert 8 <= r1 / r2 <= 32
    assert kp_residual(fig1, pt, 2.5e-3, precision="double") > 100 * r2


def test_stencil_on_singular_line(fig1):
    with pytest.raises(StencilOnSingularSet):
        kp_residual(fig1, EvalPoint(0.0, 0.0, 0.0))


def test_step_must_be_positive(sol):
    with pytest.raises(ValueError):
        kp_residual(sol, EvalPoint(0, 0, 0), h=0)


def test_zero_soliton_scan_is_exactly_zero():
    rep = residual_scan(soliton(0.5, 0.5, 0.0), GridSpec.square(2, 8), 0.0)
    assert rep.max_residual == 0.0
    assert rep.relative == 0.0
    assert rep.points_checked == 64


def test_scan_excludes_near_curve(fig1):
    rep = residual_scan(fig1, GridSpec.square(4, 20), 0.0, exclusion_radius=0.5)
    assert rep.points_excluded > 0
    assert rep.points_checked + rep.points_excluded == 400
    assert rep.precision == "multi"


def test_report_dict():
    d = ResidualReport(2.0, 1.0, 3, 4, 4.0).to_dict()
    assert d["relative"] == 0.5 and d["points_checked"] == 3


def test_recipe_conjugate_pairs():
    p, q, c = soliton_recipe(SpectralMode(0.5, -0.1, 0.3, 0.2, 0.1), 0.1)
    assert p[1] == p[0].conjugate() and c[1] == c[0].conjugate()
    assert p[0].imag == pytest.approx(0.5 + 0.1 * math.sin(0.3))


@pytest.mark.parametrize("mode", [SpectralMode(0.5, -0.1, 0.0), SpectralMode(0.65, -0.1, 0.105 * math.pi),
                                  SpectralMode(0.5, -0.1, 0.3, 0.2, 0.1)])
def test_limit_error_shrinks(mode):
    err = soliton_limit_check(mode)
    assert all(b < a for a, b in zip(err, err[1:]))


def test_limit_converges_to_offset_breather():
    mode = SpectralMode(0.5, -0.1, 0.3, 0.4, -0.2)
    err = soliton_limit_check(mode, eps_list=(1e-3, 1e-4))
    assert err[-1] < 1e-2


def test_limit_needs_probes():
    with pytest.raises(ValueError):
        soliton_limit_check(SpectralMode(0.5), probe_points=[])
    assert len(DEFAULT_PROBES) == 4
