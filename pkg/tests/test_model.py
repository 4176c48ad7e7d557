import math

import numpy as np
import pytest

from kpc.errors import DegenerateModes, SingularDenominator
from kpc.model import (EvalPoint, Family, GridSpec, ScalarField, SolitonMode, SolutionSpec,
                       SpectralMode, as_points)


def test_family_parse_is_case_insensitive():
    assert Family.parse("Hyperbolic") is Family.HYPERBOLIC
    with pytest.raises(ValueError):
        Family.parse("elliptic")


def test_equal_trig_modes_are_degenerate():
    m = SpectralMode(0.5, 0.1)
    with pytest.raises(DegenerateModes):
        SolutionSpec("trigonometric", (m, m))


def test_hyperbolic_degeneracy_when_mu_gap_matches_lambda_gap():
    # alpha^2 (mu_n - mu_k)^2 = (lam_n - lam_k)^2
    with pytest.raises(DegenerateModes):
        SolutionSpec("hyperbolic", (SpectralMode(1.0, 0.0), SpectralMode(0.5, 0.5)))


def test_soliton_zero_denominator():
    with pytest.raises(SingularDenominator):
        SolutionSpec("soliton", (SolitonMode(0.5, -0.5),))


def test_family_mode_type_mismatch():
    with pytest.raises(TypeError):
        SolutionSpec("soliton", (SpectralMode(1.0),))


def test_alpha_other_than_one_rejected():
    with pytest.raises(ValueError):
        SolutionSpec("trigonometric", (SpectralMode(1.0),), alpha=2.0)


def test_nonfinite_inputs_rejected():
    with pytest.raises(ValueError):
        SpectralMode(math.nan)
    with pytest.raises(ValueError):
        EvalPoint(math.inf)


def test_grid_cell_centres_row_major():
    g = GridSpec(0, 2, 0, 1, 4, 2)
    X, Y = g.mesh()
    assert X.shape == (2, 4)
    np.testing.assert_allclose(g.xs, [0.25, 0.75, 1.25, 1.75])
    np.testing.assert_allclose(Y[:, 0], [0.25, 0.75])


def test_grid_bounds_validated():
    with pytest.raises(ValueError):
        GridSpec(1, 0, 0, 1, 3, 3)


def test_scalar_field_default_mask():
    g = GridSpec.square(1, 3)
    f = ScalarField(g, np.zeros(9))
    assert f.mask.shape == (3, 3) and not f.mask.any()


def test_as_points_accepts_mixed():
    x, y, t = as_points([EvalPoint(1, 2, 3), (4, 5, 6)])
    assert list(x) == [1, 4] and list(t) == [3, 6]
