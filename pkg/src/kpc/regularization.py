"""Monotone display regularization of f and the capped map for rogue plots.

F(f) = sign(f) * ln(ln(|e^f - 1| + 1) + 1), F(0) = 0. For f > 0 this is
exactly ln(f + 1); for f < 0 it is -ln(ln(2 - e^f) + 1), which tends to
-ln(ln 2 + 1) as f -> -inf.
"""
import math

import numpy as np

from .model import ScalarField

FLOOR = -math.log(math.log(2.0) + 1.0)


def _negative(f):
    # ln(2 - e^f) = ln 2 + log1p(-e^f / 2); accurate when e^f is tiny
    return -np.log1p(math.log(2.0) + np.log1p(-0.5 * np.exp(f)))


def regularize(f):
    """Elementwise F; accepts scalars or arrays, returns the same kind."""
    a = np.asarray(f, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    neg = a < 0
    out[pos] = np.log1p(a[pos])
    out[neg] = _negative(a[neg])
    out[np.isneginf(a)] = FLOOR
    return float(out) if out.ndim == 0 else out


def regularize_field(field: ScalarField) -> ScalarField:
    """F over a field; masked cells take the lower bound."""
    vals = np.where(field.mask, FLOOR, regularize(np.where(field.mask, 0.0, field.values)))
    return ScalarField(field.grid, vals, field.mask.copy(), field.t)


def clip_display(f, cap: float = 10.0, literal: bool = False):
    """Regularized troughs with capped crests.

    Negative values map through :func:`regularize`. Positive values are
    ``min(f, cap)``; ``literal=True`` gives ``max(f, cap)`` instead.
    """
    a = np.asarray(f, dtype=float)
    top = np.maximum(a, cap) if literal else np.minimum(a, cap)
    out = np.where(a > 0, top, regularize(np.minimum(a, 0.0)))
    return float(out) if out.ndim == 0 else out


def clip_field(field: ScalarField, cap: float = 10.0, literal: bool = False) -> ScalarField:
    vals = np.where(field.mask, FLOOR,
                    clip_display(np.where(field.mask, 0.0, field.values), cap, literal))
    return ScalarField(field.grid, vals, field.mask.copy(), field.t)
