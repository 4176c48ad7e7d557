"""Solution kernel: phases, family matrices and f = 2 d^2/dx^2 ln|det|.

The batched hot loop lives in a compiled extension (``kpc._ckernel``) when it
is available; otherwise the numpy reference (``kpc._pykernel``) is used. Set
``KPC_BACKEND=python`` to force the reference backend.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np

from . import _pykernel
from .errors import NonFinite, OnSingularSet
from .model import EvalPoint, Family, GridSpec, ScalarField, SolutionSpec, SpectralMode

try:  # pragma: no cover - depends on build
    if os.environ.get("KPC_BACKEND", "").lower() in ("python", "py", "numpy"):
        raise ImportError("reference backend requested")
    from . import _ckernel as _fast
    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build
    _fast = _pykernel
    BACKEND = "python"

_KIND = {Family.TRIGONOMETRIC: _pykernel.TRIG, Family.HYPERBOLIC: _pykernel.HYPER,
         Family.SOLITON: _pykernel.SOLITON}

# points per worker chunk; fixed so chunking never depends on thread count
CHUNK = 4096


class Evaluation(NamedTuple):
    """Batched kernel output; arrays share one shape."""

    f: np.ndarray
    fx: Optional[np.ndarray]
    logabsdet: np.ndarray
    sign: np.ndarray
    log_scale: np.ndarray
    singular: np.ndarray


def default_threads() -> int:
    try:
        n = int(os.environ.get("KPC_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def _backend(name):
    if name is None:
        return _fast
    if name == "python":
        return _pykernel
    if name == "cython":
        if _fast is _pykernel:
            raise RuntimeError("compiled backend is not available")
        return _fast
    raise ValueError(f"unknown backend {name!r}")


def _eval_chunk(spec: SolutionSpec, x, y, t, want_fx, backend):
    kind = _KIND[spec.family]
    if kind == _pykernel.SOLITON:
        p, q, c = spec.soliton_arrays()
        if not spec.is_real:
            return _pykernel.eval_complex_soliton(p, q, c, x, y, t, want_fx)
        params = np.stack([p.real, q.real, c.real], axis=1)
        return backend.eval_real(kind, params, spec.shifted_coupling, x, y, t, want_fx)
    return backend.eval_real(kind, spec.mode_array(), spec.shifted_coupling, x, y, t, want_fx)


def evaluate(spec: SolutionSpec, x, y, t, want_fx=False, threads=None, backend=None) -> Evaluation:
    """Evaluate the field at broadcast points (x, y, t).

    Work is split into fixed-size chunks; each point is computed
    independently, so results are bit-identical for any thread count.
    """
    x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, t)))
    shape = x.shape
    # copies: broadcast views are read-only and may alias
    xf, yf, tf = (np.array(v.ravel(), copy=True) for v in (x, y, t))
    be = _backend(backend)
    n = xf.size
    bounds = [(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)] or [(0, 0)]

    def run(b):
        lo, hi = b
        return _eval_chunk(spec, xf[lo:hi], yf[lo:hi], tf[lo:hi], want_fx, be)

    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(bounds) == 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, bounds))
    out = []
    for i in range(6):
        if i == 1 and not want_fx:
            out.append(None)
            continue
        out.append(np.concatenate([np.asarray(p[i]) for p in parts]).reshape(shape))
    out[5] = out[5].astype(bool)
    return Evaluation(*out)


# ---------------------------------------------------------------- phases

def _one(pt: EvalPoint):
    return (np.array([pt.x]), np.array([pt.y]), np.array([pt.t]))


def _phase_pair(mode: SpectralMode, pt: EvalPoint, family, alpha=1.0):
    fam = Family.parse(family)
    if fam is Family.SOLITON:
        raise ValueError("phases are defined for trigonometric and hyperbolic families")
    G, U, _ = _pykernel._phases(_KIND[fam], np.array([mode.as_row()]), *_one(pt), alpha=alpha)
    return float(G[0, 0]), float(U[0, 0])


def phase_gamma(mode: SpectralMode, pt: EvalPoint, family, alpha: float = 1.0) -> float:
    """Linear phase Gamma_n at ``pt``."""
    return _phase_pair(mode, pt, family, alpha)[0]


def phase_upsilon(mode: SpectralMode, pt: EvalPoint, family, alpha: float = 1.0) -> float:
    """Secular factor Upsilon_n at ``pt``."""
    return _phase_pair(mode, pt, family, alpha)[1]


# ---------------------------------------------------------------- matrices

def _soliton_literal(spec: SolutionSpec, pt: EvalPoint, order: int):
    """Unscaled A and its x-derivatives (may overflow far from the origin)."""
    p, q, c = spec.soliton_arrays()
    if spec.is_real:
        p, q, c = p.real, q.real, c.real
    k = p + q
    theta = k * pt.x + (q * q - p * p) * pt.y - k * (k * k + 3 * (p - q) ** 2) * pt.t
    body = (c * np.exp(theta))[None, :] / (p[None, :] + q[:, None])
    mats = []
    for d in range(order + 1):
        m = body * (k ** d)[None, :]
        if d == 0:
            m = m + np.eye(len(p))
        mats.append(m)
    return mats


def matrix_x_derivatives(spec: SolutionSpec, pt: EvalPoint, order: int = 2):
    """Family matrix and its analytic x-derivatives up to ``order``."""
    if spec.family is Family.SOLITON:
        return tuple(_soliton_literal(spec, pt, order))
    mats = _pykernel.spectral_matrices(_KIND[spec.family], spec.mode_array(),
                                       spec.shifted_coupling, *_one(pt), order=order)
    return tuple(m[0] for m in mats)


def interaction_matrix(spec: SolutionSpec, pt: EvalPoint) -> np.ndarray:
    if spec.family is Family.SOLITON:
        raise ValueError("interaction_matrix needs a trigonometric or hyperbolic spec")
    return matrix_x_derivatives(spec, pt, order=0)[0]


def soliton_matrix(spec: SolutionSpec, pt: EvalPoint) -> np.ndarray:
    if spec.family is not Family.SOLITON:
        raise ValueError("soliton_matrix needs a soliton spec")
    return _soliton_literal(spec, pt, 0)[0]


def determinant(spec: SolutionSpec, pt: EvalPoint):
    """det of the family matrix at ``pt`` (complex for complex solitons)."""
    m = matrix_x_derivatives(spec, pt, order=0)[0]
    d = np.linalg.det(m)
    return complex(d) if np.iscomplexobj(d) else float(d)


# ---------------------------------------------------------------- fields

def _point(spec, pt, want_fx):
    ev = evaluate(spec, pt.x, pt.y, pt.t, want_fx=want_fx, threads=1)
    if bool(ev.singular):
        raise OnSingularSet(f"determinant vanishes numerically at {pt}")
    return ev


def field_f(spec: SolutionSpec, pt: EvalPoint) -> float:
    """f at one point via the Jacobi identity."""
    ev = _point(spec, pt, False)
    val = float(ev.f)
    if not math.isfinite(val):
        raise NonFinite(f"non-finite f at {pt}")
    return val


def field_fx(spec: SolutionSpec, pt: EvalPoint) -> float:
    """Analytic df/dx (third log-derivative term)."""
    ev = _point(spec, pt, True)
    val = float(ev.fx)
    if not math.isfinite(val):
        raise NonFinite(f"non-finite f_x at {pt}")
    return val


def field_fx_fd(spec: SolutionSpec, pt: EvalPoint, h: float = 1e-3) -> float:
    """df/dx from a 4th-order central difference of ``field_f``."""
    if not h > 0:
        raise ValueError("h must be positive")
    xs = pt.x + h * np.array([-2.0, -1.0, 1.0, 2.0])
    ev = evaluate(spec, xs, pt.y, pt.t, threads=1)
    if ev.singular.any():
        raise OnSingularSet(f"stencil around {pt} touches the singular set")
    fm2, fm1, fp1, fp2 = ev.f
    return float((fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h))


def field_f_fd(spec: SolutionSpec, pt: EvalPoint, h: float = 1e-3) -> float:
    """Oracle: 5-point second difference of ln|det| in x, times 2."""
    if not h > 0:
        raise ValueError("h must be positive")
    xs = pt.x + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    ev = evaluate(spec, xs, pt.y, pt.t, threads=1)
    if ev.singular.any():
        raise OnSingularSet(f"stencil around {pt} touches the singular set")
    L = ev.logabsdet
    return float((-L[0] + 16 * L[1] - 30 * L[2] + 16 * L[3] - L[4]) * 2 / (12 * h * h))


def sign_change_mask(sign: np.ndarray, logabsdet: np.ndarray) -> np.ndarray:
    """Cells adjacent to a zero of det: in every 4-neighbour pair whose signs
    differ, mark the cell with the smaller |det|."""
    s = np.sign(np.real(sign))
    mask = np.zeros(s.shape, dtype=bool)
    for axis in (0, 1):
        a = [slice(None)] * 2
        b = [slice(None)] * 2
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        a, b = tuple(a), tuple(b)
        flip = s[a] * s[b] < 0
        first = logabsdet[a] <= logabsdet[b]
        mask[a] |= flip & first
        mask[b] |= flip & ~first
    return mask


def field_f_grid(spec: SolutionSpec, grid: GridSpec, t: float = 0.0, threads=None,
                 backend=None) -> ScalarField:
    """f on the cell centres of ``grid``.

    Cells that are numerically singular, or that sit next to a sign change
    of det (the singular curve passes between them), are masked; their value
    is ``-inf``.
    """
    X, Y = grid.mesh()
    ev = evaluate(spec, X, Y, t, threads=threads, backend=backend)
    mask = ev.singular | sign_change_mask(ev.sign, ev.logabsdet)
    vals = np.where(mask, -np.inf, ev.f)
    return ScalarField(grid, vals, mask, float(t))


def has_closed_form(spec: SolutionSpec) -> bool:
    """Single-mode real families have a scalar closed form for f."""
    return spec.n == 1 and spec.is_real


def field_f_closed(spec: SolutionSpec, x, y, t, dtype=np.longdouble) -> np.ndarray:
    """f for a single real mode from its scalar determinant, in ``dtype``.

    With D the determinant (up to a constant factor), f = 2 (D D'' - D'^2) / D^2.
    Extended precision lowers the roundoff floor of high-order difference
    stencils built on these samples. Singular points give non-finite values.
    """
    if not has_closed_form(spec):
        raise ValueError("closed form needs one real mode")
    x, y, t = (np.asarray(v, dtype=dtype) for v in (x, y, t))
    one = dtype(1)
    if spec.family is Family.SOLITON:
        m = spec.modes[0]
        p, q, c = dtype(m.p.real), dtype(m.q.real), dtype(m.c.real)
        k = p + q
        theta = k * x + (q * q - p * p) * y - k * (k * k + 3 * (p - q) ** 2) * t
        if c == 0:
            return np.zeros(np.broadcast(x, y, t).shape, dtype=dtype)
        w = (c / k) * np.exp(theta)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            # 2 k^2 w / (1 + w)^2 written to survive w -> inf
            return 2 * k * k / (one / w + 2 + w)
    m = spec.modes[0]
    lam, mu, chi, gam, rho = (dtype(v) for v in m.as_row())
    if spec.family is Family.TRIGONOMETRIC:
        cx, sx = np.cos(chi), np.sin(chi)
        G = gam + lam * x - 2 * lam * mu * y + 4 * lam * (lam ** 2 - 3 * mu ** 2) * t
        U = (rho + x * cx + 2 * (lam * sx - mu * cx) * y
             + 12 * (lam ** 2 * cx - mu ** 2 * cx + 2 * lam * mu * sx) * t)
        s2, c2 = np.sin(2 * G), np.cos(2 * G)
        D = 2 * lam * U - s2
        Dx = 2 * lam * (cx - c2)
        Dxx = 4 * lam * lam * s2
    else:
        cx, sx = np.cosh(chi), np.sinh(chi)
        G = gam + lam * x - 2 * lam * mu * y - 4 * lam * (lam ** 2 + 3 * mu ** 2) * t
        U = (rho + x * cx - 2 * (lam * sx + mu * cx) * y
             - 12 * (lam ** 2 * cx + mu ** 2 * cx + 2 * lam * mu * sx) * t)
        s2, c2 = np.sinh(2 * G), np.cosh(2 * G)
        D = 2 * lam * U - s2
        Dx = 2 * lam * (cx - c2)
        Dxx = -4 * lam * lam * s2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return 2 * (Dxx * D - Dx * Dx) / (D * D)
