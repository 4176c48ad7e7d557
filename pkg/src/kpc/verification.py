"""KP residual checks and the eps -> 0 soliton-to-breather limit."""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass
from typing import List, Sequence

import gmpy2
import numpy as np
from scipy.spatial import cKDTree

from . import _pykernel
from .errors import NumericalConditioning, StencilOnSingularSet
from .geometry import scan_singular_curve
from .kernel import evaluate, has_closed_form
from .model import EvalPoint, Family, GridSpec, SolutionSpec, SpectralMode, as_points, breather

DEFAULT_H = 5e-3
DEFAULT_EXCLUSION = 0.5
# probes for the eps -> 0 check, (x, y, t); regular for the figure breathers
DEFAULT_PROBES = ((2.0, 1.0, 0.0), (-3.0, 2.0, 0.0), (4.0, -3.0, 0.1), (1.0, 5.0, 0.0))
# time layers per side used to sample the singular set around t
LAYERS = 20

# 4th-order stencils as (integer numerators, denominator); weights are
# formed in the working precision so they sum to zero exactly
D1 = ((1, -8, 0, 8, -1), 12)
D2 = ((-1, 16, -30, 16, -1), 12)
D4 = ((-1, 12, -39, 56, -39, 12, -1), 6)

# sample offsets (dx, dy, dt) in units of h
_OFFSETS = ([(i, 0, 0) for i in range(-3, 4)]
            + [(0, j, 0) for j in (-2, -1, 1, 2)]
            + [(i, 0, j) for i in (-2, -1, 1, 2) for j in (-2, -1, 1, 2)])
_IDX = {o: k for k, o in enumerate(_OFFSETS)}


@dataclass
class ResidualReport:
    max_residual: float
    median_residual: float
    points_checked: int
    points_excluded: int
    normalization: float
    h: float = DEFAULT_H
    precision: str = "double"

    @property
    def relative(self) -> float:
        if self.normalization == 0:
            return 0.0 if self.max_residual == 0 else math.inf
        return self.max_residual / self.normalization

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relative"] = self.relative
        return d


MP_BITS = 128


def _resolve_precision(spec, precision):
    if precision == "auto":
        return "multi" if has_closed_form(spec) else "double"
    if precision not in ("double", "multi"):
        raise ValueError(f"unknown precision {precision!r}")
    if precision == "multi" and not has_closed_form(spec):
        raise ValueError("multi precision needs a single real mode")
    return precision


def _linear_phases(spec, ctx):
    """Coefficients (const, x, y, t) of the linear phases of a single mode."""
    mpf = gmpy2.mpfr
    if spec.family is Family.SOLITON:
        m = spec.modes[0]
        p, q, c = mpf(m.p.real), mpf(m.q.real), mpf(m.c.real)
        k = p + q
        return {"theta": (mpf(0), k, q * q - p * p, -k * (k * k + 3 * (p - q) ** 2)),
                "k": k, "amp": c / k}
    lam, mu, chi, gam, rho = (mpf(v) for v in spec.modes[0].as_row())
    if spec.family is Family.TRIGONOMETRIC:
        cx, sx = gmpy2.cos(chi), gmpy2.sin(chi)
        G = (gam, lam, -2 * lam * mu, 4 * lam * (lam ** 2 - 3 * mu ** 2))
        U = (rho, cx, 2 * (lam * sx - mu * cx), 12 * (lam ** 2 * cx - mu ** 2 * cx + 2 * lam * mu * sx))
    else:
        cx, sx = gmpy2.cosh(chi), gmpy2.sinh(chi)
        G = (gam, lam, -2 * lam * mu, -4 * lam * (lam ** 2 + 3 * mu ** 2))
        U = (rho, cx, -2 * (lam * sx + mu * cx), -12 * (lam ** 2 * cx + mu ** 2 * cx + 2 * lam * mu * sx))
    return {"G": G, "U": U, "lam": lam, "cx": cx}


def _mp_samples(spec, x, y, t, h):
    """Closed-form f at every stencil offset in MP_BITS-bit arithmetic.

    Phases are linear, so each offset only shifts them by a constant; the
    shifted sin/cos (sinh/cosh, exp) follow from addition formulas with
    per-offset constants and one transcendental pair per centre point.
    """
    mpf = gmpy2.mpfr
    out = np.empty((len(_OFFSETS), len(x)), dtype=object)
    with gmpy2.context(gmpy2.get_context(), precision=MP_BITS) as ctx:
        co = _linear_phases(spec, ctx)
        hh = mpf(float(h))
        offs = [(i * hh, j * hh, k * hh) for i, j, k in _OFFSETS]

        def shift(coef, o):
            return coef[1] * o[0] + coef[2] * o[1] + coef[3] * o[2]

        def base(coef, xv, yv, tv):
            return coef[0] + coef[1] * xv + coef[2] * yv + coef[3] * tv

        if spec.family is Family.SOLITON:
            k, amp = co["k"], co["amp"]
            if amp == 0:
                out[:] = mpf(0)
                return out
            e_off = [gmpy2.exp(shift(co["theta"], o)) for o in offs]
            two_k2 = 2 * k * k
            for n in range(len(x)):
                w0 = amp * gmpy2.exp(base(co["theta"], mpf(x[n]), mpf(y[n]), mpf(t[n])))
                for m, e in enumerate(e_off):
                    w = w0 * e
                    out[m, n] = two_k2 / (1 / w + 2 + w)
            return out
        trig = spec.family is Family.TRIGONOMETRIC
        sin, cos = (gmpy2.sin, gmpy2.cos) if trig else (gmpy2.sinh, gmpy2.cosh)
        lam, cx = co["lam"], co["cx"]
        G, U = co["G"], co["U"]
        dG = [2 * shift(G, o) for o in offs]
        dU = [shift(U, o) for o in offs]
        sd = [sin(d) for d in dG]
        cd = [cos(d) for d in dG]
        two_lam = 2 * lam
        dxx_c = 4 * lam * lam if trig else -4 * lam * lam
        for n in range(len(x)):
            xv, yv, tv = mpf(x[n]), mpf(y[n]), mpf(t[n])
            g2 = 2 * base(G, xv, yv, tv)
            u0 = base(U, xv, yv, tv)
            s0, c0 = sin(g2), cos(g2)
            for m in range(len(offs)):
                if trig:
                    s2 = s0 * cd[m] + c0 * sd[m]
                    c2 = c0 * cd[m] - s0 * sd[m]
                else:
                    s2 = s0 * cd[m] + c0 * sd[m]
                    c2 = c0 * cd[m] + s0 * sd[m]
                D = two_lam * (u0 + dU[m]) - s2
                Dx = two_lam * (cx - c2)
                if D == 0:
                    out[m, n] = mpf("-inf")
                    continue
                out[m, n] = 2 * (dxx_c * s2 * D - Dx * Dx) / (D * D)
    return out


def _stencil_samples(spec, x, y, t, h, precision, threads=None):
    """f at every stencil offset; returns (samples (M, P), bad (P,)).

    ``multi`` samples are MP_BITS-bit numbers in an object array; the
    stencil must also be applied at that precision, since a 4th difference
    amplifies sample rounding by h^-4.
    """
    x, y, t = (np.asarray(v, dtype=float) for v in (x, y, t))
    off = np.array(_OFFSETS, dtype=float)
    xs = x[None, :] + off[:, 0:1] * h
    ys = y[None, :] + off[:, 1:2] * h
    ts = t[None, :] + off[:, 2:3] * h
    ev = evaluate(spec, xs, ys, ts, threads=threads)
    bad = ev.singular.any(axis=0)
    if precision == "multi":
        f = _mp_samples(spec, x, y, t, h)
        finite = np.vectorize(gmpy2.is_finite, otypes=[bool])(f)
    else:
        f = ev.f
        finite = np.isfinite(f)
    bad |= ~finite.all(axis=0)
    return f, bad


def _combine(f, h):
    """R = f_xt + f_xxxx + 6 (f_x^2 + f f_xx) + 3 f_yy from stencil samples.

    Returns (|R|, f) as float arrays. Object (multiprecision) samples are
    combined at MP_BITS bits.
    """
    if f.dtype == object:
        with gmpy2.context(gmpy2.get_context(), precision=MP_BITS):
            return _combine_in(f, h, gmpy2.mpfr)
    return _combine_in(f, h, f.dtype.type)


def _combine_in(f, h, num):
    hh = num(h)

    def row(o):
        return f[_IDX[o]]

    def apply(stencil, rows):
        w, den = stencil
        return sum(num(c) * r for c, r in zip(w, rows) if c) / num(den)

    xi = range(-2, 3)
    x5 = [row((i, 0, 0)) for i in xi]
    fx = apply(D1, x5) / hh
    fxx = apply(D2, x5) / hh ** 2
    fxxxx = apply(D4, [row((i, 0, 0)) for i in range(-3, 4)]) / hh ** 4
    fyy = apply(D2, [row((0, j, 0)) for j in xi]) / hh ** 2
    # product of two first-derivative stencils (x and t)
    nz = (-2, -1, 1, 2)
    fxt = sum(num(D1[0][i + 2] * D1[0][j + 2]) * row((i, 0, j))
              for i in nz for j in nz) / (num(D1[1] * D1[1]) * hh ** 2)
    f0 = row((0, 0, 0))
    r = fxt + fxxxx + 6 * (fx * fx + f0 * fxx) + 3 * fyy
    return np.abs(r).astype(float), f0.astype(float)


def _time_layers(radius, k=LAYERS):
    # independent of h, so scans at h and h/2 check the same cells
    offs = [radius * (j / k) ** 2 for j in range(k + 1)]
    return sorted({-o for o in offs} | set(offs))


def kp_residual(spec: SolutionSpec, pt: EvalPoint, h: float = DEFAULT_H,
                precision: str = "auto") -> float:
    """|d/dx[f_t + f_xxx + 6 f f_x] + 3 f_yy| at ``pt`` by 4th-order differences.

    ``precision="auto"`` samples single-mode real families through their
    closed form in multiprecision; otherwise the double kernel is used.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    prec = _resolve_precision(spec, precision)
    f, bad = _stencil_samples(spec, [pt.x], [pt.y], [pt.t], h, prec, threads=1)
    if bad[0]:
        raise StencilOnSingularSet(f"residual stencil at {pt} touches the singular set")
    r, _ = _combine(f, h)
    return float(r[0])


def residual_scan(spec: SolutionSpec, grid: GridSpec, t: float = 0.0, h: float = DEFAULT_H,
                  exclusion_radius: float = DEFAULT_EXCLUSION, precision: str = "auto",
                  threads=None, chunk: int = 8192) -> ResidualReport:
    """Residual over all grid cells whose distance to the singular set is at
    least ``exclusion_radius``; cells whose stencil hits a singular point are
    excluded too.

    Distance is measured in (x, y, t): singular curves can move fast or be
    nearly tangent to a time slice (a degenerate zero at t splits like
    |dt|^(1/3)), so a spatial distance at the single instant t overstates the
    clearance of a stencil that spans t - 2h .. t + 2h. Traces are sampled on
    time layers across t +- exclusion_radius, clustered quadratically near t.
    """
    prec = _resolve_precision(spec, precision)
    X, Y = grid.mesh()
    X, Y = X.ravel(), Y.ravel()
    keep = np.ones(X.size, dtype=bool)
    if exclusion_radius > 0:
        pts = []
        for off in _time_layers(exclusion_radius):
            tj = t + off
            v = scan_singular_curve(spec, grid, tj, threads=threads).vertices
            if len(v):
                pts.append(np.column_stack([v, np.full(len(v), tj - t)]))
        if pts:
            dist, _ = cKDTree(np.concatenate(pts)).query(
                np.column_stack([X, Y, np.zeros_like(X)]))
            keep &= dist >= exclusion_radius
    idx = np.flatnonzero(keep)
    res = np.empty(idx.size)
    f0 = np.empty(idx.size)
    ok = np.ones(idx.size, dtype=bool)
    for s in range(0, idx.size, chunk):
        sl = idx[s:s + chunk]
        f, bad = _stencil_samples(spec, X[sl], Y[sl], np.full(sl.size, float(t)), h, prec, threads)
        r, v = _combine(f, h)
        res[s:s + chunk] = r
        f0[s:s + chunk] = v
        ok[s:s + chunk] = ~bad
    res, f0 = res[ok], f0[ok]
    checked = int(res.size)
    if checked == 0:
        return ResidualReport(0.0, 0.0, 0, int(X.size), 0.0, h, prec)
    return ResidualReport(float(res.max()), float(np.median(res)), checked,
                          int(X.size - checked), float(np.abs(f0).max()), h, prec)


def soliton_recipe(mode: SpectralMode, eps: float):
    """Conjugate soliton pair whose eps -> 0 limit is the breather of ``mode``.

    The pair is p = i lam + mu + eps e^{i chi}, q = i lam - mu + eps e^{-i chi},
    c = 2 eps e^{i g - i chi + r eps} with its conjugate. The limit reproduces
    the breather with offsets (gamma, rho) when g = 2 gamma + chi and
    r = 2 rho.
    """
    lam, mu, chi, gam, rho = mode.as_row()
    g = 2 * gam + chi
    r = 2 * rho
    p = 1j * lam + mu + eps * cmath.exp(1j * chi)
    q = 1j * lam - mu + eps * cmath.exp(-1j * chi)
    c = 2 * eps * cmath.exp(1j * g - 1j * chi + r * eps)
    return (np.array([p, p.conjugate()]), np.array([q, q.conjugate()]),
            np.array([c, c.conjugate()]))


def soliton_limit_check(mode: SpectralMode, alpha: float = 1.0,
                        eps_list: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
                        probe_points: Sequence = DEFAULT_PROBES) -> List[float]:
    """max over probes of |f_soliton(eps) - f_breather| for each eps.

    An eps whose complex determinant is numerically singular at any probe
    reports ``nan`` in its slot; if every eps fails, NumericalConditioning
    is raised.
    """
    if alpha != 1.0:
        raise ValueError("only alpha = 1 is supported")
    if not probe_points:
        raise ValueError("probe_points must be nonempty")
    x, y, t = as_points(probe_points)
    ref = evaluate(breather(*mode.as_row()), x, y, t, threads=1)
    if ref.singular.any():
        raise ValueError("probe points must be regular for the breather")
    errs = []
    for eps in eps_list:
        p, q, c = soliton_recipe(mode, float(eps))
        f, _, _, _, _, sing = _pykernel.eval_complex_soliton(p, q, c, x, y, t)
        if sing.any():
            errs.append(math.nan)
            continue
        errs.append(float(np.abs(f - ref.f).max()))
    if all(math.isnan(e) for e in errs):
        raise NumericalConditioning("complex determinant singular for every eps")
    return errs
