"""Pure-numpy batched kernels; the reference backend.

Every entry of the interaction matrices is a sum of terms
``a*S(theta) + b*C(theta)`` with theta linear in x, so x-derivatives of
any order are closed-form. The log-determinant derivatives follow from
Jacobi's formula with X_k = K^{-1} d^k K / dx^k::

    (ln det K)''  = tr X2 - tr(X1 X1)
    (ln det K)''' = tr X3 - 3 tr(X1 X2) + 2 tr(X1 X1 X1)
"""
import math

import numpy as np

TRIG, HYPER, SOLITON = 0, 1, 2

# |det| below SINGULAR_RTOL * bound counts as singular, where bound is the
# Hadamard bound after symmetric equilibration (see log_scale). Entries of
# hyperbolic families span many decades; the plain row-norm bound is then
# inflated by the off-diagonal growth and flags accurate far-field points.
SINGULAR_RTOL = 1e-10
# Far-field hyperbolic determinants cancel structurally and can fail the
# bound while f stays accurate; a failing point is singular only if
# 1/|(ln det)_x|, the x-distance to a zero, is below SINGULAR_DIST.
SINGULAR_DIST = 1e-6


def log_scale(K):
    """log(1 + prod_n r_n ||row_n(K~)||) for K~ = R^-1/2 K R^-1/2.

    r_n is the largest |entry| in row or column n, so |K~| <= 1 entrywise and
    |det K| = prod r_n |det K~| <= the returned bound. For N = 1 this is
    log(1 + |k|).
    """
    A = np.abs(K)
    r = np.maximum(A.max(axis=2), A.max(axis=1))
    r = np.maximum(r, np.finfo(float).tiny)
    sq = np.sqrt(r)
    At = A / sq[:, :, None] / sq[:, None, :]
    with np.errstate(divide="ignore"):
        s = np.log(r).sum(axis=1) + 0.5 * np.log((At ** 2).sum(axis=2)).sum(axis=1)
    return np.logaddexp(0.0, s)


def _phases(kind, modes, x, y, t, alpha=1.0):
    lam, mu, chi, gam, rho = (modes[:, i] for i in range(5))
    x = x[:, None]
    y = y[:, None]
    t = t[:, None]
    a2 = alpha * alpha
    if kind == TRIG:
        c, s = np.cos(alpha * chi), np.sin(alpha * chi)
        G = gam + lam * x - 2 * lam * mu * y + 4 * lam * (lam ** 2 - 3 * a2 * mu ** 2) * t
        U = (rho + x * c + 2 * (lam * s / alpha - mu * c) * y
             + 12 * (lam ** 2 * c - a2 * mu ** 2 * c + 2 * alpha * lam * mu * s) * t)
    else:
        c, s = np.cosh(alpha * chi), np.sinh(alpha * chi)
        G = gam + lam * x - 2 * lam * mu * y - 4 * lam * (lam ** 2 + 3 * a2 * mu ** 2) * t
        U = (rho + x * c - 2 * (lam * s / alpha + mu * c) * y
             - 12 * (lam ** 2 * c + a2 * mu ** 2 * c + 2 * alpha * lam * mu * s) * t)
    return G, U, c


def _osc(kind, a, b, theta, omega, d):
    """d-th x-derivative of a*S(theta) + b*C(theta), d(theta)/dx = omega."""
    w = omega ** d
    if kind == TRIG:
        ph = theta + d * (math.pi / 2)
        return w * (a * np.sin(ph) + b * np.cos(ph))
    if d % 2 == 0:
        return w * (a * np.sinh(theta) + b * np.cosh(theta))
    return w * (a * np.cosh(theta) + b * np.sinh(theta))


def coupling_terms(kind, mn, mk, shifted, alpha=1.0):
    """Off-diagonal entry n,k as two oscillator terms.

    Returns ((aB, bB, sB, wB), (aA, bA, sA, wA)) where the entry equals
    aB*S(Gn-Gk+sB) + bB*C(Gn-Gk+sB) + aA*S(Gn+Gk+sA) + bA*C(Gn+Gk+sA)
    and w* are the x-frequencies.
    """
    ln, mun, chin = mn[0], mn[1], mn[2]
    lk, muk, chik = mk[0], mk[1], mk[2]
    dm = mun - muk
    a2dm2 = alpha * alpha * dm * dm
    if shifted:
        sB = -alpha * (chin + chik) / 2
        sA = alpha * (chik - chin) / 2
    else:
        sB = sA = 0.0
    if kind == TRIG:
        dminus = a2dm2 + (ln - lk) ** 2
        dplus = a2dm2 + (ln + lk) ** 2
        term_b = ((ln - lk) / dminus, -alpha * dm / dminus, sB, ln - lk)
        term_a = (-(ln + lk) / dplus, alpha * dm / dplus, sA, ln + lk)
    else:
        dminus = a2dm2 - (ln - lk) ** 2
        dplus = a2dm2 - (ln + lk) ** 2
        term_b = (-(ln - lk) / dminus, -alpha * dm / dminus, sB, ln - lk)
        term_a = ((ln + lk) / dplus, alpha * dm / dplus, sA, ln + lk)
    return term_b, term_a


def spectral_matrices(kind, modes, shifted, x, y, t, order=2):
    """[K, dK/dx, ..., d^order K/dx^order], each of shape (P, N, N)."""
    modes = np.asarray(modes, dtype=float).reshape(-1, 5)
    x, y, t = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, t))
    P, N = x.shape[0], modes.shape[0]
    G, U, cx = _phases(kind, modes, x, y, t)
    lam = modes[:, 0]
    mats = [np.empty((P, N, N)) for _ in range(order + 1)]
    two_g = 2 * G
    for n in range(N):
        # diagonal: U - S(2G)/(2 lam)
        for d in range(order + 1):
            v = _osc(kind, -1.0 / (2 * lam[n]), 0.0, two_g[:, n], 2 * lam[n], d)
            if d == 0:
                v = v + U[:, n]
            elif d == 1:
                v = v + cx[n]
            mats[d][:, n, n] = v
        for k in range(N):
            if k == n:
                continue
            (aB, bB, sB, wB), (aA, bA, sA, wA) = coupling_terms(kind, modes[n], modes[k], shifted)
            thB = G[:, n] - G[:, k] + sB
            thA = G[:, n] + G[:, k] + sA
            for d in range(order + 1):
                mats[d][:, n, k] = _osc(kind, aB, bB, thB, wB, d) + _osc(kind, aA, bA, thA, wA, d)
    return mats


def soliton_matrices(p, q, c, x, y, t, order=2, alpha=1.0):
    """Column-rescaled soliton matrices and the log of the removed factor.

    Columns with Re(theta_n) > 0 are multiplied by exp(-theta_n); the
    determinant changes by exp(-sum theta_n), which is linear in x and so
    leaves every second-or-higher log-derivative unchanged. Returns
    (mats, log_removed) with log_removed of shape (P,).
    """
    p, q, c = (np.asarray(v) for v in (p, q, c))
    x, y, t = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, t))
    cplx = np.iscomplexobj(p) or np.iscomplexobj(q) or np.iscomplexobj(c)
    dtype = complex if cplx else float
    k = p + q
    theta = (np.outer(x, k) + np.outer(y, q * q - p * p)
             - np.outer(t, k * (k * k + 3 * alpha * alpha * (p - q) ** 2)))
    P, N = x.shape[0], p.shape[0]
    cauchy = 1.0 / (p[None, :] + q[:, None])  # [m, n] = 1/(p_n + q_m)
    flip = theta.real > 0
    expo = np.exp(np.where(flip, 0.0, theta))
    inv = np.exp(np.where(flip, -theta, 0.0))
    mats = []
    for d in range(order + 1):
        body = (c * k ** d)[None, None, :] * cauchy[None, :, :]
        # a rescaled column's Cauchy part is constant in x
        col = np.where(flip, 1.0 if d == 0 else 0.0, expo)
        m = body * col[:, None, :]
        diag_plain = 1.0 if d == 0 else 0.0
        diag = np.where(flip, (-k) ** d * inv, diag_plain)
        m = m.astype(dtype, copy=False)
        idx = np.arange(N)
        m[:, idx, idx] += diag
        mats.append(m)
    log_removed = np.where(flip, theta, 0.0).sum(axis=1)
    return mats, log_removed


def _jacobi(mats, want_fx):
    K = mats[0]
    P, N, _ = K.shape
    sign, logdet = np.linalg.slogdet(K)
    lscale = log_scale(K)
    zero = ~np.isfinite(logdet)
    cand = zero | (logdet < math.log(SINGULAR_RTOL) + lscale)
    safe = K.copy()
    if zero.any():
        safe[zero] = np.eye(N, dtype=K.dtype)
    if N == 1:
        k0 = safe[:, 0, 0]
        x1 = mats[1][:, 0, 0] / k0
        x2 = mats[2][:, 0, 0] / k0
        tr1 = x1
        f = 2 * (x2 - x1 * x1)
        fx = None
        if want_fx:
            x3 = mats[3][:, 0, 0] / k0
            fx = 2 * (x3 - 3 * x1 * x2 + 2 * x1 ** 3)
    else:
        rhs = np.concatenate(mats[1:], axis=2)
        sol = np.linalg.solve(safe, rhs)
        X1 = sol[:, :, :N]
        X2 = sol[:, :, N:2 * N]
        X11 = X1 @ X1
        tr1 = np.trace(X1, axis1=1, axis2=2)
        f = 2 * (np.trace(X2, axis1=1, axis2=2) - np.trace(X11, axis1=1, axis2=2))
        fx = None
        if want_fx:
            X3 = sol[:, :, 2 * N:3 * N]
            fx = 2 * (np.trace(X3, axis1=1, axis2=2)
                      - 3 * np.einsum("pij,pji->p", X1, X2)
                      + 2 * np.einsum("pij,pji->p", X11, X1))
    with np.errstate(invalid="ignore"):
        near = ~(np.abs(tr1) * SINGULAR_DIST <= 1.0)
    singular = zero | (cand & near)
    return f, fx, logdet, sign, lscale, singular


def eval_real(kind, params, shifted, x, y, t, want_fx=False):
    """Batched evaluation for real families.

    Returns (f, fx, logabsdet, sign, log_scale, singular); fx is None unless
    requested. For SOLITON, ``params`` is an (N, 3) array of real (p, q, c).
    """
    order = 3 if want_fx else 2
    if kind == SOLITON:
        params = np.asarray(params, dtype=float).reshape(-1, 3)
        mats, removed = soliton_matrices(params[:, 0], params[:, 1], params[:, 2], x, y, t, order)
    else:
        mats = spectral_matrices(kind, params, shifted, x, y, t, order)
        removed = 0.0
    f, fx, logdet, sign, log_scale, singular = _jacobi(mats, want_fx)
    f = np.where(singular, np.nan, f).astype(float)
    if fx is not None:
        fx = np.where(singular, np.nan, fx).astype(float)
    return f, fx, logdet + removed, sign.real.astype(float), log_scale, singular


def eval_complex_soliton(p, q, c, x, y, t, want_fx=False):
    """Complex-capable soliton path; f is the real part of 2 (ln det A)_xx.

    Uses ln|det| only, so f equals 2 d^2/dx^2 ln|det A| exactly.
    """
    order = 3 if want_fx else 2
    mats, removed = soliton_matrices(p, q, c, x, y, t, order)
    f, fx, logdet, sign, log_scale, singular = _jacobi(mats, want_fx)
    f = np.where(singular, np.nan, np.real(f))
    if fx is not None:
        fx = np.where(singular, np.nan, np.real(fx))
    return f, fx, logdet + np.real(removed), sign, log_scale, singular
