# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched kernels; same contract as :func:`kpc._pykernel.eval_real`.

Per point: build K and its x-derivatives in scratch buffers, LU-factorise
with partial pivoting, solve for X_k = K^{-1} d^k K, take traces.
"""
import math

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sinh, cosh, exp, log, log1p, fabs, fmax, sqrt, M_PI, NAN
from libc.stdlib cimport malloc, free

from ._pykernel import coupling_terms, SINGULAR_RTOL, SINGULAR_DIST

cnp.import_array()


cdef inline double osc(int kind, double a, double b, double th, double w, int d) noexcept nogil:
    cdef double wd = 1.0
    cdef int i
    for i in range(d):
        wd *= w
    if kind == 0:
        th = th + d * (M_PI / 2)
        return wd * (a * sin(th) + b * cos(th))
    if d % 2 == 0:
        return wd * (a * sinh(th) + b * cosh(th))
    return wd * (a * cosh(th) + b * sinh(th))


cdef int lu_solve(int n, double* A, int* piv, double* B, int nrhs,
                  double* logdet, double* sgn) noexcept nogil:
    """In-place LU of A (row-major n x n); overwrites B (n x nrhs) with A^-1 B.

    Returns 1 if a zero pivot is met.
    """
    cdef int i, j, k, p
    cdef double amax, v, tmp
    logdet[0] = 0.0
    sgn[0] = 1.0
    for k in range(n):
        p = k
        amax = fabs(A[k * n + k])
        for i in range(k + 1, n):
            v = fabs(A[i * n + k])
            if v > amax:
                amax = v
                p = i
        if amax == 0.0:
            logdet[0] = -1.0 / 0.0
            sgn[0] = 0.0
            return 1
        if p != k:
            for j in range(n):
                tmp = A[k * n + j]; A[k * n + j] = A[p * n + j]; A[p * n + j] = tmp
            for j in range(nrhs):
                tmp = B[k * nrhs + j]; B[k * nrhs + j] = B[p * nrhs + j]; B[p * nrhs + j] = tmp
            sgn[0] = -sgn[0]
        piv[k] = p
        v = A[k * n + k]
        if v < 0:
            sgn[0] = -sgn[0]
        logdet[0] += log(fabs(v))
        for i in range(k + 1, n):
            A[i * n + k] /= v
            tmp = A[i * n + k]
            for j in range(k + 1, n):
                A[i * n + j] -= tmp * A[k * n + j]
            for j in range(nrhs):
                B[i * nrhs + j] -= tmp * B[k * nrhs + j]
    # back substitution
    for k in range(n - 1, -1, -1):
        for j in range(nrhs):
            v = B[k * nrhs + j]
            for i in range(k + 1, n):
                v -= A[k * n + i] * B[i * nrhs + j]
            B[k * nrhs + j] = v / A[k * n + k]
    return 0


def eval_real(int kind, params, bint shifted, x, y, t, bint want_fx=False):
    cdef double[::1] xv = np.ascontiguousarray(np.atleast_1d(x), dtype=float)
    cdef double[::1] yv = np.ascontiguousarray(np.atleast_1d(y), dtype=float)
    cdef double[::1] tv = np.ascontiguousarray(np.atleast_1d(t), dtype=float)
    cdef Py_ssize_t P = xv.shape[0]
    cdef int order = 3 if want_fx else 2
    cdef int nm = order + 1
    cdef double[:, ::1] pr
    cdef int N, n, k, d, idx
    if kind == 2:
        pr = np.ascontiguousarray(np.asarray(params, dtype=float).reshape(-1, 3))
    else:
        pr = np.ascontiguousarray(np.asarray(params, dtype=float).reshape(-1, 5))
    N = pr.shape[0]

    # coupling coefficients: [n, k, 8] = aB, bB, sB, wB, aA, bA, sA, wA
    cdef double[:, :, ::1] cp = np.zeros((N, N, 8))
    if kind != 2:
        arr = np.asarray(pr)
        for n in range(N):
            for k in range(N):
                if n != k:
                    tb, ta = coupling_terms(kind, arr[n], arr[k], shifted)
                    for idx in range(4):
                        cp[n, k, idx] = tb[idx]
                        cp[n, k, 4 + idx] = ta[idx]
    # per-mode constants: Gamma and Upsilon coefficients (x, y, t), slope of U in x
    cdef double[:, ::1] mc = np.zeros((N, 8))
    cdef double lam, mu, chi, c, s
    for n in range(N):
        if kind == 2:
            break
        lam = pr[n, 0]; mu = pr[n, 1]; chi = pr[n, 2]
        if kind == 0:
            c = cos(chi); s = sin(chi)
            mc[n, 0] = lam; mc[n, 1] = -2 * lam * mu; mc[n, 2] = 4 * lam * (lam * lam - 3 * mu * mu)
            mc[n, 3] = c; mc[n, 4] = 2 * (lam * s - mu * c)
            mc[n, 5] = 12 * (lam * lam * c - mu * mu * c + 2 * lam * mu * s)
        else:
            c = cosh(chi); s = sinh(chi)
            mc[n, 0] = lam; mc[n, 1] = -2 * lam * mu; mc[n, 2] = -4 * lam * (lam * lam + 3 * mu * mu)
            mc[n, 3] = c; mc[n, 4] = -2 * (lam * s + mu * c)
            mc[n, 5] = -12 * (lam * lam * c + mu * mu * c + 2 * lam * mu * s)

    f_out = np.empty(P)
    fx_out = np.empty(P)
    ld_out = np.empty(P)
    sg_out = np.empty(P)
    ls_out = np.empty(P)
    sing_out = np.zeros(P, dtype=np.uint8)
    cdef double[::1] fo = f_out, fxo = fx_out, ldo = ld_out, sgo = sg_out, lso = ls_out
    cdef unsigned char[::1] so = sing_out
    cdef double log_rtol = log(SINGULAR_RTOL)
    cdef double sdist = SINGULAR_DIST

    cdef double* mats = <double*> malloc(sizeof(double) * N * N * nm)
    cdef double* G = <double*> malloc(sizeof(double) * N * 2)
    cdef double* B = <double*> malloc(sizeof(double) * N * N * order)
    cdef double* X3 = <double*> malloc(sizeof(double) * N * N)
    cdef int* piv = <int*> malloc(sizeof(int) * N)
    cdef Py_ssize_t pt
    cdef int i, j, m, flag
    cdef double th, kk, e, removed, amax, logdet, sgn, tr2, tr11, tr3, tr12, tr111, acc, v
    cdef double pn, qm, cn
    if mats == NULL or G == NULL or B == NULL or X3 == NULL or piv == NULL:
        free(mats); free(G); free(B); free(X3); free(piv)
        raise MemoryError()
    try:
        with nogil:
            for pt in range(P):
                removed = 0.0
                if kind == 2:
                    for n in range(N):
                        pn = pr[n, 0]; kk = pn + pr[n, 1]; cn = pr[n, 2]
                        th = kk * xv[pt] + (pr[n, 1] * pr[n, 1] - pn * pn) * yv[pt] \
                            - kk * (kk * kk + 3 * (pn - pr[n, 1]) * (pn - pr[n, 1])) * tv[pt]
                        if th > 0:
                            removed += th
                            e = exp(-th)
                            for m in range(N):
                                qm = pr[m, 1]
                                for d in range(nm):
                                    mats[d * N * N + m * N + n] = (cn / (pn + qm)) if d == 0 else 0.0
                            for d in range(nm):
                                v = e
                                for i in range(d):
                                    v *= -kk
                                mats[d * N * N + n * N + n] += v
                        else:
                            e = exp(th)
                            for m in range(N):
                                qm = pr[m, 1]
                                v = cn * e / (pn + qm)
                                for d in range(nm):
                                    mats[d * N * N + m * N + n] = v
                                    v *= kk
                            mats[n * N + n] += 1.0
                else:
                    for n in range(N):
                        G[2 * n] = pr[n, 3] + mc[n, 0] * xv[pt] + mc[n, 1] * yv[pt] + mc[n, 2] * tv[pt]
                        G[2 * n + 1] = pr[n, 4] + mc[n, 3] * xv[pt] + mc[n, 4] * yv[pt] + mc[n, 5] * tv[pt]
                    for n in range(N):
                        lam = pr[n, 0]
                        for d in range(nm):
                            v = osc(kind, -1.0 / (2 * lam), 0.0, 2 * G[2 * n], 2 * lam, d)
                            if d == 0:
                                v += G[2 * n + 1]
                            elif d == 1:
                                v += mc[n, 3]
                            mats[d * N * N + n * N + n] = v
                        for k in range(N):
                            if k == n:
                                continue
                            for d in range(nm):
                                mats[d * N * N + n * N + k] = \
                                    osc(kind, cp[n, k, 0], cp[n, k, 1], G[2 * n] - G[2 * k] + cp[n, k, 2], cp[n, k, 3], d) + \
                                    osc(kind, cp[n, k, 4], cp[n, k, 5], G[2 * n] + G[2 * k] + cp[n, k, 6], cp[n, k, 7], d)
                # equilibrated Hadamard bound, as _pykernel.log_scale
                for i in range(N):
                    amax = 2.2250738585072014e-308
                    for j in range(N):
                        amax = fmax(amax, fmax(fabs(mats[i * N + j]), fabs(mats[j * N + i])))
                    X3[i] = amax
                acc = 0.0
                for i in range(N):
                    v = 0.0
                    for j in range(N):
                        e = fabs(mats[i * N + j]) / sqrt(X3[i] * X3[j])
                        v += e * e
                    acc += log(X3[i]) + 0.5 * log(v)
                lso[pt] = acc + log1p(exp(-acc)) if acc > 0 else log1p(exp(acc))
                # right-hand sides [K1 K2 (K3)] laid out row-major (N x N*order)
                for i in range(N):
                    for d in range(order):
                        for j in range(N):
                            B[i * N * order + d * N + j] = mats[(d + 1) * N * N + i * N + j]
                flag = lu_solve(N, mats, piv, B, N * order, &logdet, &sgn)
                ldo[pt] = logdet + removed
                sgo[pt] = sgn
                if flag or logdet != logdet:
                    so[pt] = 1
                    fo[pt] = NAN
                    fxo[pt] = NAN
                    continue
                if logdet < log_rtol + lso[pt]:
                    acc = 0.0
                    for i in range(N):
                        acc += B[i * N * order + i]
                    if not (fabs(acc) * sdist <= 1.0):
                        so[pt] = 1
                        fo[pt] = NAN
                        fxo[pt] = NAN
                        continue
                # X_d[i, j] = B[i*N*order + (d-1)*N + j]
                tr2 = 0.0; tr11 = 0.0; tr3 = 0.0; tr12 = 0.0; tr111 = 0.0
                for i in range(N):
                    tr2 += B[i * N * order + N + i]
                    for j in range(N):
                        tr11 += B[i * N * order + j] * B[j * N * order + i]
                fo[pt] = 2 * (tr2 - tr11)
                if order == 3:
                    for i in range(N):
                        tr3 += B[i * N * order + 2 * N + i]
                        for j in range(N):
                            tr12 += B[i * N * order + j] * B[j * N * order + N + i]
                            acc = 0.0
                            for k in range(N):
                                acc += B[i * N * order + k] * B[k * N * order + j]
                            X3[i * N + j] = acc
                    for i in range(N):
                        for j in range(N):
                            tr111 += X3[i * N + j] * B[j * N * order + i]
                    fxo[pt] = 2 * (tr3 - 3 * tr12 + 2 * tr111)
                else:
                    fxo[pt] = NAN
    finally:
        free(mats); free(G); free(B); free(X3); free(piv)
    return (f_out, fx_out if want_fx else None, ld_out, sg_out, ls_out,
            sing_out.astype(bool))
