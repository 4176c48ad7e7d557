"""Singular curves (zeros of det) and sign-component labelling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import ndimage

from .kernel import determinant, evaluate
from .model import EvalPoint, Family, GridSpec, ScalarField, SolutionSpec
from .regularization import FLOOR

BISECT_RTOL = 1e-10
BISECT_MAX_ITER = 60


def singular_indicator(spec: SolutionSpec, pt: EvalPoint):
    """D at ``pt``.

    For a single trigonometric or hyperbolic mode this is the closed-form
    ``2 lam Upsilon - S(2 Gamma)`` (that is, 2 lam det K); otherwise det of the
    family matrix.
    """
    d = determinant(spec, pt)
    if spec.family is not Family.SOLITON and spec.n == 1:
        return 2 * spec.modes[0].lam * d
    return d


@dataclass
class SingularTrace:
    """Polylines through zeros of D at a fixed time."""

    segments: List[np.ndarray] = field(default_factory=list)
    tolerance: float = BISECT_RTOL
    t: float = 0.0
    grid: GridSpec = None

    @property
    def vertices(self) -> np.ndarray:
        if not self.segments:
            return np.empty((0, 2))
        return np.concatenate(self.segments, axis=0)

    def __len__(self):
        return len(self.segments)


def _node_eval(spec, xs, ys, t, threads=None):
    ev = evaluate(spec, xs, ys, t, threads=threads)
    s = np.where(np.real(ev.sign) < 0, -1, 1)
    return s, ev.logabsdet


def _bisect(spec, a, b, sa, lda, ldb, t, threads=None):
    """Vectorised bisection of sign changes on segments a -> b (arrays (M, 2))."""
    lo = a.copy()
    hi = b.copy()
    s_lo = sa.copy()
    # stop once |D| < rtol * (1 + max corner |D|)
    log_tol = math.log(BISECT_RTOL) + np.logaddexp(0.0, np.maximum(lda, ldb))
    done = np.zeros(len(a), dtype=bool)
    mid = 0.5 * (lo + hi)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        active = ~done
        if not active.any():
            break
        s_mid, ld_mid = _node_eval(spec, mid[active, 0], mid[active, 1], t, threads)
        idx = np.flatnonzero(active)
        hit = ld_mid < log_tol[idx]
        done[idx[hit]] = True
        same = (s_mid == s_lo[idx]) & ~hit
        lo[idx[same]] = mid[idx[same]]
        s_lo[idx[same]] = s_mid[same]
        other = ~same & ~hit
        hi[idx[other]] = mid[idx[other]]
    return mid


def _chains(adj):
    """Split an undirected graph of max degree 2 into ordered vertex chains."""
    seen = set()
    chains = []
    starts = sorted(k for k, v in adj.items() if len(v) != 2) + sorted(adj)
    for s in starts:
        if s in seen:
            continue
        chain = [s]
        seen.add(s)
        cur = s
        while True:
            nxt = [n for n in adj[cur] if n not in seen]
            if not nxt:
                # close a cycle
                if len(chain) > 2 and s in adj[cur]:
                    chain.append(s)
                break
            cur = nxt[0]
            seen.add(cur)
            chain.append(cur)
        chains.append(chain)
    return chains


def scan_singular_curve(spec: SolutionSpec, grid: GridSpec, t: float = 0.0,
                        threads=None) -> SingularTrace:
    """Trace the zero set of D across ``grid``.

    Nodes are the grid's cell centres. Each node-to-node edge whose D sign
    flips is bisected; crossings are joined cell by cell in the
    marching-squares manner, with saddle cells resolved by the sign of D at
    the cell centre. The grid must be fine enough that D changes sign at most
    once per edge.
    """
    xs, ys = grid.xs, grid.ys
    X, Y = np.meshgrid(xs, ys)
    s, ld = _node_eval(spec, X, Y, t, threads)
    ny, nx = s.shape
    keys, starts, ends, ss, la, lb = [], [], [], [], [], []
    # horizontal edges (r, c)-(r, c+1)
    r, c = np.nonzero(s[:, :-1] != s[:, 1:])
    for i, j in zip(r, c):
        keys.append(("h", i, j))
        starts.append((xs[j], ys[i])); ends.append((xs[j + 1], ys[i]))
        ss.append(s[i, j]); la.append(ld[i, j]); lb.append(ld[i, j + 1])
    r, c = np.nonzero(s[:-1, :] != s[1:, :])
    for i, j in zip(r, c):
        keys.append(("v", i, j))
        starts.append((xs[j], ys[i])); ends.append((xs[j], ys[i + 1]))
        ss.append(s[i, j]); la.append(ld[i, j]); lb.append(ld[i + 1, j])
    trace = SingularTrace(tolerance=BISECT_RTOL, t=float(t), grid=grid)
    if not keys:
        return trace
    pts = _bisect(spec, np.array(starts, float), np.array(ends, float), np.array(ss),
                  np.array(la), np.array(lb), t, threads)
    where = {k: i for i, k in enumerate(keys)}

    adj = {k: [] for k in keys}

    def link(a, b):
        adj[a].append(b)
        adj[b].append(a)

    # each edge borders two cells; cell (i, j) spans nodes (i..i+1, j..j+1)
    cells = sorted({(k[1], k[2]) for k in keys}
                   | {(k[1] - 1, k[2]) if k[0] == "h" else (k[1], k[2] - 1) for k in keys})
    saddles = []
    for i, j in cells:
        if not (0 <= i < ny - 1 and 0 <= j < nx - 1):
            continue
        bottom, top = ("h", i, j), ("h", i + 1, j)
        left, right = ("v", i, j), ("v", i, j + 1)
        present = [e for e in (bottom, right, top, left) if e in where]
        if len(present) == 2:
            link(*present)
        elif len(present) == 4:
            saddles.append((i, j))
    if saddles:
        cx = np.array([0.5 * (xs[j] + xs[j + 1]) for i, j in saddles])
        cy = np.array([0.5 * (ys[i] + ys[i + 1]) for i, j in saddles])
        sc, _ = _node_eval(spec, cx, cy, t, threads)
        for (i, j), sgn in zip(saddles, sc):
            bottom, top = ("h", i, j), ("h", i + 1, j)
            left, right = ("v", i, j), ("v", i, j + 1)
            if sgn == s[i, j]:
                # centre joins the (i,j) and (i+1,j+1) corners; cut off the others
                link(bottom, right)
                link(left, top)
            else:
                link(left, bottom)
                link(top, right)
    for chain in _chains(adj):
        trace.segments.append(np.array([pts[where[k]] for k in chain], dtype=float))
    return trace


def line_fit_deviation(points: np.ndarray) -> float:
    """Max orthogonal distance of ``points`` from their total-least-squares line."""
    p = np.asarray(points, dtype=float)
    if len(p) < 3:
        return 0.0
    c = p - p.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    return float(np.abs(c @ vt[-1]).max())


@dataclass
class ComponentMask:
    """Integer labels over a grid; 0 marks excluded (singular) cells."""

    grid: GridSpec
    labels: np.ndarray
    count: int

    def sizes(self) -> np.ndarray:
        """Cell count per label 1..count."""
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)[1:]

    def largest(self, n: int = 1) -> List[int]:
        order = np.argsort(-self.sizes(), kind="stable")
        return [int(k) + 1 for k in order[:n]]

    def restrict(self, fld: ScalarField, label: int, fill: float = FLOOR) -> ScalarField:
        """Copy of ``fld`` with every cell outside ``label`` set to ``fill``."""
        keep = self.labels == label
        vals = np.where(keep, fld.values, fill)
        return ScalarField(fld.grid, vals, fld.mask & keep, fld.t)


def component_mask(spec: SolutionSpec, grid: GridSpec, t: float = 0.0,
                   threads=None) -> ComponentMask:
    """Label 4-connected regions of constant sign of D.

    Numerically singular cells get label 0. Positive regions are numbered
    first, then negative ones, each in scan order.
    """
    X, Y = grid.mesh()
    ev = evaluate(spec, X, Y, t, threads=threads)
    ok = ~ev.singular
    pos = (np.real(ev.sign) > 0) & ok
    neg = (np.real(ev.sign) < 0) & ok
    four = ndimage.generate_binary_structure(2, 1)
    lp, npos = ndimage.label(pos, structure=four)
    ln, nneg = ndimage.label(neg, structure=four)
    labels = np.where(ln > 0, ln + npos, lp).astype(np.int32)
    return ComponentMask(grid, labels, int(npos + nneg))


def half_plane_mask(grid: GridSpec, point, normal) -> ComponentMask:
    """Split ``grid`` by the line through ``point`` with ``normal``.

    Label 1 is the side the normal points to (signed distance >= 0), label 2
    the other side.
    """
    nx_, ny_ = (float(v) for v in normal)
    if nx_ == 0.0 and ny_ == 0.0:
        raise ValueError("normal must be nonzero")
    X, Y = grid.mesh()
    sd = (X - float(point[0])) * nx_ + (Y - float(point[1])) * ny_
    labels = np.where(sd >= 0, 1, 2).astype(np.int32)
    return ComponentMask(grid, labels, 2)
