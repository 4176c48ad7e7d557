"""Transient extreme detection over time (rogue-wave scenario)."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, optimize

from .errors import FewerThanTwoTroughs, InsufficientWindow
from .kernel import evaluate, field_f_grid
from .model import GridSpec, ScalarField, SolutionSpec

DEFAULT_EXCLUSION = 0.5
DEFAULT_RATIO = 3.0
DEFAULT_BACKGROUND_WINDOW = 2.0
TOP_FRACTION = 0.9
TIE_RTOL = 1e-9


@dataclass
class ExtremeSeries:
    times: np.ndarray
    max_value: np.ndarray
    max_location: np.ndarray  # (T, 2)
    min_value: np.ndarray
    min_location: np.ndarray
    exclusion: float = DEFAULT_EXCLUSION
    spec: Optional[SolutionSpec] = field(default=None, repr=False)
    grid: Optional[GridSpec] = field(default=None, repr=False)

    def __len__(self):
        return len(self.times)

    def shifted(self, dt: float) -> "ExtremeSeries":
        """Same series with every time moved by ``dt`` (drops the spec link)."""
        return ExtremeSeries(self.times + dt, self.max_value, self.max_location,
                             self.min_value, self.min_location, self.exclusion)


@dataclass
class RogueEvent:
    t_peak: float
    amplitude: float
    background: float
    prominence_ratio: float
    tops: List[Tuple[float, float]] = field(default_factory=list)
    t_start: float = math.nan
    t_end: float = math.nan

    def to_dict(self) -> dict:
        return {"t_peak": self.t_peak, "amplitude": self.amplitude,
                "background": self.background, "prominence_ratio": self.prominence_ratio,
                "tops": [list(p) for p in self.tops], "t_start": self.t_start,
                "t_end": self.t_end}


def eligible_cells(fld: ScalarField, exclusion: float) -> np.ndarray:
    """Cells at least ``exclusion`` (KP units) from every masked cell."""
    if not fld.mask.any():
        return np.ones(fld.mask.shape, dtype=bool)
    dist = ndimage.distance_transform_edt(~fld.mask, sampling=(fld.grid.dy, fld.grid.dx))
    return dist >= exclusion


def _polish(spec, t, x0, y0, v0, grid, sign):
    """Nelder-Mead refinement of an extremum, kept within one cell."""
    def obj(p):
        ev = evaluate(spec, p[0], p[1], t, threads=1)
        if ev.singular or not np.isfinite(ev.f):
            return math.inf
        return -sign * float(ev.f)

    res = optimize.minimize(obj, [x0, y0], method="Nelder-Mead",
                            options={"xatol": 1e-6 * max(grid.dx, grid.dy), "fatol": 1e-12,
                                     "initial_simplex": [[x0, y0], [x0 + 0.25 * grid.dx, y0],
                                                         [x0, y0 + 0.25 * grid.dy]]})
    x, y = res.x
    inside = abs(x - x0) <= grid.dx and abs(y - y0) <= grid.dy
    if res.success and inside and math.isfinite(res.fun) and -sign * res.fun >= sign * v0:
        return float(x), float(y), float(-sign * res.fun)
    return x0, y0, v0


def _extremes(spec, grid, t, exclusion, polish, threads):
    fld = field_f_grid(spec, grid, t, threads=threads)
    ok = eligible_cells(fld, exclusion) & ~fld.mask
    X, Y = grid.mesh()
    if not ok.any():
        nan2 = (math.nan, math.nan)
        return math.nan, nan2, math.nan, nan2
    vals = np.where(ok, fld.values, -np.inf)
    i = int(np.argmax(vals))
    hi = (float(X.flat[i]), float(Y.flat[i]), float(vals.flat[i]))
    vals = np.where(ok, fld.values, np.inf)
    j = int(np.argmin(vals))
    lo = (float(X.flat[j]), float(Y.flat[j]), float(vals.flat[j]))
    if polish:
        hi = _polish(spec, t, *hi, grid, +1)
        lo = _polish(spec, t, *lo, grid, -1)
    return hi[2], hi[:2], lo[2], lo[:2]


def time_series_max(spec: SolutionSpec, grid: GridSpec, times: Sequence[float],
                    exclusion: float = DEFAULT_EXCLUSION, polish: bool = True,
                    threads=None) -> ExtremeSeries:
    """Per-time max and min of raw f over the grid.

    f diverges to -inf on singular curves and grows without bound alongside
    them, so extremes are taken over cells at least ``exclusion`` from the
    masked singular cells. The grid argmax/argmin is then refined by a
    Nelder-Mead polish confined to one cell.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted")
    rows = [_extremes(spec, grid, float(t), exclusion, polish, threads) for t in times]
    return ExtremeSeries(times,
                         np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                         np.array([r[2] for r in rows]), np.array([r[3] for r in rows]),
                         exclusion, spec, grid)


def background_level(series: ExtremeSeries, background_window: float) -> float:
    """Median of max_value over the first and last ``background_window`` of time."""
    t = series.times
    if len(t) < 3 or t[-1] - t[0] <= 2 * background_window:
        raise InsufficientWindow("series too short for the background window")
    outer = (t <= t[0] + background_window) | (t >= t[-1] - background_window)
    vals = series.max_value[outer]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise InsufficientWindow("no finite samples in the background window")
    return float(np.median(vals))


def local_maxima_2d(values: np.ndarray, ok: np.ndarray) -> np.ndarray:
    """Boolean map of cells >= all eligible 8-neighbours (plateaus count once)."""
    v = np.where(ok, values, -np.inf)
    mx = ndimage.maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    peaks = ok & (v == mx)
    lab, n = ndimage.label(peaks, structure=np.ones((3, 3)))
    if n == 0:
        return peaks
    first = ndimage.minimum(np.arange(v.size).reshape(v.shape), lab, index=np.arange(1, n + 1))
    out = np.zeros_like(peaks)
    out.flat[np.asarray(first, dtype=int)] = True
    return out


def _separated(points, values, min_sep, limit):
    order = np.argsort(-np.asarray(values), kind="stable")
    kept = []
    for k in order:
        p = points[k]
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= min_sep for q in kept):
            kept.append(p)
        if len(kept) == limit:
            break
    return kept


def find_tops(spec: SolutionSpec, grid: GridSpec, t: float,
              exclusion: float = DEFAULT_EXCLUSION, fraction: float = TOP_FRACTION,
              min_separation: float = 1.0, threads=None) -> List[Tuple[float, float]]:
    """Up to two separated local maxima of f(., ., t), highest first.

    A top must reach ``fraction`` of the largest eligible grid value at t.
    The grid value is the reference rather than a polished amplitude, since
    polishing lands between samples and can exceed every one of them.
    """
    fld = field_f_grid(spec, grid, t, threads=threads)
    ok = eligible_cells(fld, exclusion) & ~fld.mask
    if not ok.any():
        return []
    ref = float(fld.values[ok].max())
    peaks = local_maxima_2d(fld.values, ok) & (fld.values >= fraction * ref)
    X, Y = grid.mesh()
    pts = [(float(x), float(y)) for x, y in zip(X[peaks], Y[peaks])]
    return _separated(pts, fld.values[peaks], min_separation, 2)


def detect_transient(series: ExtremeSeries,
                     background_window: float = DEFAULT_BACKGROUND_WINDOW,
                     ratio_threshold: float = DEFAULT_RATIO) -> List[RogueEvent]:
    """Short-lived peaks of the max series standing ``ratio_threshold`` times
    above the background.

    Samples above threshold * background form contiguous excursions; each
    excursion yields one event at its highest local maximum (ties within a
    relative 1e-9 go to the sample nearest the excursion centre, then the
    earliest). Tops are searched in the field at t_peak when the series
    carries its spec and grid.
    """
    bg = background_level(series, background_window)
    t, v = series.times, series.max_value
    if not bg > 0:
        return []
    above = np.isfinite(v) & (v >= ratio_threshold * bg)
    lab, n = ndimage.label(above)
    events = []
    for k in range(1, n + 1):
        idx = np.flatnonzero(lab == k)
        seg = v[idx]
        best = seg.max()
        cand = idx[seg >= best * (1 - TIE_RTOL)]
        centre = 0.5 * (t[idx[0]] + t[idx[-1]])
        i = min(cand, key=lambda j: (abs(t[j] - centre), t[j]))
        # an excursion pinned to an end of the series is not a transient peak
        if i in (0, len(t) - 1):
            continue
        amp = float(v[i])
        if series.spec is not None and series.grid is not None:
            tops = find_tops(series.spec, series.grid, float(t[i]), series.exclusion)
        else:
            tops = [tuple(map(float, series.max_location[i]))]
        events.append(RogueEvent(float(t[i]), amp, bg, amp / bg, tops,
                                 float(t[idx[0]]), float(t[idx[-1]])))
    return events


def trough_points(spec: SolutionSpec, grid: GridSpec, t: float,
                  min_separation: float = 1.0, depth_fraction: float = 0.1,
                  exclusion: float = DEFAULT_EXCLUSION, threads=None) -> List[Tuple[float, float]]:
    """The two deepest separated local minima of f, deepest first.

    f tends to -inf on singular curves, so minima are taken over cells at
    least ``exclusion`` from the singular set, where a cell beside the
    excluded band counts when no eligible neighbour is lower. Minima must be
    deeper than -depth_fraction * max|f| over the eligible cells.
    """
    fld = field_f_grid(spec, grid, t, threads=threads)
    ok = eligible_cells(fld, exclusion) & ~fld.mask
    if not ok.any():
        raise FewerThanTwoTroughs("no eligible cells")
    vals = fld.values
    scale = float(np.abs(vals[ok]).max())
    minima = local_maxima_2d(-np.where(ok, vals, 0.0), ok) & (vals < -depth_fraction * scale)
    X, Y = grid.mesh()
    pts = [(float(x), float(y)) for x, y in zip(X[minima], Y[minima])]
    kept = _separated(pts, -vals[minima], min_separation, 2)
    if len(kept) < 2:
        raise FewerThanTwoTroughs(f"found {len(kept)} qualifying minima at t={t}")
    return kept


def trough_separation(spec: SolutionSpec, grid: GridSpec, t: float, **kw) -> float:
    a, b = trough_points(spec, grid, t, **kw)
    return math.hypot(a[0] - b[0], a[1] - b[1])


def angle_sweep(spec: SolutionSpec, index: int, chis: Sequence[float], grid: GridSpec,
                times: Sequence[float], exclusion: float = DEFAULT_EXCLUSION,
                background_window: float = DEFAULT_BACKGROUND_WINDOW, threads=None) -> List[dict]:
    """Vary chi of mode ``index`` (which turns that dipole's trough) and
    record the strongest transient per value.

    Each row holds chi, the peak of max_value, its time, the background and
    their ratio. No breaking criterion is applied; the rows are raw material
    for a parameter study.
    """
    rows = []
    for chi in chis:
        modes = list(spec.modes)
        modes[index] = dataclasses.replace(modes[index], chi=float(chi))
        sp = dataclasses.replace(spec, modes=tuple(modes))
        ser = time_series_max(sp, grid, times, exclusion, polish=False, threads=threads)
        bg = background_level(ser, background_window)
        k = int(np.nanargmax(ser.max_value))
        peak = float(ser.max_value[k])
        rows.append({"chi": float(chi), "peak": peak, "t_peak": float(ser.times[k]),
                     "background": bg, "ratio": peak / bg if bg > 0 else math.inf})
    return rows
