"""Immutable value types: modes, solution specs, evaluation points and grids."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateModes, SingularDenominator

# Largest mode count we document as comfortable for dense O(N^3) per point.
MAX_MODES = 32


class Family(str, enum.Enum):
    TRIGONOMETRIC = "trigonometric"
    HYPERBOLIC = "hyperbolic"
    SOLITON = "soliton"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown family {value!r}") from None


@dataclass(frozen=True)
class SpectralMode:
    """One breather or dipole mode (lambda, mu, chi, gamma, rho)."""

    lam: float
    mu: float = 0.0
    chi: float = 0.0
    gamma: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        for name in ("lam", "mu", "chi", "gamma", "rho"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.lam == 0.0:
            raise ValueError("lam must be nonzero")

    def as_row(self):
        return (self.lam, self.mu, self.chi, self.gamma, self.rho)


@dataclass(frozen=True)
class SolitonMode:
    """One soliton triple; p, q, c may be complex for conjugate-pair builds."""

    p: complex
    q: complex
    c: complex = 1.0

    def __post_init__(self):
        for name in ("p", "q", "c"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def is_real(self) -> bool:
        return self.p.imag == 0 and self.q.imag == 0 and self.c.imag == 0


Mode = Union[SpectralMode, SolitonMode]


@dataclass(frozen=True)
class SolutionSpec:
    """A solution family with its modes.

    ``shifted_coupling`` selects the off-diagonal phase convention of the
    interaction matrix. With ``True`` (default) the coupling terms carry the
    chi-dependent phase shifts that make N >= 2 superpositions exact KP
    solutions; ``False`` reproduces the unshifted entries, which agree with
    the shifted ones whenever every chi is zero.
    """

    family: Family
    modes: tuple
    alpha: float = 1.0
    shifted_coupling: bool = True

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if len(modes) < 1:
            raise ValueError("at least one mode is required")
        if len(modes) > MAX_MODES:
            raise ValueError(f"at most {MAX_MODES} modes are supported")
        if float(self.alpha) != 1.0:
            raise ValueError("only alpha = 1 is supported")
        object.__setattr__(self, "alpha", 1.0)
        if fam is Family.SOLITON:
            if not all(isinstance(m, SolitonMode) for m in modes):
                raise TypeError("soliton family needs SolitonMode entries")
            self._check_soliton()
        else:
            if not all(isinstance(m, SpectralMode) for m in modes):
                raise TypeError(f"{fam.value} family needs SpectralMode entries")
            self._check_spectral()

    def _check_spectral(self):
        a2 = self.alpha ** 2
        sign = 1.0 if self.family is Family.TRIGONOMETRIC else -1.0
        for i, mi in enumerate(self.modes):
            for k in range(i + 1, len(self.modes)):
                mk = self.modes[k]
                dm2 = a2 * (mi.mu - mk.mu) ** 2
                for dl in (mi.lam - mk.lam, mi.lam + mk.lam):
                    if dm2 + sign * dl * dl == 0.0:
                        raise DegenerateModes(
                            f"modes {i} and {k} give a zero coupling denominator")

    def _check_soliton(self):
        for n, mn in enumerate(self.modes):
            for m, mm in enumerate(self.modes):
                if mn.p + mm.q == 0:
                    raise SingularDenominator(f"p[{n}] + q[{m}] = 0")

    @property
    def n(self) -> int:
        return len(self.modes)

    @property
    def is_real(self) -> bool:
        if self.family is not Family.SOLITON:
            return True
        return all(m.is_real for m in self.modes)

    def mode_array(self) -> np.ndarray:
        """(N, 5) float array of (lam, mu, chi, gamma, rho) rows."""
        return np.array([m.as_row() for m in self.modes], dtype=float).reshape(-1, 5)

    def soliton_arrays(self):
        """Complex arrays p, q, c (length N)."""
        p = np.array([m.p for m in self.modes], dtype=complex)
        q = np.array([m.q for m in self.modes], dtype=complex)
        c = np.array([m.c for m in self.modes], dtype=complex)
        return p, q, c


def breather(lam, mu=0.0, chi=0.0, gamma=0.0, rho=0.0) -> SolutionSpec:
    return SolutionSpec(Family.TRIGONOMETRIC, (SpectralMode(lam, mu, chi, gamma, rho),))


def dipole(lam, mu=0.0, chi=0.0, gamma=0.0, rho=0.0) -> SolutionSpec:
    return SolutionSpec(Family.HYPERBOLIC, (SpectralMode(lam, mu, chi, gamma, rho),))


def soliton(p, q, c=1.0) -> SolutionSpec:
    return SolutionSpec(Family.SOLITON, (SolitonMode(p, q, c),))


@dataclass(frozen=True)
class EvalPoint:
    x: float
    y: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "t"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular window sampled at cell centres, row-major, y increasing by row."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid bounds must satisfy max > min")
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise ValueError("grid needs at least one sample per axis")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def ys(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.dy

    def mesh(self):
        """(X, Y) arrays of shape (ny, nx)."""
        return np.meshgrid(self.xs, self.ys)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @classmethod
    def square(cls, half_width: float, n: int) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, n, n)


@dataclass
class ScalarField:
    """Sampled values on a grid plus an explicit singular mask.

    Masked cells hold ``-inf`` in ``values`` (the field diverges to minus
    infinity on the singular set); use ``mask`` rather than testing values.
    """

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray = field(default=None)
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if self.mask is None:
            self.mask = np.zeros(self.grid.shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool).reshape(self.grid.shape)

    def regular_values(self) -> np.ndarray:
        return self.values[~self.mask]

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.mask.copy(), self.t)


def as_points(pts: Sequence) -> tuple:
    """Split a sequence of EvalPoint / (x, y, t) tuples into three float arrays."""
    arr = np.array([(p.x, p.y, p.t) if isinstance(p, EvalPoint) else tuple(p) for p in pts],
                   dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2]
