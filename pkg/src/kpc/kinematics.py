"""Physical layer: alpha^2 from fluid constants, coordinate maps, elevation
and leading-order velocities. SI units throughout."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDepth
from .model import EvalPoint, ScalarField


@dataclass(frozen=True)
class FluidParams:
    g: float = 9.8
    h: float = 1.0
    epsilon: float = 0.1
    rho_fluid: float = 1000.0
    S: float = 0.0

    def __post_init__(self):
        for name in ("g", "h", "epsilon", "rho_fluid", "S"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.g <= 0 or self.h <= 0 or self.rho_fluid <= 0:
            raise ValueError("g, h and rho_fluid must be positive")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.S < 0:
            raise ValueError("S must be non-negative")

    @property
    def wave_speed(self) -> float:
        return math.sqrt(self.g * self.h)


@dataclass(frozen=True)
class PhysicalPoint:
    x: float
    y: float
    t: float
    z: float = 0.0


def alpha_squared(fluid: FluidParams) -> float:
    """2 rho g / (rho g h^2 - 3 S); the sign picks the KP case."""
    den = fluid.rho_fluid * fluid.g * fluid.h ** 2 - 3 * fluid.S
    if den == 0:
        raise DegenerateDepth("rho g h^2 == 3 S")
    return 2 * fluid.rho_fluid * fluid.g / den


def to_physical(pt: EvalPoint, fluid: FluidParams, alpha2: float = 1.0) -> PhysicalPoint:
    t_p = 3 * alpha2 * pt.t / fluid.wave_speed
    return PhysicalPoint(pt.x + 3 * alpha2 * pt.t, pt.y / math.sqrt(2), t_p)


def to_kp(p: PhysicalPoint, fluid: FluidParams, alpha2: float = 1.0) -> EvalPoint:
    t = p.t * fluid.wave_speed / (3 * alpha2)
    return EvalPoint(p.x - 3 * alpha2 * t, p.y * math.sqrt(2), t)


def elevation(f, fluid: FluidParams, alpha2: float = 1.0):
    """Dimensionless surface elevation eta_0 = 4 f / (3 eps alpha^2)."""
    return 4 * np.asarray(f, dtype=float)[()] / (3 * fluid.epsilon * alpha2)


def elevation_m(f, fluid: FluidParams, alpha2: float = 1.0):
    """Elevation in metres, eps h eta_0."""
    return fluid.epsilon * fluid.h * elevation(f, fluid, alpha2)


def _prefactor(fluid, alpha2):
    return 4 * fluid.wave_speed / (3 * alpha2)


def velocity_x(f, fluid: FluidParams, alpha2: float = 1.0):
    """Leading-order horizontal velocity (m/s)."""
    return _prefactor(fluid, alpha2) * np.asarray(f, dtype=float)[()]


def velocity_z(f_x, z_phys, fluid: FluidParams, alpha2: float = 1.0):
    """Leading-order vertical velocity (m/s); zero on the bottom z = -h."""
    z = np.asarray(z_phys, dtype=float)
    if np.any(z < -fluid.h):
        raise ValueError("z_phys must be >= -h")
    return (-(fluid.h + z) * _prefactor(fluid, alpha2) * np.asarray(f_x, dtype=float))[()]


def undertow_map(field: ScalarField, rel_band: float = 1e-6) -> np.ndarray:
    """Sign of the horizontal flow per cell: +1 right, -1 left, 0 in the
    near-zero band |f| < rel_band * max|f|. Masked cells (f -> -inf) are -1."""
    vals = np.where(field.mask, 0.0, field.values)
    scale = np.abs(vals).max() if vals.size else 0.0
    out = np.sign(vals).astype(np.int8)
    out[np.abs(vals) < rel_band * scale] = 0
    out[field.mask] = -1
    return out
