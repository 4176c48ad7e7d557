"""Explicit KP-equation solution families: evaluation, regularization,
singular geometry, residual verification and rogue-wave scans."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (EvalPoint, Family, GridSpec, ScalarField, SolitonMode, SolutionSpec,
                    SpectralMode, breather, dipole, soliton)
from .kernel import BACKEND, evaluate, field_f, field_f_grid, field_fx
from .regularization import clip_display, regularize
from .config import load_config, load_scenario, parse_config, serialize

__all__ = ["BACKEND", "EvalPoint", "Family", "GridSpec", "ScalarField", "SolitonMode",
           "SolutionSpec", "SpectralMode", "breather", "dipole", "soliton", "evaluate",
           "field_f", "field_f_grid", "field_fx", "clip_display", "regularize",
           "load_config", "load_scenario", "parse_config", "serialize"]
