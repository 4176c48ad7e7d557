"""Scenario configuration: JSON parsing, validation and serialization.

A scenario document is a JSON object::

    {"family": "trigonometric", "alpha": 1,
     "modes": [{"lambda": 0.5, "mu": -0.1, "chi": 0, "gamma": 0, "rho": 0}],
     "grid": {"x_min": -10, "x_max": 10, "y_min": -10, "y_max": 10, "nx": 200, "ny": 200},
     "times": {"t_start": 0, "t_end": 0, "steps": 0},
     "regularization": "eq3",
     "outputs": [{"format": "csv"}, {"format": "pgm"}]}

``times`` may also be an explicit list. ``steps`` counts intervals, so
``steps + 1`` samples run from t_start to t_end inclusive. Soliton modes
use the keys p_re, p_im, q_re, q_im, c_re, c_im.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ParseError, ValidationError
from .kinematics import FluidParams
from .model import Family, GridSpec, SolitonMode, SolutionSpec, SpectralMode

REGULARIZATIONS = ("none", "eq3", "clipped")
FORMATS = ("csv", "pgm")

_TOP_KEYS = {"name", "family", "alpha", "shifted_coupling", "modes", "grid", "times",
             "fluid", "regularization", "outputs"}
_SPECTRAL_KEYS = ("lambda", "mu", "chi", "gamma", "rho")
_SOLITON_KEYS = ("p_re", "p_im", "q_re", "q_im", "c_re", "c_im")
_GRID_KEYS = ("x_min", "x_max", "y_min", "y_max", "nx", "ny")
_RANGE_KEYS = ("t_start", "t_end", "steps")
_FLUID_KEYS = ("g", "h", "epsilon", "rho_fluid", "S")
_OUTPUT_KEYS = {"format", "range"}


@dataclass(frozen=True)
class TimeRange:
    t_start: float
    t_end: float
    steps: int

    def values(self) -> np.ndarray:
        if self.steps == 0:
            return np.array([self.t_start])
        return np.linspace(self.t_start, self.t_end, self.steps + 1)


@dataclass(frozen=True)
class OutputRequest:
    format: str
    range: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class ScenarioConfig:
    family: Family
    modes: tuple
    grid: GridSpec
    times: Union[TimeRange, Tuple[float, ...]]
    alpha: float = 1.0
    shifted_coupling: bool = True
    fluid: Optional[FluidParams] = None
    regularization: str = "eq3"
    outputs: Tuple[OutputRequest, ...] = field(
        default=(OutputRequest("csv"), OutputRequest("pgm")))
    name: Optional[str] = None

    @property
    def spec(self) -> SolutionSpec:
        return SolutionSpec(self.family, self.modes, self.alpha, self.shifted_coupling)

    def time_values(self) -> np.ndarray:
        if isinstance(self.times, TimeRange):
            return self.times.values()
        return np.asarray(self.times, dtype=float)


# ---------------------------------------------------------------- helpers

def _obj(v, path):
    if not isinstance(v, dict):
        raise ValidationError(path, "expected an object")
    return v


def _no_extra(d, allowed, path):
    for k in d:
        if k not in allowed:
            raise ValidationError(f"{path}.{k}" if path else k, "unknown key")


def _num(v, path):
    # bool is an int subclass in Python; JSON true is not a number here
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(path, "expected a number")
    v = float(v)
    if not math.isfinite(v):
        raise ValidationError(path, "must be finite")
    return v


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ValidationError(path, "expected an integer")
    return v


def _spectral(d, path):
    _no_extra(d, _SPECTRAL_KEYS, path)
    if "lambda" not in d:
        raise ValidationError(f"{path}.lambda", "required")
    vals = {k: _num(d.get(k, 0.0), f"{path}.{k}") for k in _SPECTRAL_KEYS}
    if vals["lambda"] == 0:
        raise ValidationError(f"{path}.lambda", "must be nonzero")
    return SpectralMode(vals["lambda"], vals["mu"], vals["chi"], vals["gamma"], vals["rho"])


def _soliton(d, path):
    _no_extra(d, _SOLITON_KEYS, path)
    for k in ("p_re", "q_re"):
        if k not in d:
            raise ValidationError(f"{path}.{k}", "required")
    v = {k: _num(d.get(k, 1.0 if k == "c_re" else 0.0), f"{path}.{k}") for k in _SOLITON_KEYS}
    return SolitonMode(complex(v["p_re"], v["p_im"]), complex(v["q_re"], v["q_im"]),
                       complex(v["c_re"], v["c_im"]))


def _grid(d):
    d = _obj(d, "grid")
    _no_extra(d, _GRID_KEYS, "grid")
    for k in _GRID_KEYS:
        if k not in d:
            raise ValidationError(f"grid.{k}", "required")
    b = {k: _num(d[k], f"grid.{k}") for k in _GRID_KEYS[:4]}
    nx, ny = _int(d["nx"], "grid.nx"), _int(d["ny"], "grid.ny")
    if nx < 2:
        raise ValidationError("grid.nx", "must be >= 2")
    if ny < 2:
        raise ValidationError("grid.ny", "must be >= 2")
    if not b["x_max"] > b["x_min"]:
        raise ValidationError("grid.x_max", "must exceed x_min")
    if not b["y_max"] > b["y_min"]:
        raise ValidationError("grid.y_max", "must exceed y_min")
    return GridSpec(b["x_min"], b["x_max"], b["y_min"], b["y_max"], nx, ny)


def _times(v):
    if isinstance(v, list):
        if not v:
            raise ValidationError("times", "must be nonempty")
        ts = tuple(_num(x, f"times[{i}]") for i, x in enumerate(v))
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValidationError("times", "must be sorted")
        return ts
    d = _obj(v, "times")
    _no_extra(d, _RANGE_KEYS, "times")
    for k in _RANGE_KEYS:
        if k not in d:
            raise ValidationError(f"times.{k}", "required")
    t0, t1 = _num(d["t_start"], "times.t_start"), _num(d["t_end"], "times.t_end")
    steps = _int(d["steps"], "times.steps")
    if t1 < t0:
        raise ValidationError("times.t_end", "must be >= t_start")
    if steps < 0:
        raise ValidationError("times.steps", "must be >= 0")
    if steps == 0 and t1 != t0:
        raise ValidationError("times.steps", "must be > 0 when t_end > t_start")
    return TimeRange(t0, t1, steps)


def _fluid(v):
    d = _obj(v, "fluid")
    _no_extra(d, _FLUID_KEYS, "fluid")
    vals = {k: _num(d[k], f"fluid.{k}") for k in _FLUID_KEYS if k in d}
    try:
        return FluidParams(**vals)
    except ValueError as e:
        raise ValidationError("fluid", str(e)) from None


def _outputs(v):
    if not isinstance(v, list):
        raise ValidationError("outputs", "expected a list")
    out, seen = [], set()
    for i, d in enumerate(v):
        p = f"outputs[{i}]"
        d = _obj(d, p)
        _no_extra(d, _OUTPUT_KEYS, p)
        fmt = d.get("format")
        if fmt not in FORMATS:
            raise ValidationError(f"{p}.format", f"must be one of {FORMATS}")
        if fmt in seen:
            raise ValidationError(f"{p}.format", "duplicate format")
        seen.add(fmt)
        rng = d.get("range")
        if rng is not None:
            if fmt != "pgm":
                raise ValidationError(f"{p}.range", "only pgm takes a range")
            if not isinstance(rng, list) or len(rng) != 2:
                raise ValidationError(f"{p}.range", "expected [lo, hi]")
            rng = (_num(rng[0], f"{p}.range[0]"), _num(rng[1], f"{p}.range[1]"))
        out.append(OutputRequest(fmt, rng))
    return tuple(out)


# ---------------------------------------------------------------- public


def _reject_constant(name):
    # json accepts NaN/Infinity by default; the format does not
    raise ValueError(f"non-standard constant {name}")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises ParseError (with line and column) for malformed JSON and
    ValidationError (with the offending path, e.g. ``modes[0].lambda``)
    for schema violations.
    """
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    except ValueError as e:
        raise ParseError(str(e)) from None
    root = _obj(raw, "$")
    _no_extra(root, _TOP_KEYS, "")
    for k in ("family", "modes", "grid", "times"):
        if k not in root:
            raise ValidationError(k, "required")
    try:
        family = Family.parse(root["family"])
    except ValueError:
        raise ValidationError("family", "must be trigonometric, hyperbolic or soliton") from None
    alpha = _num(root.get("alpha", 1.0), "alpha")
    if alpha != 1.0:
        raise ValidationError("alpha", "only alpha = 1 is supported")
    shifted = root.get("shifted_coupling", True)
    if not isinstance(shifted, bool):
        raise ValidationError("shifted_coupling", "expected a boolean")
    mlist = root["modes"]
    if not isinstance(mlist, list) or not mlist:
        raise ValidationError("modes", "expected a nonempty list")
    modes = []
    for i, m in enumerate(mlist):
        p = f"modes[{i}]"
        m = _obj(m, p)
        modes.append(_soliton(m, p) if family is Family.SOLITON else _spectral(m, p))
    reg = root.get("regularization", "eq3")
    if reg not in REGULARIZATIONS:
        raise ValidationError("regularization", f"must be one of {REGULARIZATIONS}")
    name = root.get("name")
    if name is not None and not isinstance(name, str):
        raise ValidationError("name", "expected a string")
    cfg = ScenarioConfig(
        family=family, modes=tuple(modes), grid=_grid(root["grid"]), times=_times(root["times"]),
        alpha=alpha, shifted_coupling=shifted,
        fluid=_fluid(root["fluid"]) if root.get("fluid") is not None else None,
        regularization=reg,
        outputs=_outputs(root["outputs"]) if "outputs" in root else ScenarioConfig.outputs,
        name=name)
    try:
        cfg.spec
    except (ValueError, TypeError) as e:
        raise ValidationError("modes", str(e)) from None
    return cfg


def to_dict(cfg: ScenarioConfig) -> dict:
    d = {}
    if cfg.name is not None:
        d["name"] = cfg.name
    d["family"] = cfg.family.value
    d["alpha"] = cfg.alpha
    d["shifted_coupling"] = cfg.shifted_coupling
    if cfg.family is Family.SOLITON:
        d["modes"] = [{"p_re": m.p.real, "p_im": m.p.imag, "q_re": m.q.real,
                       "q_im": m.q.imag, "c_re": m.c.real, "c_im": m.c.imag}
                      for m in cfg.modes]
    else:
        d["modes"] = [dict(zip(_SPECTRAL_KEYS, m.as_row())) for m in cfg.modes]
    d["grid"] = {k: getattr(cfg.grid, k) for k in _GRID_KEYS}
    if isinstance(cfg.times, TimeRange):
        d["times"] = {"t_start": cfg.times.t_start, "t_end": cfg.times.t_end,
                      "steps": cfg.times.steps}
    else:
        d["times"] = list(cfg.times)
    if cfg.fluid is not None:
        d["fluid"] = {k: getattr(cfg.fluid, k) for k in _FLUID_KEYS}
    d["regularization"] = cfg.regularization
    d["outputs"] = [{"format": o.format, **({"range": list(o.range)} if o.range else {})}
                    for o in cfg.outputs]
    return d


def serialize(cfg: ScenarioConfig) -> str:
    """JSON text that parses back to an equal config (floats use repr)."""
    return json.dumps(to_dict(cfg), indent=2) + "\n"


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def scenario_names():
    root = resources.files("kpc") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(name: str) -> ScenarioConfig:
    """One of the scenarios shipped with the package, e.g. ``fig19``."""
    p = resources.files("kpc") / "scenarios" / f"{name}.json"
    if not p.is_file():
        raise FileNotFoundError(f"no shipped scenario {name!r}")
    return parse_config(p.read_text(encoding="utf-8"))
