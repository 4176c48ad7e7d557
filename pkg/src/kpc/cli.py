"""Command-line entry point: ``kpc <subcommand> --config FILE --out DIR``.

Exit status is 0 on success, 1 for configuration or I/O problems and 2 for
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import __version__
from .config import ScenarioConfig, load_config, load_scenario, scenario_names
from .errors import ConfigError, KPCError
from .export import export_csv, export_pgm, export_table
from .geometry import scan_singular_curve
from .kernel import field_f_grid
from .kinematics import (FluidParams, alpha_squared, elevation_m, to_physical, velocity_x)
from .model import EvalPoint, Family
from .regularization import clip_field, regularize_field
from .rogue import detect_transient, time_series_max
from .verification import DEFAULT_H, residual_scan, soliton_limit_check

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n")


def _display(fld, reg):
    if reg == "eq3":
        return regularize_field(fld)
    if reg == "clipped":
        return clip_field(fld)
    return fld


def cmd_eval(cfg: ScenarioConfig, out, args):
    spec = cfg.spec
    rows = []
    for k, t in enumerate(cfg.time_values()):
        fld = field_f_grid(spec, cfg.grid, float(t), threads=args.threads)
        for o in cfg.outputs:
            name = os.path.join(out, f"frame_{k:04d}.{o.format}")
            if o.format == "csv":
                export_csv(fld, name)
            else:
                export_pgm(_display(fld, cfg.regularization), name, o.range)
        rows.append((f"frame_{k:04d}", float(t)))
    export_table(os.path.join(out, "index.csv"), ("frame", "t"), rows)


def cmd_singular(cfg, out, args):
    rows = []
    for t in cfg.time_values():
        tr = scan_singular_curve(cfg.spec, cfg.grid, float(t), threads=args.threads)
        for s, seg in enumerate(tr.segments):
            rows.extend((float(t), s, x, y) for x, y in seg)
    export_table(os.path.join(out, "trace.csv"), ("t", "segment", "x", "y"), rows)


def cmd_residual(cfg, out, args):
    h = args.fd_step if args.fd_step is not None else DEFAULT_H
    reports = []
    for t in cfg.time_values():
        rep = residual_scan(cfg.spec, cfg.grid, float(t), h=h, threads=args.threads)
        reports.append({"t": float(t), **rep.to_dict()})
    _write_json(os.path.join(out, "residual.json"), {"h": h, "reports": reports})


def cmd_rogue(cfg, out, args):
    ser = time_series_max(cfg.spec, cfg.grid, cfg.time_values(), threads=args.threads)
    rows = [(t, v, lx, ly, w, mx, my) for t, v, (lx, ly), w, (mx, my)
            in zip(ser.times, ser.max_value, ser.max_location, ser.min_value, ser.min_location)]
    export_table(os.path.join(out, "series.csv"),
                 ("t", "max_value", "max_x", "max_y", "min_value", "min_x", "min_y"), rows)
    events = detect_transient(ser)
    _write_json(os.path.join(out, "events.json"), {"events": [e.to_dict() for e in events]})


def cmd_transform(cfg, out, args):
    fluid = cfg.fluid or FluidParams()
    a2 = alpha_squared(fluid)
    g = cfg.grid
    frames = []
    for t in cfg.time_values():
        fld = field_f_grid(cfg.spec, g, float(t), threads=args.threads)
        reg = fld.values[~fld.mask]
        lo = to_physical(EvalPoint(g.x_min, g.y_min, float(t)), fluid, a2)
        hi = to_physical(EvalPoint(g.x_max, g.y_max, float(t)), fluid, a2)
        fr = {"t": float(t), "t_phys": lo.t,
              "x_phys": [lo.x, hi.x], "y_phys": [lo.y, hi.y]}
        if reg.size:
            fr.update(max_elevation_m=float(elevation_m(reg.max(), fluid, a2)),
                      min_elevation_m=float(elevation_m(reg.min(), fluid, a2)),
                      max_u=float(velocity_x(reg.max(), fluid, a2)),
                      min_u=float(velocity_x(reg.min(), fluid, a2)))
        frames.append(fr)
    _write_json(os.path.join(out, "transform.json"),
                {"alpha_squared": a2, "wave_speed": fluid.wave_speed,
                 "fluid": {k: getattr(fluid, k) for k in ("g", "h", "epsilon", "rho_fluid", "S")},
                 "frames": frames})


def cmd_limit(cfg, out, args):
    if cfg.family is not Family.TRIGONOMETRIC:
        raise ConfigError("limit needs a trigonometric scenario")
    eps = (0.2, 0.1, 0.05, 0.025)
    rows = []
    for i, m in enumerate(cfg.modes):
        for e, err in zip(eps, soliton_limit_check(m, eps_list=eps)):
            rows.append((i, e, err))
    export_table(os.path.join(out, "limit.csv"), ("mode", "eps", "error"), rows)


COMMANDS = {"eval": cmd_eval, "singular": cmd_singular, "residual": cmd_residual,
            "rogue": cmd_rogue, "transform": cmd_transform, "limit": cmd_limit}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpc", description="KP solution families toolkit")
    p.add_argument("--version", action="version", version=f"kpc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True,
                       help="scenario JSON file, or a shipped name: " + ", ".join(scenario_names()))
        s.add_argument("--out", required=True, help="output directory (created if missing)")
        s.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: KPC_THREADS or 1)")
        s.add_argument("--fd-step", type=float, default=None, help="residual stencil step h")
    return p


def _load(arg):
    if not os.path.exists(arg) and arg in scenario_names():
        return load_scenario(arg)
    return load_config(arg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.fd_step is not None and not args.fd_step > 0:
            raise ConfigError("--fd-step must be positive")
        cfg = _load(args.config)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args)
    except (ConfigError, OSError) as e:
        print(f"kpc: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KPCError, ArithmeticError, ValueError) as e:
        print(f"kpc: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
