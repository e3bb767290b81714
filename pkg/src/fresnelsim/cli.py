"""Command-line entry point: ``fresnelsim {run,map,analyze,sweep}``.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error. The output
directory defaults to ``$FRESNELSIM_OUT`` or, failing that, ``./out``.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import yaml

from . import experiments
from .analysis import (
    NoCrossingError, compute_trace, field_map, threshold_crossings, threshold_delay, warn_if_half_level,
)
from .geometry import GeometryError
from .scenario import Scenario, ScenarioError, read_scenario
from .tables import fmt, trace_reference, write_csv, write_trace

OUT_ENV = "FRESNELSIM_OUT"
EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


def _level(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"level must be a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"level must be in (0, 1), got {v}")
    return v


def parse_grid(text: str) -> tuple[tuple[float, float], tuple[float, float], float]:
    """``x0,x1,y0,y1,res`` -> ((x0, x1), (y0, y1), res)."""
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError("grid must be x0,x1,y0,y1,res")
    try:
        x0, x1, y0, y1, res = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid values must be numbers, got {text!r}") from None
    if not (x1 > x0 and y1 > y0 and res > 0):
        raise argparse.ArgumentTypeError("grid needs x1 > x0, y1 > y0 and res > 0")
    return (x0, x1), (y0, y1), res


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./out)")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = argparse.ArgumentParser(prog="fresnelsim", description="Fresnel-diffraction channel simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="channel trace along the scenario path")
    run.add_argument("--scenario", type=Path, required=True)

    mp = sub.add_parser("map", parents=[common], help="|h| over a rectangular grid")
    mp.add_argument("--scenario", type=Path, required=True)
    mp.add_argument("--grid", type=parse_grid, required=True, help="x0,x1,y0,y1,res in metres")
    mp.add_argument("--frequency", type=float, default=None, help="carrier in Hz (default: every carrier)")
    mp.add_argument("--component", type=int, default=None, help="map one component (0 = direct)")

    an = sub.add_parser("analyze", parents=[common], help="threshold events and delays")
    an.add_argument("--scenario", type=Path, required=True)
    an.add_argument("--level", type=_level, default=None,
                    help="threshold fraction for both directions (default 0.7 falling, 0.3 rising)")

    sw = sub.add_parser("sweep", parents=[common], help="run a named experiment")
    sw.add_argument("name")
    sw.add_argument("--workers", type=int, default=1)
    return p


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "out"))


def _load(path: Path) -> Scenario:
    try:
        return read_scenario(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"cannot read scenario {path}") from None


def _stem(s: Scenario, path: Path) -> str:
    return s.name or path.stem


def cmd_run(args) -> Path:
    scen = _load(args.scenario)
    trace = compute_trace(scen, seed=args.seed)
    return write_trace(_out_dir(args) / f"{_stem(scen, args.scenario)}.csv", trace)


def cmd_map(args) -> list[Path]:
    scen = _load(args.scenario)
    xr, yr, res = args.grid
    freqs = [args.frequency] if args.frequency is not None else [f.center for f in scen.frequencies]
    out = []
    for f in freqs:
        xs, ys, vals, ref = field_map(scen, f, xr, yr, res, component=args.component, seed=args.seed)
        rows = ((x, y, vals[iy, ix]) for iy, y in enumerate(ys) for ix, x in enumerate(xs))
        comments = [f"reference={fmt(ref)} kind=free_space_at_grid_centre f_hz={fmt(f)}",
                    f"component={'total' if args.component is None else args.component}"]
        path = _out_dir(args) / f"{_stem(scen, args.scenario)}_map_{f:.6g}Hz.csv"
        out.append(write_csv(path, ["x_m", "y_m", "h_abs_norm"], rows, comments))
    return out


def motion_reversed(trace, f: float, direction: str) -> bool:
    """Walk the path backwards when that is the way the signal ``direction``s.

    A falling delay is measured walking from the brighter end of the path
    towards the darker one, a rising delay the other way.
    """
    y = trace.compensated(f)
    half = len(y) // 2
    end_brighter = float(y[half:].mean()) > float(y[:half].mean())
    return end_brighter if direction == "falling" else not end_brighter


def cmd_analyze(args) -> tuple[Path, Path]:
    scen = _load(args.scenario)
    if args.level is not None:
        warn_if_half_level(args.level)
    levels = {"falling": args.level or 0.7, "rising": args.level or 0.3}
    trace = compute_trace(scen, seed=args.seed)
    freqs = sorted(trace.frequencies)
    events, comments = [], []
    for f in freqs:
        ref, kind = trace_reference(trace, f)
        comments.append(f"reference f_hz={fmt(f)} kind={kind} value={fmt(ref)}")
        for direction, level in levels.items():
            for ev in threshold_crossings(trace, f, level, direction, reference=ref):
                events.append((ev.frequency, ev.position, ev.direction, ev.level))
    events.sort(key=lambda e: (e[0], e[1]))
    delays = []
    refs = {f: trace_reference(trace, f)[0] for f in freqs}
    for i, lo in enumerate(freqs):
        for hi in freqs[i + 1:]:
            for direction, level in levels.items():
                try:
                    d = threshold_delay(trace, lo, hi, level, direction, reference=refs,
                                        reverse=motion_reversed(trace, lo, direction))
                except NoCrossingError:
                    d = None
                delays.append((lo, hi, direction, level, d))
    root = _out_dir(args)
    ev_path = write_csv(root / "events.csv", ["frequency", "position", "direction", "level"], events, comments)
    dl_path = write_csv(root / "delays.csv", ["f_low", "f_high", "direction", "level", "delay_m"], delays,
                        comments)
    return ev_path, dl_path


def cmd_sweep(args) -> Path:
    if args.name not in experiments.EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; valid names: {', '.join(experiments.EXPERIMENTS)}")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    report = experiments.run_experiment(args.name, seed=args.seed, workers=args.workers)
    return report.write(_out_dir(args))


COMMANDS = {"run": cmd_run, "map": cmd_map, "analyze": cmd_analyze, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = lambda msg, cat, *a, **k: print(f"warning: {msg}", file=sys.stderr)
        try:
            result = COMMANDS[args.command](args)
        except (ScenarioError, GeometryError, UsageError, ValueError, yaml.YAMLError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    paths = result if isinstance(result, (list, tuple)) else [result]
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
