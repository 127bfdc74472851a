"""``gridforge`` command line: ``run``, ``sweep`` and ``init``.

Exit codes: ``run`` returns 0 for a stable run, 2 for an unstable one and 1
on any error; ``sweep`` returns 0 when every run was classified; ``init``
returns 0 when the equilibrium meets its tolerance.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, SweepSpec, apply_overrides, load, parse_override, parse_value
from .scenarios import (PRESETS, VARIANTS, InitializationError, ScenarioConfig, SweepEntry,
                        TimeSeries, initialize, preset, run_scenario, sweep_disturbances)

CSV_FORMAT = "%.9g"
SWEEP_COLUMNS = ("dp", "nadir", "rocof", "nadir_norm", "rocof_norm", "stability")
DETERMINISM = ("fixed-step integration without random numbers; identical inputs give "
               "identical outputs on the same platform")


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _num(x) -> str:
    return "" if x is None else CSV_FORMAT % x


def timeseries_csv(series: TimeSeries) -> str:
    names = ["time"] + series.names
    cols = [series.time] + [series[n] for n in series.names]
    data = np.column_stack(cols) if len(series) else np.zeros((0, len(names)))
    lines = [",".join(names)]
    lines += [",".join(CSV_FORMAT % v for v in row) for row in data]
    return "\n".join(lines) + "\n"


def sweep_csv(entries: list[SweepEntry]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for e in entries:
        r = e.report
        vals = [_num(e.dp)]
        if r is None:
            vals += ["", "", "", ""]
        else:
            vals += [_num(r.nadir), _num(r.rocof), _num(r.nadir_norm), _num(r.rocof_norm)]
        vals.append(e.stability)
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def comparison_csv(results: dict[str, list[SweepEntry]]) -> str:
    lines = ["variant,runs,stable,median_nadir_norm,median_rocof_norm"]
    for name, entries in results.items():
        done = [e.report for e in entries if e.report is not None]
        nad = [r.nadir_norm for r in done if r.nadir_norm is not None]
        roc = [r.rocof_norm for r in done if r.rocof_norm is not None]
        stable = sum(1 for r in done if r.stable)
        lines.append(",".join([name, str(len(entries)), str(stable),
                               _num(float(np.median(nad))) if nad else "",
                               _num(float(np.median(roc))) if roc else ""]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridforge", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"gridforge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", nargs="?", help="scenario file or preset name")
        p.add_argument("--preset", choices=PRESETS, help="start from a named preset")
        p.add_argument("--strategy", help="converter control: droop, vsm, matching or dvoc")
        p.add_argument("--t-end", type=float, help="simulated time in seconds")
        p.add_argument("--dt", type=float, help="integration step in seconds")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set any scenario field, e.g. control.k_iv=20")

    run = sub.add_parser("run", help="simulate one scenario")
    common(run)
    run.add_argument("--dp", type=float, help="load-step magnitude in pu")
    sw = sub.add_parser("sweep", help="repeat a scenario over load-step magnitudes")
    common(sw)
    sw.add_argument("--dp", help="comma-separated load-step magnitudes (default: sweep grid)")
    sw.add_argument("--strategies", help=f"comma-separated variants from {', '.join(VARIANTS)}")
    init = sub.add_parser("init", help="compute and store the initial equilibrium")
    common(init)
    return ap


def _resolve(args) -> tuple[ScenarioConfig, SweepSpec, str | None]:
    """Scenario from a file, a preset name or ``--preset``, plus flags."""
    source = args.config
    strategy = args.strategy or "droop"
    path = None
    if source is not None and (Path(source).exists() or source not in PRESETS):
        cfg, sweep = load(source)
        path = str(Path(source))
        if args.strategy:
            cfg = apply_overrides(cfg, {"strategy": args.strategy})
    else:
        default = "sweep-9bus" if args.command == "sweep" else "large-disturbance"
        name = source or args.preset or default
        try:
            cfg = preset(name, strategy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        sweep = SweepSpec()
    flags = {}
    if args.t_end is not None:
        flags["t_end"] = args.t_end
    if args.dt is not None:
        flags["integrator.dt"] = args.dt
    for text in args.override:
        key, value = parse_override(text)
        flags[key] = value
    cfg = apply_overrides(cfg, flags)
    return cfg, sweep, path


def _manifest(args, cfg: ScenarioConfig, path: str | None, out: Path, wall: float) -> dict:
    return {
        "tool": "gridforge",
        "version": __version__,
        "command": args.command,
        "config_path": path,
        "output_dir": str(out),
        "determinism": DETERMINISM,
        "wall_clock_seconds": round(wall, 3),
        "scenario": asdict(cfg),
    }


def cmd_run(args) -> int:
    cfg, _, path = _resolve(args)
    if args.dp is not None:
        cfg = cfg.with_dp(args.dp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = time.perf_counter()
    result = run_scenario(cfg)
    report = result.report
    _write_atomic(out / "timeseries.csv", timeseries_csv(result.series))
    metrics = report.to_dict()
    metrics["scenario"] = cfg.name
    metrics["strategy"] = cfg.strategy
    _write_atomic(out / "metrics.json", _json(metrics))
    _write_atomic(out / "manifest.json",
                  _json(_manifest(args, cfg, path, out, time.perf_counter() - t)))
    print(f"{cfg.name} [{cfg.strategy}]: {report.stability}, nadir {report.nadir:.6g} rad/s, "
          f"rocof {report.rocof:.6g} rad/s^2")
    return 0 if report.stable else 2


def cmd_sweep(args) -> int:
    cfg, spec, path = _resolve(args)
    if args.dp is not None:
        vals = parse_value(args.dp)
        vals = vals if isinstance(vals, tuple) else (() if vals is None else (vals,))
        try:
            dps = [float(v) for v in vals]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--dp: {exc}") from exc
    else:
        dps = [float(v) for v in spec.values()]
    if not dps:
        raise ConfigError("--dp: empty disturbance list")
    variants = ([v.strip() for v in args.strategies.split(",") if v.strip()]
                if args.strategies else [cfg.strategy])
    if not variants:
        raise ConfigError("--strategies: empty list")
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"--strategies: unknown variant {v!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = time.perf_counter()
    results = {}
    for v in variants:
        entries = sweep_disturbances(cfg.variant(v), dps)
        results[v] = entries
        name = "sweep.csv" if len(variants) == 1 else f"sweep_{v}.csv"
        _write_atomic(out / name, sweep_csv(entries))
        bad = [e for e in entries if e.error]
        print(f"{v}: {len(entries) - len(bad)}/{len(entries)} runs classified")
    if len(variants) > 1:
        _write_atomic(out / "comparison.csv", comparison_csv(results))
    manifest = _manifest(args, cfg, path, out, time.perf_counter() - t)
    manifest["variants"] = variants
    manifest["dp"] = dps
    _write_atomic(out / "manifest.json", _json(manifest))
    errors = [e.error for entries in results.values() for e in entries if e.error]
    for err in errors[:5]:
        print(f"run failed: {err}", file=sys.stderr)
    return 1 if errors else 0


def cmd_init(args) -> int:
    cfg, _, path = _resolve(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eq = initialize(replace(cfg, events=()))
    model = eq.model
    pf = eq.power_flow
    buses = []
    for k, name in enumerate(model.net.names):
        v, s = complex(pf.voltage[k]), complex(pf.injection[k])
        buses.append({"bus": name, "v": abs(v), "angle": float(np.angle(v)),
                      "p": s.real, "q": s.imag})
    payload = {
        "residual": eq.residual,
        "state": dict(zip(model.layout.labels(), (float(v) for v in eq.state))),
        "power_flow": buses,
        "scenario": cfg.name,
        "strategy": cfg.strategy,
    }
    _write_atomic(out / "equilibrium.json", _json(payload))
    print(f"max derivative residual: {eq.residual:.3e}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "init": cmd_init}[args.command]
    try:
        return handler(args)
    except (ConfigError, InitializationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
