"""Command-line front end: ``ergotropy-map``, ``simulate`` and ``sweep``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

from .config import FORMATS, ConfigError, RunConfig
from .dynamics import (
    SUMMARY_COLUMNS,
    TRAJECTORY_COLUMNS,
    IntegrationError,
    TruncationWarning,
    run_protocol,
    self_discharge_sweep,
)
from .ergotropy import ergotropy_surface, max_ergotropy

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _write(path: Path, csv_text: str | None, records: list[dict], fmt: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()} for r in records]
        path.write_text(json.dumps(clean, indent=1) + "\n", encoding="utf-8")
    else:
        path.write_text(csv_text, encoding="utf-8")


def _gnuplot(path: Path, data: Path, xcol: str, ycols: list[str], columns, title: str, logy=False) -> Path:
    idx = {c: i + 1 for i, c in enumerate(columns)}
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{xcol}'",
    ]
    if logy:
        lines.append("set logscale y")
    plots = ", ".join(f"'{data.name}' using {idx[xcol]}:{idx[y]} with lines title '{y}'" for y in ycols)
    lines.append(f"plot {plots}")
    script = path.with_suffix(path.suffix + ".gp")
    script.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return script


def cmd_ergotropy_map(cfg: RunConfig, out: Path, fmt: str, gnuplot: bool) -> int:
    h = cfg.hamiltonian()
    s = cfg.surface
    surface = ergotropy_surface(h, s.r, s.n_theta, s.n_phi)
    _write(out, surface.to_csv() if fmt == "csv" else None, surface.records() if fmt == "json" else [], fmt)
    tmax, pmax, wmax = surface.argmax()
    tmin, pmin, wmin = surface.argmin()
    print(f"grid max W = {wmax:.10g} at theta = {tmax:.6g}, phi = {pmax:.6g}")
    print(f"grid min W = {wmin:.10g} at theta = {tmin:.6g}, phi = {pmin:.6g}")
    print(f"analytic max W = {max_ergotropy(h).value:.10g}")
    if gnuplot and fmt == "csv":
        script = out.with_suffix(out.suffix + ".gp")
        script.write_text(
            "set datafile separator ','\nset xlabel 'theta'\nset ylabel 'phi'\nset zlabel 'W'\n"
            f"splot '{out.name}' using 1:2:3 every ::1 with points pt 7 ps 0.2 title 'ergotropy'\n",
            encoding="utf-8",
        )
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path, fmt: str, gnuplot: bool) -> int:
    h = cfg.hamiltonian()
    traj = run_protocol(cfg.schedule(), h, cfg.phonon_params())
    _write(out, traj.to_csv() if fmt == "csv" else None, traj.records() if fmt == "json" else [], fmt)
    print(f"peak ergotropy  = {traj.ergotropy.max():.10g}")
    print(f"final ergotropy = {traj.ergotropy[-1]:.10g}  (max {h.delta:.10g})")
    print(f"final |<sigma>| = {traj.bloch_norm[-1]:.10g}")
    for r in traj.reports:
        status = "" if r.converged else f"  [not converged, residual {r.residual:.3e}]"
        print(f"stage {r.label}: t = {r.t_start:.6g} -> {r.t_end:.6g}{status}")
    if gnuplot and fmt == "csv":
        _gnuplot(out, out, "t", ["ergotropy", "bloch_norm"], TRAJECTORY_COLUMNS, "battery dynamics")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, fmt: str, gnuplot: bool, axis: str, values, preset, workers, seed) -> int:
    if not values:
        raise ConfigError("--values", "empty value list")
    phonons = cfg.phonon_params()
    if phonons is None:
        raise ConfigError("phonons.enabled", "self-discharge sweeps need phonons enabled")
    result = self_discharge_sweep(
        axis, values, cfg.hamiltonian(), phonons, cfg.schedule(preset), workers=workers, seed=seed
    )
    curves = out.with_name(out.stem + "_curves" + out.suffix)
    _write(out, result.to_csv() if fmt == "csv" else None, result.records() if fmt == "json" else [], fmt)
    _write(curves, result.curves_to_csv() if fmt == "csv" else None, result.curve_records() if fmt == "json" else [], fmt)
    for p in result.points:
        print(f"{axis} = {p.param_value:<8g} peak W = {p.peak_ergotropy:.6g}  decay time = {p.decay_time:.6g}")
    if gnuplot and fmt == "csv":
        _gnuplot(out, out, "param_value", ["decay_time"], SUMMARY_COLUMNS, f"decay time vs {axis}")
    return EXIT_OK


def _values(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid value list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqdbattery", description="Double-quantum-dot battery simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="INI run configuration (defaults if omitted)")
        p.add_argument("--out", type=Path, help="output file (overrides output.path)")
        p.add_argument("--format", choices=FORMATS, help="output format (overrides output.format)")
        p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script next to the CSV")
        p.add_argument("--seed", type=int, default=None, help="work-distribution order for sweeps")

    common(sub.add_parser("ergotropy-map", help="ergotropy over the Bloch sphere"))
    common(sub.add_parser("simulate", help="run the charging/discharging protocol"))
    sp = sub.add_parser("sweep", help="self-discharge sweep over eps, Tc or temperature")
    common(sp)
    sp.add_argument("--axis", choices=("epsilon", "tc", "kT"), required=True)
    sp.add_argument("--values", type=_values, required=True, help="comma-separated values, e.g. 1,2,4,8")
    sp.add_argument(
        "--preset",
        choices=("direct", "staged", "custom"),
        default="direct",
        help="protocol used for each point (default: direct charge from the empty dot)",
    )
    sp.add_argument("--workers", type=int, default=None)
    sub.add_parser("default-config", help="print the default configuration")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        sys.stdout.write(RunConfig().to_ini())
        return EXIT_OK
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig().validate()
        out = args.out or Path(cfg.output.path)
        fmt = args.format or cfg.output.format
        with warnings.catch_warnings():
            warnings.simplefilter("always", TruncationWarning)
            if args.command == "ergotropy-map":
                return cmd_ergotropy_map(cfg, out, fmt, args.gnuplot)
            if args.command == "simulate":
                return cmd_simulate(cfg, out, fmt, args.gnuplot)
            return cmd_sweep(cfg, out, fmt, args.gnuplot, args.axis, args.values, args.preset, args.workers, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
