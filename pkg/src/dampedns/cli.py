"""Command-line entry points.

Subcommands: ``run`` (integrate one configuration), ``verify`` (run plus
every energy-estimate check, nonzero exit on a hard failure), ``sweep``
(convergence-speed sweep over the damping parameters), ``separate``
(trajectory-separation ratio test) and ``presets`` (list built-in
configurations). Summaries go to stdout as JSON; artifacts land in the
configured output directory.

Exit codes: 0 success, 1 failed checks or solver errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .bounds import (
    RegimeError,
    check_absorbing_ball,
    check_damping_positivity,
    check_decay_bound,
    check_integral_bound,
    check_norm_boundedness,
    in_regularity_regime,
    monotone_envelope_max_excess,
)
from .config import (
    ConfigError,
    RunConfig,
    build_grid,
    build_physics,
    build_state,
    load_preset,
    parse_config,
    preset_names,
    preset_text,
)
from .diagnostics import DiagnosticsLog, record
from .experiments import ExperimentSpec, run_convergence_speed_sweep, run_trajectory_separation
from .storage import DiagnosticsWriter, StorageError, check_restart_compatible, read_snapshot, write_snapshot
from .timestepping import Observer, SolverError, integrate

__all__ = ["main", "console_entry"]


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_config(args) -> RunConfig:
    if args.preset:
        return load_preset(args.preset)
    if not args.config:
        raise ConfigError("either a config file or --preset is required")
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text())


def _run_one(cfg: RunConfig, restart: str | None = None):
    """Integrate one configuration, streaming diagnostics and snapshots."""
    grid = build_grid(cfg)
    physics = build_physics(cfg, grid)
    if restart:
        state, header = read_snapshot(restart)
        check_restart_compatible(header, grid, physics)
    else:
        state = build_state(cfg, grid)

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.run_id}.csv"
    log = DiagnosticsLog(physics)
    observers = [log.observer(cfg.diag_stride)]
    writer = DiagnosticsWriter(csv_path)
    observers.append(Observer(cfg.diag_stride, lambda st: writer.append(record(st.u, st.t, physics))))
    if cfg.snapshot_stride > 0:
        observers.append(Observer(
            cfg.snapshot_stride,
            lambda st: write_snapshot(st, physics, out_dir / f"{cfg.run_id}-{st.step_count:08d}.snap"),
        ))
    try:
        state = integrate(state, cfg.t_end, cfg.scheme, physics, observers)
    finally:
        writer.close()
    write_snapshot(state, physics, out_dir / f"{cfg.run_id}-final.snap")
    return grid, physics, state, log.finalized(), csv_path


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    grid, physics, state, records, csv_path = _run_one(cfg, args.restart)
    _emit({
        "command": "run",
        "run_id": cfg.run_id,
        "t_end": state.t,
        "steps": state.step_count,
        "E_final": records[-1].E,
        "umax_final": records[-1].umax,
        "diagnostics": str(csv_path),
    })
    return 0


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    grid, physics, state, records, csv_path = _run_one(cfg)
    lam1 = grid.lambda1
    f2 = physics.forcing.norm_sq
    # adaptive runs may step anywhere up to dt_max; scale tolerances to that
    dt = cfg.scheme.dt_max if cfg.scheme.adaptive else cfg.scheme.dt
    order = cfg.scheme.order
    e0 = records[0].E

    reports = [
        check_damping_positivity(records),
        check_decay_bound(records, e0, physics.mu, lam1, f2, dt=dt, order=order),
        check_integral_bound(records, records[0].t, records[-1].t, physics.mu,
                             physics.alpha, lam1, f2, dt=dt, order=order),
    ]
    horizon = records[-1].t - records[0].t
    if math.exp(-physics.mu * lam1 * horizon) * e0 <= 1.0:
        reports.append(check_absorbing_ball(records, physics.mu, lam1, f2, dt=dt, order=order))
    burn_in = records[0].t + 0.25 * horizon
    if (in_regularity_regime(physics.mu, physics.alpha, physics.beta)
            and sum(r.t >= burn_in for r in records) >= 4):
        reports.append(check_norm_boundedness(
            records, burn_in, physics.mu, physics.alpha, physics.beta))
    env_ok, env_excess = monotone_envelope_max_excess(
        records, physics.mu, lam1, f2, dt=dt, order=order)

    rows = [r.row() for r in reports]
    rows.append({"bound_id": "monotone_envelope", "pass": env_ok,
                 "min_margin": -env_excess, "tolerance": 0.0})
    for row in rows:
        _emit(row)
    all_pass = all(row["pass"] for row in rows)
    _emit({"command": "verify", "run_id": cfg.run_id, "all_pass": all_pass})
    return 0 if all_pass else 1


def _cmd_sweep(args) -> int:
    base = load_preset("cylinder-a02-b1")
    scheme = replace(base.scheme, dt_max=args.dt_max)
    cfg = replace(base, n=args.n, mu=args.mu, scheme=scheme, output_dir=args.out)
    spec = ExperimentSpec(
        kind="parameter_sweep", config=cfg,
        alphas=tuple(args.alphas), betas=tuple(args.betas),
        steady_tol=args.steady_tol, max_t=args.max_t, stride=args.stride,
        snapshot_dir=args.out,
    )
    result = run_convergence_speed_sweep(spec)
    for row in result.table():
        _emit(row)
    _emit({
        "command": "sweep",
        "alpha_nonincreasing": {str(k): v for k, v in result.alpha_nonincreasing.items()},
        "beta_nonincreasing": {str(k): v for k, v in result.beta_nonincreasing.items()},
    })
    return 0


def _cmd_separate(args) -> int:
    base = load_preset("cylinder-a02-b1")
    scheme = replace(base.scheme, dt=args.dt, adaptive=False)
    cfg = replace(
        base, n=args.n, mu=args.mu, alpha=args.alpha, beta=args.beta, scheme=scheme,
        initial=replace(base.initial, kind="random", seed=args.seed, energy=args.energy),
    )
    spec = ExperimentSpec(
        kind="trajectory_separation", config=cfg,
        deltas=tuple(args.deltas), perturb_seed=args.perturb_seed,
        max_t=args.t, stride=args.stride,
    )
    result = run_trajectory_separation(spec)
    for run in result.runs:
        _emit({"delta": run.delta, "max_ratio": run.ratio, "growth_rate": run.growth_rate})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        curves = out / "separation.csv"
        with open(curves, "w", newline="\n") as fh:
            fh.write("t," + ",".join(f"d_{r.delta:g}" for r in result.runs) + "\n")
            for i, t in enumerate(result.runs[0].times):
                row = [format(t, ".17g")] + [format(r.distances[i], ".17g") for r in result.runs]
                fh.write(",".join(row) + "\n")
        _emit({"separation_curves": str(curves)})
    _emit({
        "command": "separate",
        "ratio_spread": result.ratio_spread,
        "uniform_in_delta": result.uniform_in_delta,
    })
    return 0 if result.uniform_in_delta else 1


def _cmd_presets(args) -> int:
    for name in preset_names():
        cfg = load_preset(name)
        _emit({
            "preset": name, "mu": cfg.mu, "alpha": cfg.alpha, "beta": cfg.beta,
            "n": cfg.n, "l": cfg.length, "forcing": cfg.forcing.kind,
            "ic": cfg.initial.kind, "t_end": cfg.t_end,
        })
        if args.show:
            print(preset_text(name))
    return 0


def _floats(raw: str) -> list[float]:
    return [float(p) for p in raw.split(",") if p.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dampedns",
        description="Pseudo-spectral damped Navier-Stokes solver and estimate verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("config", nargs="?", help="path to a config file")
    p_run.add_argument("--preset", help="built-in configuration name")
    p_run.add_argument("--restart", help="snapshot file to continue from")
    p_run.set_defaults(fn=_cmd_run)

    p_ver = sub.add_parser("verify", help="run and check every energy estimate")
    p_ver.add_argument("config", nargs="?", help="path to a config file")
    p_ver.add_argument("--preset", help="built-in configuration name")
    p_ver.set_defaults(fn=_cmd_verify)

    p_sw = sub.add_parser("sweep", help="convergence-speed sweep over (alpha, beta)")
    p_sw.add_argument("--alphas", type=_floats, default=[0.2, 0.5])
    p_sw.add_argument("--betas", type=_floats, default=[1.0, 2.0, 4.0])
    p_sw.add_argument("--n", type=int, default=32)
    p_sw.add_argument("--mu", type=float, default=1.0)
    p_sw.add_argument("--max-t", type=float, default=200.0, dest="max_t")
    p_sw.add_argument("--stride", type=float, default=0.25)
    p_sw.add_argument("--steady-tol", type=float, default=1e-6, dest="steady_tol")
    p_sw.add_argument("--dt-max", type=float, default=0.05, dest="dt_max")
    p_sw.add_argument("--out", default="out/sweep")
    p_sw.set_defaults(fn=_cmd_sweep)

    p_sep = sub.add_parser("separate", help="perturbation separation ratio test")
    p_sep.add_argument("--alpha", type=float, default=0.5)
    p_sep.add_argument("--beta", type=float, default=4.0)
    p_sep.add_argument("--mu", type=float, default=0.5)
    p_sep.add_argument("--n", type=int, default=32)
    p_sep.add_argument("--t", type=float, default=5.0)
    p_sep.add_argument("--dt", type=float, default=0.01)
    p_sep.add_argument("--stride", type=float, default=0.25)
    p_sep.add_argument("--deltas", type=_floats, default=[1e-2, 1e-3, 1e-4])
    p_sep.add_argument("--seed", type=int, default=1)
    p_sep.add_argument("--energy", type=float, default=1.0)
    p_sep.add_argument("--perturb-seed", type=int, default=7, dest="perturb_seed")
    p_sep.add_argument("--out", default=None, help="directory for the separation-curve CSV")
    p_sep.set_defaults(fn=_cmd_separate)

    p_pre = sub.add_parser("presets", help="list built-in configurations")
    p_pre.add_argument("--show", action="store_true", help="print the full config text")
    p_pre.set_defaults(fn=_cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except RegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, StorageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_entry() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    console_entry()
