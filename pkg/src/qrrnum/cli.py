"""Command-line front end.

Four commands: `region` (vertices and boundary of the achievable
throughput region), `verify` (Monte Carlo check of the round robin rate
formulas), `simulate` (one controller run), and `sweep` (controller runs
across a V_g grid against the offline optimum).  Each command writes
delimited tables, a JSON summary where applicable, rendered PNG figures,
and an echo of the resolved config, all stamped with the config hash and
seed.

Exit codes: 0 success, 1 validation error, 2 runtime assertion,
3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import report
from .capacity import (
    ActivationVector,
    b_constant,
    build_region,
    eta_vector,
    solve_offline_optimum,
)
from .config import COMMANDS, ConfigError, ExperimentSpec, load_spec
from .policy import FeasibilityError, PolicyRandRR
from .sim import RunConfig, run_fixed_policy, run_qrrnum, stability_diagnostic

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFY_FAILED = 3


def _meta(spec: ExperimentSpec) -> Dict[str, Any]:
    return {"config_hash": spec.config_hash(), "seed": spec.seed}


def _prepare_out(spec: ExperimentSpec) -> Path:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec.echo(out / "config_echo.yaml")
    return out


def cmd_region(spec: ExperimentSpec, verbose: bool) -> int:
    try:
        region = build_region(
            spec.models, enum_cap=spec.enum_cap, pairs_only=spec.pairs_only
        )
    except ValueError as e:
        raise ConfigError(
            f"{e}; set region.pairs_only: true to keep the vertex count "
            f"polynomial"
        ) from e
    out = _prepare_out(spec)
    meta = _meta(spec)
    written = [
        report.write_table(
            out / "region_vertices",
            report.region_header(spec.n),
            report.region_rows(region),
            spec.fmt,
            meta,
        )
    ]
    boundary = None
    if spec.n == 2:
        boundary = report.boundary_rows(region, spec.region_rays)
        written.append(
            report.write_table(
                out / "region_boundary",
                ["theta", "y_0", "y_1"],
                boundary,
                spec.fmt,
                meta,
            )
        )
    if spec.plots and boundary is not None:
        written.append(report.plot_region(region, boundary, out / "region.png"))
    for path in written:
        print(path)
    if verbose:
        for mask, vertex in zip(region.masks, region.vertices):
            print(f"  mask {mask:>4b}: {np.round(vertex, 6)}")
    return EXIT_OK


def _verify_masks(spec: ExperimentSpec) -> List[int]:
    n = spec.n
    masks = [1 << i for i in range(n)]
    all_ones = (1 << n) - 1
    if all_ones not in masks:
        masks.append(all_ones)
    rng = np.random.default_rng(spec.seed)
    pool = [
        m for m in range(1, 1 << n)
        if m not in masks and n <= 20
    ]
    extra = min(spec.verify_extra_subsets, len(pool))
    if extra > 0:
        masks.extend(
            int(m) for m in rng.choice(pool, size=extra, replace=False)
        )
    return masks


def cmd_verify(spec: ExperimentSpec, verbose: bool) -> int:
    out = _prepare_out(spec)
    meta = _meta(spec)
    rows: List[List[Any]] = []
    ok = True
    for mask in _verify_masks(spec):
        phi = ActivationVector(mask=mask, n=spec.n)
        eta = eta_vector(spec.models, phi)
        cfg = RunConfig(
            models=spec.models,
            horizon=spec.verify_horizon,
            seed=spec.seed,
            warmup=0,
        )
        metrics = run_fixed_policy(
            cfg, PolicyRandRR.pure(phi), np.ones(spec.n)
        )
        err = float(np.max(np.abs(metrics.ybar - eta)))
        passed = err <= spec.verify_tolerance
        ok = ok and passed
        rows.append(
            [mask, phi.m]
            + [float(v) for v in eta]
            + [float(v) for v in metrics.ybar]
            + [err, "pass" if passed else "FAIL"]
        )
        if verbose or not passed:
            print(
                f"mask {mask:>{spec.n}b}: max|ybar - eta| = {err:.6f} "
                f"({'pass' if passed else 'FAIL'})"
            )
    header = (
        ["mask", "m"]
        + [f"eta_{i}" for i in range(spec.n)]
        + [f"ybar_{i}" for i in range(spec.n)]
        + ["max_err", "status"]
    )
    print(report.write_table(out / "verify_report", header, rows, spec.fmt, meta))
    print(f"verify: {'all subsets pass' if ok else 'FAILED'} "
          f"(tolerance {spec.verify_tolerance})")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_simulate(spec: ExperimentSpec, verbose: bool) -> int:
    out = _prepare_out(spec)
    meta = _meta(spec)
    cfg = RunConfig(
        models=spec.models,
        horizon=spec.horizon,
        seed=spec.seed,
        utility=spec.utility(),
        v_g=spec.v_g,
        mode=spec.mode,
        warmup=spec.warmup,
        enum_cap=spec.enum_cap,
        record_frames=True,
    )
    metrics = run_qrrnum(cfg)
    diag = stability_diagnostic(metrics)
    b = b_constant(spec.models)
    written = [
        report.write_table(
            out / "frame_log",
            report.frame_header(spec.n),
            report.frame_rows(metrics),
            spec.fmt,
            meta,
        ),
        report.write_json(
            out / "run_summary.json",
            report.run_summary(metrics, diag.slope, diag.stable, b, spec.v_g, meta),
        ),
    ]
    if spec.plots:
        written.append(report.plot_backlog(metrics, out / "simulate.png"))
    for path in written:
        print(path)
    if verbose:
        print(
            f"ybar={np.round(metrics.ybar, 6)} "
            f"g(ybar)={metrics.utility_of_ybar:.6f} "
            f"mean backlog={metrics.mean_backlog:.2f} slope={diag.slope:.3e}"
        )
    return EXIT_OK


def cmd_sweep(spec: ExperimentSpec, verbose: bool) -> int:
    out = _prepare_out(spec)
    meta = _meta(spec)
    g = spec.utility()
    region = build_region(
        spec.models, enum_cap=spec.enum_cap, pairs_only=spec.pairs_only
    )
    _, g_star, _ = solve_offline_optimum(region, g.value, g.gradient)
    b = b_constant(spec.models)
    rows: List[List[Any]] = []
    for v_g in spec.sweep_v_g:
        for seed in spec.sweep_seeds:
            cfg = RunConfig(
                models=spec.models,
                horizon=spec.horizon,
                seed=seed,
                utility=g,
                v_g=v_g,
                mode=spec.mode,
                warmup=spec.warmup,
                enum_cap=spec.enum_cap,
            )
            metrics = run_qrrnum(cfg)
            bound = g_star - b / v_g
            rows.append(
                [
                    v_g,
                    seed,
                    float(metrics.utility_of_ybar),
                    bound,
                    metrics.mean_backlog,
                ]
            )
            if verbose:
                print(
                    f"V_g={v_g:g} seed={seed}: g(ybar)="
                    f"{metrics.utility_of_ybar:.6f} bound={bound:.6f} "
                    f"backlog={metrics.mean_backlog:.2f}"
                )
    sweep_meta = dict(meta)
    sweep_meta["g_star"] = g_star
    sweep_meta["b_constant"] = b
    written = [
        report.write_table(
            out / "sweep",
            ["v_g", "seed", "g_ybar", "lower_bound", "mean_backlog"],
            rows,
            spec.fmt,
            sweep_meta,
        )
    ]
    if spec.plots:
        written.append(report.plot_sweep(rows, g_star, out / "sweep.png"))
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrrnum",
        description=(
            "Utility-optimal scheduling over Markov ON/OFF channels: "
            "throughput region, round robin verification, controller runs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("region", "compute the achievable throughput region"),
        ("verify", "Monte Carlo check of the round robin rate formulas"),
        ("simulate", "one controller run with per-frame logging"),
        ("sweep", "controller runs across a V_g grid vs the offline optimum"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument(
            "--vg", type=str, default=None,
            help="comma-separated V_g values (one value for simulate)",
        )
        p.add_argument(
            "--mode",
            choices=("exhaustive", "symmetric_fast", "pairs_only"),
            default=None,
        )
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--no-plots", action="store_true")
        p.add_argument("--verbose", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    over: Dict[str, Any] = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.horizon is not None:
        over["horizon"] = args.horizon
    if args.vg is not None:
        try:
            values = [float(v) for v in args.vg.split(",") if v.strip()]
        except ValueError as e:
            raise ConfigError(f"--vg must be comma-separated numbers: {e}")
        if not values:
            raise ConfigError("--vg list is empty")
        over["vg_list"] = values
        if len(values) == 1:
            over["v_g"] = values[0]
    if args.mode is not None:
        over["mode"] = args.mode
    if args.out is not None:
        over["out_dir"] = str(args.out)
    if args.format is not None:
        over["fmt"] = args.format
    if args.no_plots:
        over["plots"] = False
    return over


_DISPATCH = {
    "region": cmd_region,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    assert args.command in COMMANDS
    try:
        spec = load_spec(args.config, args.command, _overrides(args))
        return _DISPATCH[args.command](spec, args.verbose)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FeasibilityError, AssertionError) as e:
        print(f"runtime assertion: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
