"""Command-line front end.

Subcommands:
  simulate   generate one synthetic voltage series to a file
  pilot      run the prior-predictive pilot study and print the tolerance
  infer      full SMC-ABC run; exports samples, trace, report, and figures
  stats      recompute the posterior report from exported samples
  gof        posterior-predictive goodness-of-fit curves and figure

Configuration comes from a flat key-value file; any key can be overridden
on the command line with ``--set key=value`` (repeatable) or the dedicated
flags below, which take precedence over the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .dataio import ObservedSeries, load_series, subsample, write_series
from .engine import pilot_threshold, run_smc_abc
from .model import ModelParams, State, strang_path
from .report import (
    PARAM_NAMES,
    gof_curves,
    load_population,
    posterior_stats,
)
from .summaries import structure_summary

logger = logging.getLogger(__name__)


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise SystemExit(f"error: {what} needs {n} comma-separated values")
    return [float(p) for p in parts]


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="flat key-value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--budget", type=int, help="override the simulation budget")
    parser.add_argument("--n-particles", type=int, help="override the population size")
    parser.add_argument("--summary", choices=["structure", "canonical"])
    parser.add_argument("--distance", choices=["iae", "iae_wasserstein", "weighted_euclidean"])
    parser.add_argument("--kernel", choices=["standard", "olcm"])
    parser.add_argument("--percentile", type=float)
    parser.add_argument("--pilot-size", type=int)
    parser.add_argument("--center", action="store_true", default=None,
                        help="mean-center observed and synthetic series")


def _build_config(args) -> "config_mod.EngineConfig":
    overrides: dict[str, str] = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"error: --set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key, attr in [
        ("seed", "seed"), ("budget", "budget"), ("n_particles", "n_particles"),
        ("summary", "summary"), ("distance", "distance"), ("kernel", "kernel"),
        ("percentile", "percentile"), ("pilot_size", "pilot_size"),
    ]:
        value = getattr(args, attr)
        if value is not None:
            overrides[key] = str(value)
    if args.center is not None:
        overrides["center"] = "true"
    return config_mod.load_engine_config(args.config, overrides)


def _load_observed(args, cfg) -> ObservedSeries:
    series = load_series(args.data, column=args.column, obs_step=cfg.obs_step,
                         center=False)
    return series


def _cmd_simulate(args) -> int:
    theta = ModelParams(*_parse_floats(args.theta, 4, "--theta"))
    x0 = _parse_floats(args.x0, 2, "--x0")
    n = int(round(args.horizon / args.step))
    rng = np.random.default_rng(args.seed)
    traj = strang_path(theta, State(*x0), args.step, n, rng)
    series = ObservedSeries(values=traj.v_values, obs_step=args.step,
                            source=f"simulated(seed={args.seed})")
    if args.obs_step is not None:
        factor = args.obs_step / args.step
        if abs(factor - round(factor)) > 1e-9:
            raise SystemExit("error: --obs-step must be an integer multiple of --step")
        series = subsample(series, int(round(factor)))
    write_series(args.out, series)
    print(f"wrote {len(series)} values at obs_step {series.obs_step} to {args.out}")
    return 0


def _cmd_pilot(args) -> int:
    cfg = _build_config(args)
    observed = _load_observed(args, cfg)
    result = pilot_threshold(cfg, observed)
    print(f"pilot simulations: {result.nsim} (kappa redraws: {result.redraws})")
    print(f"initial threshold: {result.threshold!r}")
    if result.canonical_weights is not None:
        print("canonical weights: "
              + ", ".join(repr(float(v)) for v in result.canonical_weights))
        if args.out is not None:
            with open(args.out, "w") as fh:
                fh.write(f"# seed = {cfg.seed}\n")
                for v in result.canonical_weights:
                    fh.write(f"{float(v)!r}\n")
            print(f"wrote canonical weights to {args.out}")
    return 0


def _cmd_infer(args) -> int:
    from .report import export_results

    cfg = _build_config(args)
    observed = _load_observed(args, cfg)
    pop, trace = run_smc_abc(cfg, observed)
    out_dir = Path(args.out_dir)
    files = export_results(pop, trace, cfg, out_dir)
    report = posterior_stats(pop)
    if not args.no_figures:
        from .plots import render_posterior_figure, render_trace_figure

        render_posterior_figure(pop, out_dir / "posterior.png")
        render_trace_figure(trace, out_dir / "trace.png")
        files["posterior_figure"] = out_dir / "posterior.png"
        files["trace_figure"] = out_dir / "trace.png"
    print(f"finished after {pop.iteration} iterations, "
          f"{trace.records[-1].cumulative_nsim} simulations")
    for i, name in enumerate(PARAM_NAMES):
        print(f"{name}: mean {report.means[i]:.4g} sd {report.sds[i]:.4g} "
              f"90% CI [{report.ci_low[i]:.4g}, {report.ci_high[i]:.4g}]")
    print("files: " + ", ".join(str(p) for p in files.values()))
    return 0


def _cmd_stats(args) -> int:
    pop = load_population(args.samples)
    report = posterior_stats(pop)
    sys.stdout.write(report.format())
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "posterior_report.txt", "w") as fh:
            fh.write(report.format())
        if not args.no_figures:
            from .plots import render_posterior_figure

            render_posterior_figure(pop, out_dir / "posterior.png")
    return 0


def _cmd_gof(args) -> int:
    cfg = _build_config(args)
    pop = load_population(args.samples)
    rng = np.random.default_rng(cfg.seed if args.gof_seed is None else args.gof_seed)
    out_dir = Path(args.out_dir)
    result = gof_curves(pop, cfg, args.draws, rng, out_dir)
    observed_summary = None
    if args.data is not None:
        observed = _load_observed(args, cfg)
        values = observed.values
        if cfg.center:
            values = values - values.mean()
        observed_summary = structure_summary(values)
    if not args.no_figures:
        from .plots import render_gof_figure

        render_gof_figure(result, out_dir / "gof.png", observed_summary)
        result.files["figure"] = out_dir / "gof.png"
    print(f"gof curves for {args.draws} draws ({result.skipped} skipped)")
    print("files: " + ", ".join(str(p) for p in result.files.values()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhnabc",
        description="SMC-ABC inference for the stochastic FitzHugh-Nagumo model",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log per-iteration progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic voltage series")
    p.add_argument("--theta", required=True, help="epsilon,gamma,beta,sigma")
    p.add_argument("--step", type=float, required=True, help="simulation step size")
    p.add_argument("--horizon", type=float, required=True, help="time horizon")
    p.add_argument("--obs-step", type=float, help="subsample to this step before writing")
    p.add_argument("--x0", default="0,0", help="initial state v,u")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("pilot", help="pilot study: initial threshold (and weights)")
    _add_config_arguments(p)
    p.add_argument("--data", required=True, help="observed series file")
    p.add_argument("--column", default=0, type=_column, help="column index or name")
    p.add_argument("--out", help="write canonical weights to this file")
    p.set_defaults(func=_cmd_pilot)

    p = sub.add_parser("infer", help="full SMC-ABC run")
    _add_config_arguments(p)
    p.add_argument("--data", required=True)
    p.add_argument("--column", default=0, type=_column)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("stats", help="posterior report from exported samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("gof", help="posterior-predictive goodness-of-fit curves")
    _add_config_arguments(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--data", help="observed series to overlay on the figure")
    p.add_argument("--column", default=0, type=_column)
    p.add_argument("--gof-seed", type=int, help="seed for the resampling stream")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_gof)
    return parser


def _column(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
