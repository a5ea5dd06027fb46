"""Batch command-line front-end.

Subcommands: ``simulate`` (seeded synthetic datasets), ``run`` (sampler
grids with efficiency reports), ``enumerate`` (exact small-p posterior),
``compare`` (PIP agreement gate).  Exit codes: 0 success, 1
acceptance-threshold failure, 2 usage error, 3 runtime/data error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import data_io, diagnostics, oracle
from .core_model import G_MODE_BRIC, G_MODE_HYPER, PriorConfig, g_bric
from .errors import AdbmaError, TooFewColumns
from .samplers import AdaptationConfig, ChainConfig, run_chain

PRESETS = {
    "desk": dict(iterations=200_000, burn_in=10_000, thin=10,
                 block_len=1000, start_block=10),
    "paper": dict(iterations=2_000_000, burn_in=100_000, thin=10,
                  block_len=1000, start_block=10),
}

# token -> (sampler kind, measure, display name, baseline token)
METHODS = {
    "mc3": ("mc3", "none", "MC3", None),
    "admc3-s2": ("mc3", "s2", "ADMC3(s2)", "mc3"),
    "admc3-m": ("mc3", "m", "ADMC3(m)", "mc3"),
    "gibbs": ("gibbs", "none", "Gibbs", None),
    "adgibbs-s2": ("gibbs", "s2", "ADGibbs(s2)", "gibbs"),
    "adgibbs-m": ("gibbs", "m", "ADGibbs(m)", "gibbs"),
}

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _add_dataset_flags(sub):
    sub.add_argument("--csv", default=None, help="dataset CSV path")
    sub.add_argument("--response", default="y", help="response column name")
    sub.add_argument("--n", type=int, default=None, help="simulated sample size")
    sub.add_argument("--p", type=int, default=None, help="simulated variable count")
    sub.add_argument("--seed", type=int, default=1, help="data-generation seed")


def _add_prior_flags(sub):
    sub.add_argument("--kappa", type=float, default=7.0,
                     help="prior mean model size")
    sub.add_argument("--g-mode", choices=["bric", "hyper"], default="bric")
    sub.add_argument("--a", type=float, default=3.0,
                     help="hyper-g/n prior parameter (a > 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adbma",
        description="Adaptive MC3/Gibbs samplers for Bayesian model averaging",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="write a seeded synthetic dataset")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--out", required=True, help="output directory")

    run = subs.add_parser("run", help="run a sampler grid and write reports")
    _add_dataset_flags(run)
    _add_prior_flags(run)
    run.add_argument("--grid", default="mc3,admc3-s2",
                     help="comma-separated method tokens: " + ",".join(METHODS))
    run.add_argument("--preset", choices=["desk", "paper"], default=None)
    run.add_argument("--iterations", type=int, default=None)
    run.add_argument("--burn-in", type=int, default=None)
    run.add_argument("--thin", type=int, default=None)
    run.add_argument("--block-len", type=int, default=None)
    run.add_argument("--start-block", type=int, default=None)
    run.add_argument("--epsilon", choices=["fixed", "decreasing"], default="fixed",
                     help="epsilon schedule for the adaptive mixture")
    run.add_argument("--seeds", default="1",
                     help="comma-separated chain seeds (replications)")
    run.add_argument("--jobs", type=int, default=1,
                     help="concurrent chains")
    run.add_argument("--out", required=True)
    run.add_argument("--config", default=None,
                     help="JSON file of flag defaults; explicit flags win")

    enum = subs.add_parser("enumerate", help="exact posterior for small p")
    _add_dataset_flags(enum)
    _add_prior_flags(enum)
    enum.add_argument("--g", type=float, default=None,
                      help="condition on this g (default: bric value)")
    enum.add_argument("--grid-points", type=int, default=100,
                      help="quadrature grid size under --g-mode hyper")
    enum.add_argument("--top", type=int, default=10, help="top models to report")
    enum.add_argument("--out", required=True)

    cmp_ = subs.add_parser("compare", help="join PIP tables and gate agreement")
    cmp_.add_argument("--pips", nargs="+", required=True,
                      help="PIP table CSVs to join")
    cmp_.add_argument("--threshold", type=float, default=0.02,
                      help="max allowed PIP disagreement")
    cmp_.add_argument("--out", required=True)
    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    """Overlay --config JSON values under explicitly supplied flags."""
    if getattr(args, "config", None) is None:
        return args
    with open(args.config) as fh:
        config = json.load(fh)
    supplied = {tok.split("=")[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"config key {key!r} is not a known flag")
        if dest not in supplied:
            setattr(args, dest, value)
    return args


def _resolve_dataset(args):
    if args.csv is not None:
        return data_io.load_csv(args.csv, args.response), None
    if args.n is None or args.p is None:
        raise UsageError("provide either --csv or both --n and --p")
    dataset, gamma_star = data_io.simulate_dataset(args.n, args.p, args.seed)
    return dataset, gamma_star


def _build_prior(args, p: int) -> PriorConfig:
    g_mode = G_MODE_BRIC if args.g_mode == "bric" else G_MODE_HYPER
    return PriorConfig.from_kappa(p, args.kappa, g_mode=g_mode, a=args.a)


def _chain_settings(args) -> dict:
    settings = dict(PRESETS["desk"]) if args.preset is None else dict(PRESETS[args.preset])
    for key in ("iterations", "burn_in", "thin", "block_len", "start_block"):
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _parse_grid(grid: str) -> list[str]:
    tokens = [tok.strip() for tok in grid.split(",") if tok.strip()]
    if not tokens:
        raise UsageError("--grid must name at least one method")
    for tok in tokens:
        if tok not in METHODS:
            raise UsageError(f"unknown method {tok!r}; choose from "
                             + ", ".join(METHODS))
    for tok in tokens:
        baseline = METHODS[tok][3]
        if baseline is not None and baseline not in tokens:
            raise UsageError(
                f"adaptive method {tok!r} needs its baseline {baseline!r} in the grid")
    return tokens


def _parse_seeds(seeds: str) -> list[int]:
    try:
        values = [int(tok) for tok in str(seeds).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad --seeds value {seeds!r}") from None
    if not values:
        raise UsageError("--seeds must name at least one seed")
    return values


def _run_cell(task):
    cfg, dataset, prior = task
    return run_chain(cfg, dataset, prior)


def cmd_simulate(args) -> int:
    try:
        dataset, gamma_star = data_io.simulate_dataset(args.n, args.p, args.seed)
    except (TooFewColumns, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, f"dataset_seed{args.seed}.csv")
    truth_path = os.path.join(args.out, f"truth_seed{args.seed}.csv")
    data_io.write_dataset(dataset, data_path)
    data_io.write_truth(gamma_star, truth_path, list(dataset.columns))
    print(data_path)
    print(truth_path)
    return EXIT_OK


def cmd_run(args) -> int:
    tokens = _parse_grid(args.grid)
    seeds = _parse_seeds(args.seeds)
    dataset, _ = _resolve_dataset(args)
    prior = _build_prior(args, dataset.p)
    settings = _chain_settings(args)

    tasks = []
    for tok in tokens:
        kind, measure, _, _ = METHODS[tok]
        adaptation = AdaptationConfig(
            measure=measure,
            block_len=settings["block_len"],
            start_block=settings["start_block"],
            epsilon_schedule=args.epsilon,
        )
        for seed in seeds:
            cfg = ChainConfig(
                iterations=settings["iterations"],
                burn_in=settings["burn_in"],
                thin=settings["thin"],
                seed=seed,
                sampler_kind=kind,
                adaptation=adaptation,
            )
            tasks.append((cfg, dataset, prior))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_run_cell, tasks))
    else:
        outputs = [_run_cell(task) for task in tasks]
    by_cell = {}
    for (tok, seed), output in zip(
            ((tok, seed) for tok in tokens for seed in seeds), outputs):
        by_cell[(tok, seed)] = output

    # per-seed metrics, then mean and standard error across replications
    metrics = {}
    for tok in tokens:
        rows = []
        for seed in seeds:
            output = by_cell[(tok, seed)]
            sample_size, _, _ = diagnostics.ess(output)
            rows.append(dict(
                ess=sample_size,
                cpu_seconds=output.cpu_seconds,
                er=sample_size / output.cpu_seconds,
                accept_rate=output.model_accept_rate,
            ))
        metrics[tok] = rows
    for tok in tokens:
        baseline = METHODS[tok][3]
        for k, seed in enumerate(seeds):
            if baseline is None:
                metrics[tok][k]["re"] = None
            else:
                metrics[tok][k]["re"] = (
                    metrics[tok][k]["er"] / metrics[baseline][k]["er"])

    def _mean(values):
        vals = [v for v in values if v is not None]
        return float(np.mean(vals)) if vals else None

    def _se(values):
        vals = [v for v in values if v is not None]
        if len(vals) < 2:
            return None
        return float(np.std(vals, ddof=1) / math.sqrt(len(vals)))

    report = diagnostics.EfficiencyReport()
    se_rows = {} if len(seeds) > 1 else None
    for tok in tokens:
        name = METHODS[tok][2]
        rows = metrics[tok]
        report.rows.append(diagnostics.ReportRow(
            method=name,
            ess=_mean([r["ess"] for r in rows]),
            cpu_seconds=_mean([r["cpu_seconds"] for r in rows]),
            er=_mean([r["er"] for r in rows]),
            re=_mean([r["re"] for r in rows]),
            accept_rate=_mean([r["accept_rate"] for r in rows]),
        ))
        if se_rows is not None:
            se_rows[name] = {field: _se([r[field] for r in rows])
                             for field in ("ess", "cpu_seconds", "er", "re",
                                           "accept_rate")}

    os.makedirs(args.out, exist_ok=True)
    data_io.write_report(report, os.path.join(args.out, "report.csv"), se_rows)

    variables = (list(dataset.columns) if dataset.columns
                 else data_io.default_columns(dataset.p))
    pip_columns = []
    for tok in tokens:
        stack = np.stack([diagnostics.pip(by_cell[(tok, seed)]) for seed in seeds])
        pip_columns.append((METHODS[tok][2], stack.mean(axis=0)))
    data_io.write_pip_table(variables, pip_columns,
                            os.path.join(args.out, "pips.csv"))

    for tok in tokens:
        if METHODS[tok][1] != "none":
            data_io.write_traces(by_cell[(tok, seeds[0])],
                                 os.path.join(args.out, f"dtrace_{tok}.csv"))

    for row in report.rows:
        accept = "" if row.accept_rate is None else f"  accept={row.accept_rate:.3f}"
        re_txt = "" if row.re is None else f"  RE={row.re:.2f}"
        print(f"{row.method}: ESS={row.ess:.1f}  CPU={row.cpu_seconds:.2f}s"
              f"  ER={row.er:.2f}{re_txt}{accept}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    dataset, _ = _resolve_dataset(args)
    prior = _build_prior(args, dataset.p)
    variables = (list(dataset.columns) if dataset.columns
                 else data_io.default_columns(dataset.p))
    os.makedirs(args.out, exist_ok=True)

    if prior.g_mode == G_MODE_HYPER and args.g is None:
        grid, weights = oracle.hyper_g_grid(dataset.n, prior.a, num=args.grid_points)
        pips = oracle.exact_pip_given_g_grid(dataset, prior, grid, weights)
        model_probs = _grid_model_probs(dataset, prior, grid, weights)
    else:
        g = args.g if args.g is not None else g_bric(dataset.n, dataset.p)
        exact = oracle.enumerate_posterior(dataset, prior, g)
        pips = exact.pips
        model_probs = exact.probs()

    order = np.argsort(-pips, kind="stable")
    with open(os.path.join(args.out, "exact_pips.csv"), "w", newline="") as fh:
        fh.write("variable,pip_exact\n")
        for i in order:
            fh.write(f"{variables[i]},{pips[i]:.17g}\n")

    top = np.argsort(-model_probs, kind="stable")[:args.top]
    with open(os.path.join(args.out, "top_models.csv"), "w", newline="") as fh:
        fh.write("rank,model,size,prob\n")
        for rank, m in enumerate(top, start=1):
            gamma = oracle.model_from_index(int(m), dataset.p).gamma
            bits = "".join(str(int(b)) for b in gamma)
            fh.write(f"{rank},{bits},{int(gamma.sum())},{model_probs[m]:.17g}\n")
    print(os.path.join(args.out, "exact_pips.csv"))
    print(os.path.join(args.out, "top_models.csv"))
    return EXIT_OK


def _grid_model_probs(dataset, prior, grid, weights) -> np.ndarray:
    """Marginal model probabilities under the g quadrature."""
    from dataclasses import replace

    from scipy.special import logsumexp

    slice_prior = replace(prior, g_mode=G_MODE_BRIC)
    slices = [oracle.enumerate_posterior(dataset, slice_prior, gk) for gk in grid]
    log_w = np.log(weights) + np.array([s.log_evidence for s in slices])
    omega = np.exp(log_w - logsumexp(log_w))
    probs = np.zeros(1 << dataset.p)
    for wk, s in zip(omega, slices):
        probs += wk * s.probs()
    return probs


def cmd_compare(args) -> int:
    tables = [data_io.read_pip_table(path) for path in args.pips]
    base_vars = tables[0][0]
    base_set = set(base_vars)
    for path, (variables, _) in zip(args.pips, tables):
        if set(variables) != base_set:
            raise AdbmaError(f"{path}: variable set does not match {args.pips[0]}")

    merged: dict[str, np.ndarray] = {}
    for (variables, columns) in tables:
        index = {v: i for i, v in enumerate(variables)}
        align = np.array([index[v] for v in base_vars])
        for method, vec in columns.items():
            if method in merged:
                raise AdbmaError(f"duplicate method column {method!r} across inputs")
            merged[method] = vec[align]

    os.makedirs(args.out, exist_ok=True)
    long_path = os.path.join(args.out, "compare_long.csv")
    with open(long_path, "w", newline="") as fh:
        fh.write("variable,method,pip,log_pip\n")
        for method, vec in merged.items():
            for v, value in zip(base_vars, vec):
                log_txt = f"{math.log(value):.17g}" if value > 0 else ""
                fh.write(f"{v},{method},{value:.17g},{log_txt}\n")

    methods = list(merged)
    worst = 0.0
    for i in range(len(methods)):
        for j in range(i + 1, len(methods)):
            gap = float(np.max(np.abs(merged[methods[i]] - merged[methods[j]])))
            worst = max(worst, gap)
            print(f"max |pip gap| {methods[i]} vs {methods[j]}: {gap:.6f}")
    print(long_path)
    if worst > args.threshold:
        print(f"FAIL: max gap {worst:.6f} exceeds threshold {args.threshold}",
              file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, argv)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "enumerate":
            return cmd_enumerate(args)
        if args.command == "compare":
            return cmd_compare(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TooFewColumns as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AdbmaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
