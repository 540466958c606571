"""Command-line front end: experiment batches, gradient checks, result tables.

Commands
--------
run                 run an experiment grid from a JSON config plus flag
                    overrides; writes records.csv, timings.csv and
                    summary.json (plus optional SVG charts)
validate-gradients  compare analytic likelihood gradients against
                    central finite differences across trend kinds and
                    dimensions
table               render a records.csv as a benchmarks-by-methods
                    NMSE table (stdout and markdown)

Exit codes: 0 success, 1 runtime failure or tolerance breach, 2 usage
or config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, _threads, kernel
from .benchmarks import registry
from .distributions import Marginal
from .experiment import (METHOD_TOKENS, ExperimentSettings, run_experiment,
                         summarize)
from .gp import lml_grad_universal, lml_universal
from .input_model import JointInputModel
from .kernel import HyperParams
from .trend import TrendSpec, basis_eval

RECORD_COLUMNS = ("benchmark", "method", "rep", "seed", "grad_mode",
                  "nmse", "n", "n_val", "restarts")
TIMING_COLUMNS = ("benchmark", "method", "rep", "seed", "grad_mode",
                  "fit_seconds", "n", "n_val", "restarts")

_DEFAULT_CONFIG = {
    "benchmarks": "all",
    "methods": "all",
    "n": None,
    "n_val": 1000,
    "reps": 10,
    "restarts": 20,
    "seed": 0,
    "grad_mode": "analytic",
    "lhs_budget": 10_000,
    "selection": "validation",
    "max_iters": 200,
    "output_dir": ".",
    "plots": False,
    "jobs": 1,
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _parse_id_list(value, all_values, what):
    if value == "all":
        return list(all_values)
    if isinstance(value, str):
        items = [v.strip() for v in value.split(",") if v.strip()]
    else:
        items = list(value)
    out = []
    for item in items:
        key = int(item) if what == "benchmark" else str(item)
        if key not in all_values:
            raise ConfigError(f"unknown {what} {item!r}")
        out.append(key)
    if not out:
        raise ConfigError(f"empty {what} selection")
    return out


def _resolve_config(path, overrides):
    config = dict(_DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(loaded) - set(config)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    env_dir = os.environ.get("UQKRIG_OUTPUT_DIR")
    if env_dir:
        config["output_dir"] = env_dir
    for key, value in overrides.items():
        if value is not None:
            config[key] = value

    config["benchmarks"] = _parse_id_list(config["benchmarks"], range(1, 10),
                                          "benchmark")
    config["methods"] = _parse_id_list(config["methods"], METHOD_TOKENS, "method")
    if config["grad_mode"] not in ("analytic", "fd", "both"):
        raise ConfigError("grad_mode must be analytic, fd or both")
    if config["selection"] not in ("validation", "lml"):
        raise ConfigError("selection must be validation or lml")
    for key in ("n_val", "reps", "restarts", "lhs_budget", "jobs", "max_iters"):
        config[key] = int(config[key])
        if config[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if config["n"] is not None:
        config["n"] = int(config["n"])
    config["seed"] = int(config["seed"])
    config["plots"] = bool(config["plots"])
    return config


_NON_RESULT_KEYS = ("output_dir", "plots", "jobs")


def _config_hash(config) -> str:
    relevant = {k: v for k, v in config.items() if k not in _NON_RESULT_KEYS}
    return hashlib.sha256(
        json.dumps(relevant, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _run_cell(args):
    """One (benchmark, method, grad_mode) cell; used by worker processes."""
    bid, method, grad_mode, config = args
    bench = {b.id: b for b in registry()}[bid]
    settings = ExperimentSettings(
        n=config["n"], n_val=config["n_val"], reps=config["reps"],
        restarts=config["restarts"], grad_mode=grad_mode,
        lhs_budget=config["lhs_budget"], selection=config["selection"],
        max_iters=config["max_iters"])
    return run_experiment(bench, method, settings, config["seed"])


def _meta_lines(config):
    return [f"# uqkrig {__version__}",
            f"# master_seed={config['seed']}",
            f"# config_sha256={_config_hash(config)}",
            f"# jobs={config['jobs']}"]


def _write_csv(path, columns, rows, config):
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(config):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _record_sort_key(r):
    return (r.benchmark, METHOD_TOKENS.index(r.method), r.grad_mode, r.rep)


def _format_value(v):
    return repr(v) if isinstance(v, float) else str(v)


def cmd_run(args) -> int:
    overrides = {
        "benchmarks": args.benchmarks, "methods": args.methods,
        "n": args.n, "n_val": args.n_val, "reps": args.reps,
        "restarts": args.restarts, "seed": args.seed,
        "grad_mode": args.grad_mode, "output_dir": args.output_dir,
        "plots": True if args.plots else None, "jobs": args.jobs,
        "lhs_budget": args.lhs_budget,
    }
    try:
        config = _resolve_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    arms = ["analytic", "fd"] if config["grad_mode"] == "both" else [config["grad_mode"]]
    cells = [(bid, method, arm, config)
             for bid in config["benchmarks"]
             for method in config["methods"]
             for arm in arms]

    records, failures = [], []
    if config["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=config["jobs"]) as pool:
            for recs, fails in pool.map(_run_cell, cells):
                records.extend(recs)
                failures.extend(fails)
    else:
        benches = {b.id: b for b in registry()}
        design_cache, validation_cache = {}, {}
        for bid, method, arm, _ in cells:
            settings = ExperimentSettings(
                n=config["n"], n_val=config["n_val"], reps=config["reps"],
                restarts=config["restarts"], grad_mode=arm,
                lhs_budget=config["lhs_budget"], selection=config["selection"],
                max_iters=config["max_iters"])
            print(f"running benchmark {bid} method {method} ({arm}) ...",
                  file=sys.stderr)
            recs, fails = run_experiment(benches[bid], method, settings,
                                         config["seed"],
                                         design_cache=design_cache,
                                         validation_cache=validation_cache)
            records.extend(recs)
            failures.extend(fails)

    for bid, method, rep, message in failures:
        print(f"failure: benchmark {bid} method {method} rep {rep}: {message}",
              file=sys.stderr)

    records.sort(key=_record_sort_key)
    outdir = config["output_dir"]
    os.makedirs(outdir, exist_ok=True)

    # records.csv holds only seed-deterministic columns so reruns are
    # byte-identical; wall-clock timings go to timings.csv
    _write_csv(os.path.join(outdir, "records.csv"), RECORD_COLUMNS,
               [[_format_value(getattr(r, c)) for c in RECORD_COLUMNS]
                for r in records], config)
    _write_csv(os.path.join(outdir, "timings.csv"), TIMING_COLUMNS,
               [[_format_value(getattr(r, c)) for c in TIMING_COLUMNS]
                for r in records], config)

    summary = {
        "meta": {"tool": "uqkrig", "version": __version__,
                 "master_seed": config["seed"],
                 "config": {k: v for k, v in sorted(config.items())},
                 "config_sha256": _config_hash(config)},
        "cells": summarize(records),
        "failures": [{"benchmark": b, "method": m, "rep": r, "message": msg}
                     for b, m, r, msg in failures],
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")

    if config["plots"]:
        _write_plots(summary["cells"], outdir, config)
    return 0 if not failures else 1


def _write_plots(cells, outdir, config):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stamp = f"uqkrig {__version__}  seed={config['seed']}  config={_config_hash(config)}"

    benchmarks = sorted({c["benchmark"] for c in cells})
    methods = [m for m in METHOD_TOKENS
               if any(c["method"] == m for c in cells)]
    by_key = {(c["benchmark"], c["method"], c["grad_mode"]): c for c in cells}
    modes = sorted({c["grad_mode"] for c in cells})

    fig, ax = plt.subplots(figsize=(10, 5))
    width = 0.8 / max(1, len(methods))
    for k, method in enumerate(methods):
        xs, ys, es = [], [], []
        for i, bid in enumerate(benchmarks):
            cell = by_key.get((bid, method, modes[0]))
            if cell is None:
                continue
            xs.append(i + (k - (len(methods) - 1) / 2) * width)
            ys.append(cell["nmse_mean"])
            es.append(cell["nmse_std"])
        ax.errorbar(xs, ys, yerr=es, fmt="o", ms=4, capsize=2, label=method)
    ax.set_yscale("log")
    ax.set_xticks(range(len(benchmarks)))
    ax.set_xticklabels([str(b) for b in benchmarks])
    ax.set_xlabel("benchmark")
    ax.set_ylabel("NMSE")
    ax.legend(ncol=3, fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title(stamp, fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "nmse.svg"))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(10, 5))
    for k, method in enumerate(methods):
        for mode in modes:
            xs, ys, es = [], [], []
            for i, bid in enumerate(benchmarks):
                cell = by_key.get((bid, method, mode))
                if cell is None:
                    continue
                xs.append(i + (k - (len(methods) - 1) / 2) * width)
                ys.append(cell["fit_seconds_mean"])
                es.append(cell["fit_seconds_std"])
            filled = "none" if mode == "analytic" else None
            ax.errorbar(xs, ys, yerr=es, fmt="o", ms=4, capsize=2,
                        markerfacecolor=filled,
                        label=f"{method} ({mode})" if len(modes) > 1 else method)
    ax.set_yscale("log")
    ax.set_xticks(range(len(benchmarks)))
    ax.set_xticklabels([str(b) for b in benchmarks])
    ax.set_xlabel("benchmark")
    ax.set_ylabel("fit wall time [s]")
    ax.legend(ncol=3, fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title(stamp, fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "runtime.svg"))
    plt.close(fig)


# ---------------------------------------------------------------------------
# validate-gradients
# ---------------------------------------------------------------------------

def _synthetic_model(p, rng):
    """A joint model with mixed marginal kinds and one mild correlation.

    The marginals are centered or widely spread so that quadratic
    monomials of the physical variables stay well conditioned (a
    narrow marginal far from zero makes x^2 nearly affine in x, which
    would poison the trend normal matrix for this check).
    """
    pool = [("normal", 0.0, 1.0), ("lognormal", 1.0, 0.8), ("uniform", -1.0, 1.0),
            ("gumbel", 1.0, 1.0), ("weibull", 1.0, 0.8)]
    marginals = [Marginal.from_moments(*pool[i % len(pool)]) for i in range(p)]
    corr = np.eye(p)
    if p >= 2:
        corr[0, 1] = corr[1, 0] = 0.3
    return JointInputModel.build(marginals, corr)


def _synthetic_observations(U, rng):
    return (np.sin(2.0 * math.pi * U[:, 0]) + (U ** 2).sum(axis=1)
            + 0.1 * rng.standard_normal(U.shape[0]))


def _draw_hp(p, y, rng):
    # scales matched to the data so the likelihood magnitude stays
    # moderate and the finite-difference probe is not round-off bound
    var_y = float(np.var(y))
    amp = var_y * math.exp(rng.uniform(-1.0, 1.0))
    ls = np.exp(rng.uniform(math.log(0.2), math.log(2.0), p))
    noise = math.sqrt(var_y) * 10.0 ** rng.uniform(-2.0, -1.0)
    return HyperParams.from_values(amp, ls, noise)


def gradient_check_sweep(dims, seed, n_draws=5, fd_step=1e-4):
    """Max relative analytic-vs-central-FD gradient error per (kind, p).

    The default step is near-optimal for central differences through
    the likelihood factorizations (truncation and round-off balance
    around 1e-4 in log-space).  Components are compared relative to
    their own magnitude with a floor at one percent of the gradient
    max-norm, since the finite-difference probe cannot resolve
    components that are many orders below the likelihood scale.
    """
    _threads.ensure_reference_blas_threads()
    results = []
    for p in dims:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), p]))
        model = _synthetic_model(p, rng)
        U = rng.random((10 * p, p))
        y = _synthetic_observations(U, rng)
        for token in METHOD_TOKENS:
            trend = TrendSpec.from_token(token, p)
            H = basis_eval(trend, U, model)
            worst = 0.0
            for _ in range(n_draws):
                hp = _draw_hp(p, y, rng)
                _, grad = lml_grad_universal(hp, U, y, H, jitter_rel=1e-10)
                vec = hp.to_vector()
                fd = np.empty_like(vec)
                for i in range(len(vec)):
                    vp, vm = vec.copy(), vec.copy()
                    vp[i] += fd_step
                    vm[i] -= fd_step
                    fd[i] = (lml_universal(HyperParams.from_vector(vp), U, y, H,
                                           jitter_rel=1e-10)
                             - lml_universal(HyperParams.from_vector(vm), U, y, H,
                                             jitter_rel=1e-10)) / (2.0 * fd_step)
                scale = np.maximum(np.maximum(np.abs(grad), np.abs(fd)),
                                   1e-2 * max(1.0, float(np.max(np.abs(grad)))))
                worst = max(worst, float(np.max(np.abs(grad - fd) / scale)))
            results.append((token, p, worst))
    return results


def cmd_validate_gradients(args) -> int:
    dims = [int(d) for d in args.dims.split(",") if d.strip()]
    if not dims:
        print("error: empty dimension list", file=sys.stderr)
        return 2
    if args.inject_sign_error:
        kernel._FLIP_AMPLITUDE_GRAD = True
    try:
        results = gradient_check_sweep(dims, args.seed, fd_step=args.fd_step)
    finally:
        kernel._FLIP_AMPLITUDE_GRAD = False
    ok = True
    for token, p, err in results:
        status = "ok" if err < args.tol else "FAIL"
        ok &= err < args.tol
        print(f"{token:>12s}  p={p:<3d} max rel err {err:.3e}  {status}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------

def _read_records_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def cmd_table(args) -> int:
    try:
        rows = _read_records_csv(args.records)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not rows:
        print("error: no data rows in records file", file=sys.stderr)
        return 2
    required = {"benchmark", "method", "nmse"}
    if not required <= set(rows[0]):
        print(f"error: records file lacks columns {sorted(required - set(rows[0]))}",
              file=sys.stderr)
        return 2

    sums = {}
    for row in rows:
        key = (int(row["benchmark"]), row["method"])
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + float(row["nmse"]), count + 1)

    benchmarks = sorted({k[0] for k in sums})
    header = ["benchmark"] + list(METHOD_TOKENS)
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    for bid in benchmarks:
        cells = [str(bid)]
        for method in METHOD_TOKENS:
            if (bid, method) in sums:
                total, count = sums[(bid, method)]
                cells.append(f"{total / count:.2E}")
            else:
                cells.append("")
        lines.append("| " + " | ".join(cells) + " |")
    text = "\n".join(lines)
    print(text)
    out = args.output or os.path.join(os.path.dirname(os.path.abspath(args.records)),
                                      "nmse_table.md")
    with open(out, "w") as fh:
        fh.write(text + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(prog="uqkrig",
                                     description="kriging benchmark experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--benchmarks", help='comma-separated ids or "all"')
    run.add_argument("--methods", help='comma-separated trend tokens or "all"')
    run.add_argument("--n", type=int, help="training points (default 10 x dim)")
    run.add_argument("--n-val", dest="n_val", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--restarts", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--grad-mode", dest="grad_mode",
                     choices=("analytic", "fd", "both"))
    run.add_argument("--lhs-budget", dest="lhs_budget", type=int)
    run.add_argument("--output-dir", dest="output_dir")
    run.add_argument("--plots", action="store_true", default=False)
    run.add_argument("--jobs", type=int)
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate-gradients",
                         help="compare analytic and finite-difference gradients")
    val.add_argument("--dims", default="1,3,8")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--tol", type=float, default=1e-5)
    val.add_argument("--fd-step", dest="fd_step", type=float, default=1e-4)
    val.add_argument("--inject-sign-error", action="store_true",
                     help=argparse.SUPPRESS)
    val.set_defaults(func=cmd_validate_gradients)

    table = sub.add_parser("table", help="render a records.csv as an NMSE table")
    table.add_argument("records")
    table.add_argument("--output", help="markdown output path")
    table.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
