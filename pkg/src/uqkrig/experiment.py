"""Validation metrics and the benchmark experiment protocol.

One experiment cell is (benchmark, trend method, gradient mode).  Each
repetition draws a fresh maximin Latin hypercube, evaluates the
benchmark at the inverse-transformed training points, runs the
configured number of optimizer restarts, and scores the selected model
on a Monte Carlo validation set of physical-space samples.  Among the
restart optima, the model with the lowest validation error is selected
by default (an LML-based selection is available for comparison).

Seeds derive hierarchically from a master seed through (benchmark,
repetition, stream) keys, so the analytic and finite-difference arms of
a cell share designs, validation sets and restart initial points, and a
batch is fully deterministic given the master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .design import maximin_lhs
from .kernel import HyperParams
from .optimize import OptimizerConfig
from .trend import TrendSpec

__all__ = ["ExperimentSettings", "ExperimentRecord", "nmse_values", "nmse",
           "run_experiment", "summarize", "METHOD_TOKENS"]

METHOD_TOKENS = ("zero", "constant", "linear", "quadratic", "t-linear", "t-quadratic")

# per-repetition stream tags for hierarchical seeding
_STREAM_DESIGN = 0
_STREAM_VALIDATION = 1
_STREAM_FIT = 2


@dataclass(frozen=True)
class ExperimentSettings:
    """Protocol parameters; the defaults reproduce the benchmark study."""

    n: int | None = None          # training points, None means 10 * dimension
    n_val: int = 1000
    reps: int = 10
    restarts: int = 20
    grad_mode: str = "analytic"   # "analytic" or "fd"
    lhs_budget: int = 10_000
    selection: str = "validation"  # restart selection rule, or "lml"
    max_iters: int = 200

    def resolve_n(self, dimension: int) -> int:
        return self.n if self.n is not None else 10 * dimension


@dataclass
class ExperimentRecord:
    benchmark: int
    method: str
    rep: int
    seed: int
    grad_mode: str
    nmse: float
    fit_seconds: float
    n: int
    n_val: int
    restarts: int
    diagnostics: object = field(default=None, repr=False)


def nmse_values(y_true, y_pred) -> float:
    """Normalized mean squared error of predictions on a validation set.

    The squared error uses the 1/n_val mean while the normalizing
    sample variance uses the 1/(n_val - 1) estimator, so a constant
    mean predictor scores (n_val - 1)/n_val.
    """
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    n = len(y_true)
    if n < 2:
        raise ValueError("validation needs at least 2 points")
    var = float(np.var(y_true, ddof=1))
    if var <= 0.0:
        raise ValueError("validation outputs have zero variance")
    mse = float(np.mean((y_true - y_pred) ** 2))
    return mse / var


def nmse(fitted, val_U, val_y) -> float:
    """NMSE of a fitted model's posterior mean on validation points."""
    mean, _ = gp.predict(fitted, val_U)
    return nmse_values(val_y, mean)


def _rng(master_seed, bench_id, rep, stream):
    return np.random.default_rng(
        np.random.SeedSequence([int(master_seed), int(bench_id), int(rep), stream]))


def _rep_seed(master_seed, bench_id, rep) -> int:
    return int(np.random.SeedSequence(
        [int(master_seed), int(bench_id), int(rep)]).generate_state(1)[0])


def _select_model(diag, U, y, trend, model, val_U, val_y, rule):
    """Apply the restart selection rule; returns (fitted, nmse value)."""
    candidates = []
    for r in diag.restarts:
        if r.params is None or not math.isfinite(r.value):
            continue
        hp = HyperParams.from_vector(r.params)
        try:
            fitted = gp.build_fitted(hp, U, y, trend, model)
            err = nmse(fitted, val_U, val_y)
        except Exception:
            continue
        candidates.append((r.index, fitted, err))
    if not candidates:
        raise RuntimeError("no restart produced a usable model")
    if rule == "lml":
        best = min(candidates, key=lambda c: (-c[1].lml, c[0]))
    else:
        best = min(candidates, key=lambda c: (c[2], c[0]))
    return best[1], best[2]


def run_experiment(benchmark, method, settings: ExperimentSettings, master_seed,
                   design_cache=None, validation_cache=None):
    """Run all repetitions of one experiment cell.

    Returns ``(records, failures)``; a repetition that fails (for
    example through a factorization error at every restart) is reported
    in ``failures`` as (benchmark, method, rep, message) without
    aborting the batch.  The optional caches let callers share designs
    and validation sets across methods; both are keyed purely by
    deterministic quantities, so caching never changes results.
    """
    if method not in METHOD_TOKENS:
        raise ValueError(f"unknown method token {method!r}")
    if settings.grad_mode not in ("analytic", "fd"):
        raise ValueError(f"unknown gradient mode {settings.grad_mode!r}")
    model = benchmark.input_model
    p = benchmark.dimension
    n = settings.resolve_n(p)
    trend = TrendSpec.from_token(method, p)

    records, failures = [], []
    for rep in range(settings.reps):
        try:
            key = (master_seed, benchmark.id, rep, n, settings.lhs_budget)
            if design_cache is not None and key in design_cache:
                train_u = design_cache[key]
            else:
                design = maximin_lhs(n, p, _rng(master_seed, benchmark.id, rep,
                                                _STREAM_DESIGN),
                                     budget=settings.lhs_budget,
                                     seed=_rep_seed(master_seed, benchmark.id, rep))
                train_u = design.points
                if design_cache is not None:
                    design_cache[key] = train_u
            train_x = model.rosenblatt_inverse(train_u)
            y = benchmark.evaluate(train_x)

            vkey = (master_seed, benchmark.id, rep, settings.n_val)
            if validation_cache is not None and vkey in validation_cache:
                val_u, val_y = validation_cache[vkey]
            else:
                val_x, val_u = model.sample(
                    _rng(master_seed, benchmark.id, rep, _STREAM_VALIDATION),
                    settings.n_val, return_uniform=True)
                val_y = benchmark.evaluate(val_x)
                if validation_cache is not None:
                    validation_cache[vkey] = (val_u, val_y)

            config = OptimizerConfig(restarts=settings.restarts,
                                     max_iters=settings.max_iters,
                                     fd_mode=settings.grad_mode == "fd")
            fitted = gp.fit(train_u, y, trend, model, config,
                            _rng(master_seed, benchmark.id, rep, _STREAM_FIT))
            diag = fitted.diagnostics
            selected, err = _select_model(diag, train_u, y, trend, model,
                                          val_u, val_y, settings.selection)
            records.append(ExperimentRecord(
                benchmark=benchmark.id, method=method, rep=rep,
                seed=_rep_seed(master_seed, benchmark.id, rep),
                grad_mode=settings.grad_mode, nmse=err,
                fit_seconds=diag.wall_seconds, n=n, n_val=settings.n_val,
                restarts=settings.restarts, diagnostics=diag))
        except Exception as exc:  # noqa: BLE001 - failures must not kill the batch
            failures.append((benchmark.id, method, rep, f"{type(exc).__name__}: {exc}"))
    return records, failures


def summarize(records):
    """Per-cell mean and standard deviation of NMSE and wall time.

    Cells are keyed by (benchmark, method, grad_mode).  The standard
    deviation uses the n-1 denominator; a single-record cell reports a
    standard deviation of zero with ``degenerate_std`` set.
    """
    cells = {}
    for r in records:
        cells.setdefault((r.benchmark, r.method, r.grad_mode), []).append(r)

    out = []
    for (bid, method, grad_mode), rs in sorted(cells.items()):
        errs = np.array([r.nmse for r in rs])
        times = np.array([r.fit_seconds for r in rs])
        degenerate = len(rs) < 2
        out.append({
            "benchmark": bid,
            "method": method,
            "grad_mode": grad_mode,
            "count": len(rs),
            "nmse_mean": float(errs.mean()),
            "nmse_std": 0.0 if degenerate else float(errs.std(ddof=1)),
            "fit_seconds_mean": float(times.mean()),
            "fit_seconds_std": 0.0 if degenerate else float(times.std(ddof=1)),
            "degenerate_std": degenerate,
        })
    return out
