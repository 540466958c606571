"""Bounded limited-memory quasi-Newton maximization with restarts.

The maximizer runs a limited-memory BFGS with gradient projection onto
a box: search directions come from the standard two-loop recursion, a
backtracking line search projects every trial point into the box and
tests an Armijo decrease, and the curvature-pair memory is reset
whenever the active bound set changes.  Restarts draw initial points
uniformly inside the (log-space) box from the supplied generator, so a
run is a pure function of (objective, config, seed).

In finite-difference mode the objective returns values only and the
gradient is formed by 2-point forward differences, which costs one
evaluation per dimension on top of the base point.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["OptimizerConfig", "MaximizeResult", "RestartDiagnostics", "maximize",
           "replace_bounds"]

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 20
_CURVATURE_EPS = 1e-10
# consecutive accepted steps with relative improvement below this level
# terminate the run: the objective is at its evaluation-noise plateau
_PLATEAU_RTOL = 1e-10
_PLATEAU_STREAK = 3


@dataclass(frozen=True)
class OptimizerConfig:
    """Protocol defaults: 20 restarts, memory 10, tolerance 1e-6."""

    restarts: int = 20
    max_iters: int = 200
    memory: int = 10
    grad_tol: float = 1e-6
    bounds: np.ndarray | None = None       # (d, 2) log-space box
    init_ranges: np.ndarray | None = None  # sampling box, defaults to bounds
    fd_mode: bool = False
    fd_step: float = 1e-6


def replace_bounds(config: OptimizerConfig, bounds) -> OptimizerConfig:
    return replace(config, bounds=np.asarray(bounds, dtype=float))


@dataclass
class RestartDiagnostics:
    index: int
    value: float
    initial_value: float
    params: np.ndarray | None
    iterations: int
    n_evaluations: int
    n_gradients: int
    converged: bool
    wall_seconds: float
    message: str = ""


@dataclass
class MaximizeResult:
    best_params: np.ndarray
    best_value: float
    best_restart: int
    restarts: list[RestartDiagnostics] = field(default_factory=list)
    n_evaluations: int = 0
    wall_seconds: float = 0.0


def _two_loop(g, pairs):
    """Two-loop recursion; returns the quasi-Newton step -H g."""
    q = g.copy()
    alphas = []
    for s, yv, r in reversed(pairs):
        a = r * (s @ q)
        alphas.append(a)
        q -= a * yv
    s_l, y_l, _ = pairs[-1]
    q *= (s_l @ y_l) / (y_l @ y_l)
    for (s, yv, r), a in zip(pairs, reversed(alphas)):
        b = r * (yv @ q)
        q += s * (a - b)
    return -q


class _Evaluator:
    """Counts objective calls and normalizes to minimization."""

    def __init__(self, objective, value_objective, fd_mode, fd_step, dim):
        self._objective = objective
        self._value_objective = value_objective
        self._fd = fd_mode
        self._h = fd_step
        self._dim = dim
        self.n_evaluations = 0
        self.n_gradients = 0

    def value(self, x):
        self.n_evaluations += 1
        if self._fd:
            return -float(self._objective(x)), None
        v, g = self._objective(x)
        return -float(v), (-np.asarray(g, dtype=float) if np.isfinite(v) else None)

    def value_fast(self, x):
        """Value without the gradient, for line-search backtracks."""
        if self._value_objective is not None and not self._fd:
            self.n_evaluations += 1
            return -float(self._value_objective(x)), None
        return self.value(x)

    def gradient(self, x, f_x, g_bundled):
        """Gradient at an accepted point; forward differences in FD mode."""
        self.n_gradients += 1
        if not self._fd:
            if g_bundled is None:
                _, g_bundled = self.value(x)
            return g_bundled
        g = np.empty(self._dim)
        for i in range(self._dim):
            xp = x.copy()
            xp[i] += self._h
            fp, _ = self.value(xp)
            g[i] = (fp - f_x) / self._h
        return g


def _minimize_one(ev, x0, lo, hi, config):
    x = np.clip(x0, lo, hi)
    f, g_bundle = ev.value(x)
    f0 = f
    if not math.isfinite(f):
        return (None, math.inf, f0, 0, False,
                "non-finite objective at the initial point")
    g = ev.gradient(x, f, g_bundle)

    pairs = deque(maxlen=config.memory)
    active = (x <= lo) | (x >= hi)
    iterations = 0
    converged = False
    stalled = 0
    message = "iteration limit"

    while iterations < config.max_iters:
        pg = x - np.clip(x - g, lo, hi)
        if np.max(np.abs(pg)) < config.grad_tol:
            converged = True
            message = "projected gradient below tolerance"
            break
        iterations += 1

        if pairs:
            d = _two_loop(g, pairs)
            if not np.all(np.isfinite(d)) or g @ d >= 0.0:
                pairs.clear()
                d = -g / max(1.0, np.max(np.abs(g)))
        else:
            # without curvature information, cap the raw-gradient step
            # at unit length per coordinate to avoid line-search churn
            d = -g / max(1.0, np.max(np.abs(g)))

        # Armijo search on the projected path, shrinking the step by
        # quadratic interpolation of the one-dimensional restriction
        t = 1.0
        accepted = False
        dphi0 = g @ d
        for trial in range(_MAX_BACKTRACKS):
            x_new = np.clip(x + t * d, lo, hi)
            s = x_new - x
            if not np.any(s):
                break  # fully blocked by the box along this direction
            # the full step usually succeeds and its gradient is wanted
            # anyway; backtracks only need the value
            evaluate = ev.value if trial == 0 else ev.value_fast
            f_new, g_bundle = evaluate(x_new)
            if math.isfinite(f_new) and f_new <= f + _ARMIJO_C1 * (g @ s):
                accepted = True
                break
            if math.isfinite(f_new) and f_new > f + dphi0 * t:
                t_q = -0.5 * dphi0 * t * t / (f_new - f - dphi0 * t)
                t = min(max(t_q, 0.1 * t), 0.5 * t)
            else:
                t *= 0.5
        if not accepted:
            if pairs:
                # retry from a steepest-descent step before giving up
                pairs.clear()
                continue
            message = "line search failure"
            break

        g_new = ev.gradient(x_new, f_new, g_bundle)
        active_new = (x_new <= lo) | (x_new >= hi)
        if np.array_equal(active, active_new):
            yv = g_new - g
            if s @ yv > _CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(yv):
                pairs.append((s, yv, 1.0 / (s @ yv)))
        else:
            pairs.clear()  # curvature information is invalid across active sets
        active = active_new
        stalled = stalled + 1 if f - f_new <= _PLATEAU_RTOL * (1.0 + abs(f)) else 0
        x, f, g = x_new, f_new, g_new
        if stalled >= _PLATEAU_STREAK:
            message = "objective plateau"
            break

    return x, f, f0, iterations, converged, message


def maximize(objective, config: OptimizerConfig, rng,
             value_objective=None) -> MaximizeResult:
    """Maximize a (value, gradient) callback over a box with restarts.

    In finite-difference mode ``objective`` returns values only.  The
    optional ``value_objective`` is a cheaper value-only callback used
    for line-search backtracks in analytic mode; results are identical
    with or without it.  The best restart by objective value wins; ties
    keep the lowest restart index.  Raises if every restart starts at a
    non-finite objective value.
    """
    if config.bounds is None:
        raise ValueError("optimizer bounds are required")
    bounds = np.asarray(config.bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(lo >= hi):
        raise ValueError("every lower bound must be below its upper bound")
    init = bounds if config.init_ranges is None else np.asarray(config.init_ranges)
    dim = len(lo)

    result = MaximizeResult(best_params=None, best_value=-math.inf, best_restart=-1)
    t_total = time.perf_counter()
    for r in range(config.restarts):
        x0 = init[:, 0] + (init[:, 1] - init[:, 0]) * rng.random(dim)
        ev = _Evaluator(objective, value_objective, config.fd_mode,
                        config.fd_step, dim)
        t0 = time.perf_counter()
        x, f, f0, iters, conv, msg = _minimize_one(ev, x0, lo, hi, config)
        wall = time.perf_counter() - t0
        value = -f if x is not None else -math.inf
        result.restarts.append(RestartDiagnostics(
            index=r, value=value, initial_value=-f0, params=x, iterations=iters,
            n_evaluations=ev.n_evaluations, n_gradients=ev.n_gradients,
            converged=conv, wall_seconds=wall, message=msg))
        result.n_evaluations += ev.n_evaluations
        if x is not None and value > result.best_value:
            result.best_value = value
            result.best_params = x
            result.best_restart = r
    result.wall_seconds = time.perf_counter() - t_total

    if result.best_params is None:
        raise RuntimeError("all restarts failed: non-finite objective at every "
                           "initial point")
    return result
