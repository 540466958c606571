"""Closed-form benchmark functions with their probabilistic input models.

Each benchmark couples an analytic evaluator (physical-space inputs)
with a joint input distribution.  Evaluators are pure and vectorized
over rows; the surrounding pipeline owns all transformations, so these
functions never see uniform-space coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .distributions import Marginal
from .input_model import JointInputModel

__all__ = ["Benchmark", "registry", "get", "evaluate"]

_COEFF_RESOURCE = "benchmark9_coefficients.json"


def _rows(x, p):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != p:
        raise ValueError(f"expected points of dimension {p}")
    return X, single


def _f1(X):
    """5 + x + cos(x)."""
    x = X[:, 0]
    return 5.0 + x + np.cos(x)


def _f2(X):
    """x1 / x2."""
    if np.any(X[:, 1] == 0.0):
        raise ValueError("ratio undefined at x2 = 0")
    return X[:, 0] / X[:, 1]


def _f3(X):
    """x1^2 + x2^3."""
    return X[:, 0] ** 2 + X[:, 1] ** 3


def _f4(X):
    """Short column limit state: 1 - (4/1125) x2/x1 - (1/5625) (x3/x1)^2."""
    if np.any(X[:, 0] == 0.0):
        raise ValueError("undefined at x1 = 0")
    return (1.0 - (4.0 / 1125.0) * X[:, 1] / X[:, 0]
            - (1.0 / 5625.0) * (X[:, 2] / X[:, 0]) ** 2)


def _f5(X):
    """Cantilever beam tip displacement surrogate target."""
    if np.any(X[:, 0] == 0.0):
        raise ValueError("undefined at x1 = 0")
    return (5.0e5 / X[:, 0]) * np.sqrt((X[:, 1] / 16.0) ** 2 + (X[:, 2] / 4.0) ** 2)


def _f6(X):
    """Borehole water flow rate."""
    x1, x2, x3, x4, x5, x6, x7, x8 = (X[:, i] for i in range(8))
    ratio = x2 / x1
    if np.any(ratio <= 0.0) or np.any(ratio == 1.0):
        raise ValueError("borehole requires x2/x1 > 0 and x2/x1 != 1")
    lnr = np.log(ratio)
    inner = 1.0 + 2.0 * x7 * x3 / (lnr * x1 ** 2 * x8) + x3 / x5
    return 2.0 * math.pi * x3 * (x4 - x6) / (lnr * inner)


def _f7(X):
    """Steel column limit state with load P and buckling term Eb."""
    x1, x2, x3, x4, x5, x6, x7, x8, x9 = (X[:, i] for i in range(9))
    P = x2 + x3 + x4
    Eb = (8.0 * math.pi ** 2 / 9.0e8) * x5 * x6 * x7 ** 2 * x9
    if np.any(Eb == P):
        raise ValueError("undefined where the buckling term equals the load")
    return x1 - P / (2.0 * x5 * x6) - x8 * P * Eb / (x5 * x6 * x7 * (Eb - P))


def _f8(X):
    """Sulfur model direct radiative forcing (product form)."""
    x1, x2, x3, x4, x5, x6, x7, x8, x9 = (X[:, i] for i in range(9))
    return -5.488e-9 * x1 ** 2 * x2 * x3 ** 2 * x4 * x5 * x6 * x7 * x8 * x9


def _load_benchmark9_coefficients(path=None):
    if path is not None:
        with open(path) as fh:
            d = json.load(fh)
    else:
        ref = resources.files("uqkrig").joinpath("data", _COEFF_RESOURCE)
        d = json.loads(ref.read_text())
    return (np.asarray(d["a1"], dtype=float), np.asarray(d["a2"], dtype=float),
            np.asarray(d["a3"], dtype=float), np.asarray(d["M"], dtype=float))


def _make_f9(coefficients):
    a1, a2, a3, M = coefficients

    def _f9(X):
        """a1'x + a2'sin(x) + a3'cos(x) + x'Mx in 15 dimensions."""
        return (X @ a1 + np.sin(X) @ a2 + np.cos(X) @ a3
                + np.einsum("ni,ij,nj->n", X, M, X))

    return _f9


@dataclass(frozen=True)
class Benchmark:
    id: int
    name: str
    dimension: int
    evaluator: object
    input_model: JointInputModel

    def evaluate(self, x):
        """Evaluate at one point (p,) or a stack (m, p) of points."""
        X, single = _rows(x, self.dimension)
        y = self.evaluator(X)
        return float(y[0]) if single else y


def _m(kind, a, b):
    return Marginal.from_moments(kind, a, b)


def _corr(p, pairs):
    c = np.eye(p)
    for i, j, rho in pairs:
        c[i, j] = c[j, i] = rho
    return c


def registry(benchmark9_coefficients=None) -> list[Benchmark]:
    """All nine benchmarks with input models built from their moment tables.

    The 15-dimensional benchmark's coefficient vectors and matrix are
    loaded from a bundled JSON sidecar (or ``benchmark9_coefficients``,
    a path to a compatible file, to substitute a different set).
    """
    specs = [
        (1, "oakley_ohagan_1d", _f1, [_m("normal", 0, 4)], None),
        (2, "lognormal_ratio", _f2,
         [_m("lognormal", 1, 0.5), _m("lognormal", 1, 0.5)],
         [(0, 1, 0.3)]),
        (3, "webster", _f3, [_m("uniform", 1, 10), _m("normal", 2, 1)], None),
        (4, "short_column", _f4,
         [_m("lognormal", 5, 0.5), _m("normal", 2000, 400), _m("normal", 500, 100)],
         [(1, 2, 0.5)]),
        (5, "cantilever_beam", _f5,
         [_m("normal", 2.9e7, 1.45e6), _m("normal", 1000, 100), _m("normal", 500, 100)],
         None),
        (6, "borehole", _f6,
         [_m("normal", 0.1, 0.0162), _m("lognormal", 3700, 4890),
          _m("uniform", 63070, 115600), _m("uniform", 990, 1110),
          _m("uniform", 63.1, 116), _m("uniform", 700, 820),
          _m("uniform", 1120, 1680), _m("uniform", 9855, 12045)],
         None),
        (7, "steel_column", _f7,
         [_m("lognormal", 400, 35), _m("normal", 5e5, 5e4),
          _m("gumbel", 6e5, 9e4), _m("gumbel", 6e5, 9e4),
          _m("lognormal", 300, 3), _m("lognormal", 20, 2),
          _m("lognormal", 300, 5), _m("normal", 30, 10),
          _m("weibull", 2.1e5, 4200)],
         None),
        (8, "sulfur_model", _f8,
         [_m("lognormal", 0.76, 0.152), _m("lognormal", 0.39, 0.039),
          _m("lognormal", 0.85, 0.085), _m("lognormal", 0.3, 0.09),
          _m("lognormal", 5.0, 2.0), _m("lognormal", 1.7, 0.34),
          _m("lognormal", 71.0, 10.65), _m("lognormal", 0.5, 0.25),
          _m("lognormal", 5.5, 2.75)],
         None),
        (9, "oakley_ohagan_15d", _make_f9(_load_benchmark9_coefficients(
            benchmark9_coefficients)),
         [_m("normal", 0, 1) for _ in range(15)], None),
    ]
    out = []
    for bid, name, fn, marginals, pairs in specs:
        p = len(marginals)
        corr = _corr(p, pairs) if pairs else None
        out.append(Benchmark(bid, name, p, fn,
                             JointInputModel.build(marginals, corr)))
    return out


def get(bid_or_name) -> Benchmark:
    """Look up a benchmark by integer id or by name token."""
    for b in registry():
        if b.id == bid_or_name or b.name == bid_or_name:
            return b
    raise KeyError(f"no benchmark {bid_or_name!r}")


def evaluate(bid, x):
    return get(bid).evaluate(x)
