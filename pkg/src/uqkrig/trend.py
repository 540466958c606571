"""Polynomial trend bases, optionally defined in the physical input space.

Untransformed kinds evaluate monomials directly on the uniform
coordinates.  Transformed kinds express a polynomial of the physical
variables as a function of the uniform coordinates by sending each
point through the inverse Rosenblatt transformation first; for
independent inputs this reduces to evaluating the polynomial on the
componentwise quantile functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import U_EPS

__all__ = ["TrendSpec", "basis_eval", "TREND_TOKENS"]

_KINDS = ("zero", "constant", "linear", "quadratic",
          "transformed_linear", "transformed_quadratic")

# external string tokens used in experiment configurations
TREND_TOKENS = {
    "zero": "zero",
    "constant": "constant",
    "linear": "linear",
    "quadratic": "quadratic",
    "t-linear": "transformed_linear",
    "t-quadratic": "transformed_quadratic",
}


@dataclass(frozen=True)
class TrendSpec:
    """A basis-function family for a given input dimension."""

    kind: str
    dimension: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown trend kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")

    @classmethod
    def from_token(cls, token: str, dimension: int) -> "TrendSpec":
        if token not in TREND_TOKENS:
            raise ValueError(f"unknown trend token {token!r}")
        return cls(TREND_TOKENS[token], dimension)

    @property
    def transformed(self) -> bool:
        return self.kind.startswith("transformed_")

    @property
    def degree(self) -> int:
        if self.kind == "zero":
            return -1
        if self.kind == "constant":
            return 0
        if self.kind.endswith("linear"):
            return 1
        return 2

    @property
    def q(self) -> int:
        """Number of basis functions (p=15 quadratic gives 136)."""
        p = self.dimension
        if self.kind == "zero":
            return 0
        if self.kind == "constant":
            return 1
        if self.degree == 1:
            return 1 + p
        return 1 + 2 * p + p * (p - 1) // 2


def _monomials(X):
    """Rows: 1, x_i by index, x_i^2 by index, x_i x_j for i < j."""
    m, p = X.shape
    rows = [np.ones(m)]
    rows.extend(X[:, i] for i in range(p))
    rows.extend(X[:, i] ** 2 for i in range(p))
    for i in range(p):
        for j in range(i + 1, p):
            rows.append(X[:, i] * X[:, j])
    return np.vstack(rows)


def basis_eval(spec: TrendSpec, U, model=None):
    """Evaluate the basis family at uniform-space points.

    Parameters
    ----------
    spec : TrendSpec
    U : ndarray, shape (m, p)
        Points in the unit hypercube (boundary values are clamped).
    model : JointInputModel, optional
        Required for transformed kinds, which evaluate the monomials on
        the inverse-transformed physical coordinates.

    Returns
    -------
    H : ndarray, shape (q, m)
        One row per basis function, ordered constant, linear terms by
        index, squares by index, then cross terms lexicographically.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != spec.dimension:
        raise ValueError("points must have shape (m, p) matching the trend dimension")
    m, p = U.shape

    if spec.kind == "zero":
        return np.empty((0, m))

    if spec.transformed:
        if model is None:
            raise ValueError("transformed trends require a joint input model")
        X = model.rosenblatt_inverse(np.clip(U, U_EPS, 1.0 - U_EPS))
    else:
        X = U

    if spec.kind == "constant":
        return np.ones((1, m))
    full = _monomials(X)
    if spec.degree == 1:
        return full[:1 + p]
    return full
