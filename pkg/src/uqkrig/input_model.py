"""Joint input distributions and the Rosenblatt transformation.

A :class:`JointInputModel` couples one-dimensional marginals with a
Gaussian copula whose correlation matrix is calibrated so that the
physical-space Pearson correlations match prescribed targets (closed
form for normal and lognormal pairs, quadrature plus bisection
otherwise).  The sequential conditioning of the Rosenblatt
transformation is realized through the Cholesky factor of the copula
correlation, conditioning in marginal index order.  For independent
inputs the transformation reduces to the componentwise marginal CDFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from .distributions import Marginal, U_EPS, norm_ppf

__all__ = ["JointInputModel"]

_GH_ORDER = 32
_BISECT_TOL = 1e-10


def _gh_nodes():
    t, w = np.polynomial.hermite_e.hermegauss(_GH_ORDER)
    return t, w / math.sqrt(2.0 * math.pi)


def _clamp_u(u):
    return np.clip(u, U_EPS, 1.0 - U_EPS)


def _implied_pearson(mi: Marginal, mj: Marginal, rho_z: float, nodes) -> float:
    """Physical-space Pearson correlation induced by copula correlation rho_z.

    Evaluated by tensorized Gauss-Hermite quadrature of E[x_i x_j] under
    the bivariate standard normal; the marginal moments entering the
    normalization use the same one-dimensional rule so that rho(0) = 0
    holds exactly.
    """
    t, w = nodes
    ui = _clamp_u(ndtr(t))
    xi = mi.ppf(ui)
    xj_base = mj.ppf(ui)
    m_i, m_j = w @ xi, w @ xj_base
    v_i = w @ (xi * xi) - m_i ** 2
    v_j = w @ (xj_base * xj_base) - m_j ** 2

    z2 = rho_z * t[:, None] + math.sqrt(max(0.0, 1.0 - rho_z * rho_z)) * t[None, :]
    xj = mj.ppf(_clamp_u(ndtr(z2)))
    e_ij = w @ ((xi[:, None] * xj) @ w)
    return (e_ij - m_i * m_j) / math.sqrt(v_i * v_j)


def _solve_copula_rho(mi: Marginal, mj: Marginal, rho_x: float) -> float:
    """Copula correlation reproducing a target physical-space Pearson rho."""
    ki, kj = mi.kind, mj.kind
    if ki == "normal" and kj == "normal":
        return rho_x
    if ki == "lognormal" and kj == "lognormal":
        si, sj = mi.params[1], mj.params[1]
        arg = 1.0 + rho_x * math.sqrt(math.expm1(si * si) * math.expm1(sj * sj))
        if arg <= 0.0:
            raise ValueError(f"Pearson correlation {rho_x:g} infeasible for lognormal pair")
        return math.log(arg) / (si * sj)

    nodes = _gh_nodes()
    lo, hi = -1.0 + 1e-9, 1.0 - 1e-9
    f_lo = _implied_pearson(mi, mj, lo, nodes) - rho_x
    f_hi = _implied_pearson(mi, mj, hi, nodes) - rho_x
    if f_lo > 0.0 or f_hi < 0.0:
        raise ValueError(f"Pearson correlation {rho_x:g} not attainable for "
                         f"({ki}, {kj}) pair")
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if _implied_pearson(mi, mj, mid, nodes) < rho_x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class JointInputModel:
    """Marginals plus a Gaussian copula realizing Rosenblatt conditionals.

    Immutable after :meth:`build`; concurrent reads are safe.  Sampling
    takes an externally supplied generator so parallel callers own
    distinct streams.
    """

    marginals: tuple[Marginal, ...]
    pearson_corr: np.ndarray
    copula_corr: np.ndarray
    copula_chol: np.ndarray
    independent: bool = field(default=True)

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @classmethod
    def build(cls, marginals, pearson_corr=None) -> "JointInputModel":
        """Construct the joint model and calibrate the copula correlation.

        ``pearson_corr`` is a symmetric matrix of physical-space Pearson
        correlations with unit diagonal; ``None`` means independence.
        """
        marginals = tuple(marginals)
        p = len(marginals)
        if p == 0:
            raise ValueError("at least one marginal is required")
        if pearson_corr is None:
            pearson = np.eye(p)
        else:
            pearson = np.array(pearson_corr, dtype=float)
        if pearson.shape != (p, p):
            raise ValueError(f"correlation matrix must be {p}x{p}")
        if not np.allclose(pearson, pearson.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.all(np.diag(pearson) == 1.0):
            raise ValueError("correlation matrix must have a unit diagonal")
        off = pearson[~np.eye(p, dtype=bool)]
        if np.any(np.abs(off) >= 1.0):
            raise ValueError("off-diagonal correlations must lie in (-1, 1)")

        copula = np.eye(p)
        for i in range(p):
            for j in range(i + 1, p):
                if pearson[i, j] != 0.0:
                    r = _solve_copula_rho(marginals[i], marginals[j], pearson[i, j])
                    copula[i, j] = copula[j, i] = r
        try:
            chol = np.linalg.cholesky(copula)
        except np.linalg.LinAlgError:
            raise ValueError("copula correlation matrix is not positive definite")

        indep = bool(np.all(copula == np.eye(p)))
        model = cls(marginals, pearson, copula, chol, indep)
        for arr in (model.pearson_corr, model.copula_corr, model.copula_chol):
            arr.setflags(write=False)
        return model

    # -- transformations -----------------------------------------------

    def _check_support(self, x):
        for i, m in enumerate(self.marginals):
            lo, hi = m.support
            col = x[:, i]
            if np.any(col < lo) or np.any(col > hi):
                raise ValueError(f"input coordinate {i} outside the support of "
                                 f"its {m.kind} marginal")

    def rosenblatt_forward(self, x):
        """Map physical points to i.i.d. uniform coordinates in (0, 1)^p.

        Accepts a single point of shape (p,) or a stack of shape (m, p).
        Marginal CDF values are mapped to standard normals, decorrelated
        through the copula Cholesky factor (sequential conditioning in
        index order), and sent back through the normal CDF.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dimension:
            raise ValueError("point dimension does not match the model")
        self._check_support(pts)

        f = np.column_stack([m.cdf(pts[:, i]) for i, m in enumerate(self.marginals)])
        f = _clamp_u(f)
        if self.independent:
            u = f
        else:
            z = norm_ppf(f)
            w = solve_triangular(self.copula_chol, z.T, lower=True).T
            u = _clamp_u(ndtr(w))
        return u[0] if single else u

    def rosenblatt_inverse(self, u):
        """Map i.i.d. uniform coordinates back to physical points.

        Exact inverse of :meth:`rosenblatt_forward`.  Components must lie
        in [0, 1]; boundary values are clamped inward by ``U_EPS``.
        """
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        pts = np.atleast_2d(u)
        if pts.shape[1] != self.dimension:
            raise ValueError("point dimension does not match the model")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise ValueError("uniform coordinates must lie inside the unit hypercube")
        pts = _clamp_u(pts)

        if self.independent:
            f = pts
        else:
            w = norm_ppf(pts)
            z = w @ self.copula_chol.T
            f = _clamp_u(ndtr(z))
        x = np.column_stack([m.ppf(f[:, i]) for i, m in enumerate(self.marginals)])
        return x[0] if single else x

    def sample(self, rng, count, return_uniform=False):
        """Draw joint physical-space samples.

        Each row is the inverse Rosenblatt image of an i.i.d. uniform
        vector from ``rng``.  With ``return_uniform=True`` the generating
        uniform coordinates are returned alongside the samples.
        """
        count = int(count)
        if count < 1:
            raise ValueError("sample count must be at least 1")
        u = rng.random((count, self.dimension))
        x = self.rosenblatt_inverse(u)
        return (x, u) if return_uniform else x

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        corr = [{"i": i, "j": j, "rho": float(self.pearson_corr[i, j])}
                for i in range(self.dimension)
                for j in range(i + 1, self.dimension)
                if self.pearson_corr[i, j] != 0.0]
        return {"marginals": [m.to_dict() for m in self.marginals],
                "correlations": corr}

    @classmethod
    def from_dict(cls, d: dict) -> "JointInputModel":
        marginals = [Marginal.from_dict(m) for m in d["marginals"]]
        p = len(marginals)
        corr = np.eye(p)
        for entry in d.get("correlations", []):
            i, j, rho = entry["i"], entry["j"], entry["rho"]
            corr[i, j] = corr[j, i] = rho
        return cls.build(marginals, corr)
