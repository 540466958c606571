"""Simple, ordinary and universal kriging with exact likelihood gradients.

The zero-trend path is simple kriging; a constant trend gives ordinary
kriging; richer trends give universal kriging.  All linear algebra goes
through Cholesky factorizations of the training covariance (n x n) and
of the projected trend normal matrix (q x q).  One likelihood-plus-
gradient evaluation performs exactly one n x n factorization; the
derivative of the log marginal likelihood reduces to Frobenius inner
products between a single shared bracket matrix and the covariance
derivative for each hyperparameter.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from . import _threads
from . import kernel as _kernel
from . import optimize as _optimize
from .input_model import JointInputModel
from .kernel import HyperParams, chol_ky, cross_kernel, grad_traces
from .trend import TrendSpec, basis_eval

__all__ = ["FittedModel", "GradientWorkspace", "lml_simple", "lml_grad_simple",
           "lml_universal", "lml_grad_universal", "fit", "build_fitted",
           "predict", "default_bounds"]

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# factorizations shared by likelihoods, gradients and predictions
# ---------------------------------------------------------------------------

def _factorize(hp, U, y, H, jitter_rel=None):
    """Cholesky factors and solves shared by all universal-kriging formulas.

    Returns (L_K, alpha, gamma, L_eta, mu, jitter_used) where
    alpha = Ky^-1 y, gamma = Ky^-1 H^T, and mu is the generalized
    least-squares trend coefficient estimate.  For an empty trend
    (q = 0) the trend-related entries are empty arrays.
    """
    y = np.asarray(y, dtype=float)
    L_K, used = chol_ky(hp, U, jitter_rel=jitter_rel)
    alpha = cho_solve((L_K, True), y)
    q = H.shape[0]
    if q == 0:
        return L_K, alpha, np.empty((len(y), 0)), np.empty((0, 0)), np.empty(0), used
    if q >= len(y):
        raise ValueError("universal kriging requires more points than basis functions")
    gamma = cho_solve((L_K, True), H.T)
    A = H @ gamma
    try:
        L_eta = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ValueError("trend basis matrix is rank deficient on these points")
    mu = cho_solve((L_eta, True), H @ alpha)
    return L_K, alpha, gamma, L_eta, mu, used


def _lml_from_factors(y, L_K, alpha, L_eta, mu, H):
    n = len(y)
    q = H.shape[0]
    value = -0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L_K))))
    if q > 0:
        value += 0.5 * float((H @ alpha) @ mu)
        value -= float(np.sum(np.log(np.diag(L_eta))))
    value -= 0.5 * (n - q) * LOG_2PI
    return value


# ---------------------------------------------------------------------------
# log marginal likelihoods
# ---------------------------------------------------------------------------

def lml_simple(hp, U, y, jitter_rel=None):
    """Log marginal likelihood of a zero-mean GP.

    Computed via Cholesky: -y' Ky^-1 y / 2 - log|Ky| / 2 - n log(2 pi) / 2.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    L_K, _ = chol_ky(hp, U, jitter_rel=jitter_rel)
    alpha = cho_solve((L_K, True), y)
    return (-0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L_K))))
            - 0.5 * len(y) * LOG_2PI)


def lml_universal(hp, U, y, H, jitter_rel=None):
    """Log marginal likelihood of a GP with a linear-in-coefficients trend.

    The trend coefficients are integrated out under an improper flat
    prior, which adds the projected data term and the log-determinant of
    the normal matrix H Ky^-1 H' and reduces the constant to
    (n - q) log(2 pi) / 2.  An empty trend reproduces the zero-mean
    likelihood exactly.
    """
    U = np.asarray(U, dtype=float)
    H = np.asarray(H, dtype=float)
    L_K, alpha, gamma, L_eta, mu, _ = _factorize(hp, U, y, H, jitter_rel)
    return _lml_from_factors(np.asarray(y, dtype=float), L_K, alpha, L_eta, mu, H)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientWorkspace:
    """Shared per-hyperparameter-set quantities for the likelihood gradient.

    ``bracket`` is the symmetric matrix whose Frobenius inner product
    with each covariance derivative gives twice the likelihood
    derivative.
    """

    rho: np.ndarray   # alpha alpha'
    eps: np.ndarray   # gamma eta
    xi: np.ndarray    # eps rho
    Kinv: np.ndarray
    eta: np.ndarray   # A^-1 H
    bracket: np.ndarray


def build_workspace(hp, U, y, H, jitter_rel=None):
    """Assemble the gradient workspace (one n x n factorization)."""
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    n = len(y)
    L_K, alpha, gamma, L_eta, mu, used = _factorize(hp, U, y, H, jitter_rel)
    Kinv = cho_solve((L_K, True), np.eye(n))
    rho = np.outer(alpha, alpha)
    q = H.shape[0]
    if q > 0:
        eta = cho_solve((L_eta, True), H)
        eps = gamma @ eta
        w = gamma @ mu  # equals eps @ alpha
        xi = np.outer(w, alpha)  # eps @ rho, using the rank-1 structure of rho
        # (eps - I) Kinv rewritten as gamma A^-1 gamma' - Kinv, which
        # costs n^2 q instead of a dense n^3 product
        bracket = (rho - xi - xi.T + np.outer(w, w)
                   + gamma @ cho_solve((L_eta, True), gamma.T) - Kinv)
    else:
        eta = np.empty((0, n))
        eps = np.zeros((n, n))
        xi = np.zeros((n, n))
        bracket = rho - Kinv
    ws = GradientWorkspace(rho, eps, xi, Kinv, eta, bracket)
    return ws, L_K, alpha, gamma, L_eta, mu, used


def lml_grad_simple(hp, U, y, jitter_rel=None):
    """Zero-mean log marginal likelihood and its log-parameter gradient.

    The gradient of each parameter is tr((alpha alpha' - Ky^-1) dKy) / 2;
    the factorization is shared across the value and all parameters.
    """
    return lml_grad_universal(hp, U, y, np.empty((0, len(y))), jitter_rel)


def lml_grad_universal(hp, U, y, H, jitter_rel=None):
    """Log marginal likelihood and gradient for a trend-augmented GP.

    Returns ``(value, grad)`` with ``grad`` ordered like
    :meth:`HyperParams.to_vector`.  A single covariance factorization
    feeds the value, the bracket matrix and every parameter derivative;
    each derivative is a Frobenius inner product against the
    corresponding covariance derivative.
    """
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    ws, L_K, alpha, gamma, L_eta, mu, used = build_workspace(hp, U, y, H, jitter_rel)
    value = _lml_from_factors(y, L_K, alpha, L_eta, mu, H)
    grad = grad_traces(hp, U, ws.bracket, jitter_rel=used)
    return value, grad


# ---------------------------------------------------------------------------
# fitted models
# ---------------------------------------------------------------------------

@dataclass
class FittedModel:
    """A kriging model with cached factorizations.

    Immutable in practice after construction; predictions from multiple
    threads are safe.  ``mu`` holds the generalized least-squares trend
    coefficient estimate (the trend coefficients themselves are never
    materialized separately).
    """

    trend: TrendSpec
    hp: HyperParams
    U: np.ndarray            # (n, p) training points, uniform space
    y: np.ndarray            # (n,)
    input_model: JointInputModel | None
    L_K: np.ndarray
    alpha: np.ndarray
    H: np.ndarray            # (q, n)
    gamma: np.ndarray        # (n, q)
    L_eta: np.ndarray        # (q, q)
    mu: np.ndarray           # (q,)
    lml: float
    jitter_rel: float
    diagnostics: object = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "trend": self.trend.kind,
            "hyperparams": {
                "amplitude": self.hp.amplitude,
                "lengthscales": self.hp.lengthscales.tolist(),
                "noise_std": self.hp.noise_std,
            },
            "u_train": self.U.tolist(),
            "y_train": self.y.tolist(),
            "mu": self.mu.tolist(),
            "input_model": (self.input_model.to_dict()
                            if self.input_model is not None else None),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        if d.get("format_version") != 1:
            raise ValueError("unsupported fitted-model document version")
        hp = HyperParams.from_values(d["hyperparams"]["amplitude"],
                                     d["hyperparams"]["lengthscales"],
                                     d["hyperparams"]["noise_std"])
        model = (JointInputModel.from_dict(d["input_model"])
                 if d["input_model"] is not None else None)
        U = np.asarray(d["u_train"], dtype=float)
        trend = TrendSpec(d["trend"], U.shape[1])
        # factors are recomputed rather than trusted from the document
        return build_fitted(hp, U, np.asarray(d["y_train"], dtype=float),
                            trend, model)

    @classmethod
    def from_json(cls, s: str) -> "FittedModel":
        return cls.from_dict(json.loads(s))


def build_fitted(hp, U, y, trend, model=None, jitter_rel=None) -> FittedModel:
    """Compute and cache all factors for a fixed set of hyperparameters."""
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    H = basis_eval(trend, U, model)
    L_K, alpha, gamma, L_eta, mu, used = _factorize(hp, U, y, H, jitter_rel)
    lml = _lml_from_factors(y, L_K, alpha, L_eta, mu, H)
    return FittedModel(trend=trend, hp=hp, U=U, y=y, input_model=model,
                       L_K=L_K, alpha=alpha, H=H, gamma=gamma, L_eta=L_eta,
                       mu=mu, lml=lml, jitter_rel=used)


def default_bounds(y, p):
    """Log-space box constraints for hyperparameter optimization.

    Amplitude bounds scale with the sample variance of the
    observations, lengthscales live on the unit hypercube, and the
    noise floor sits eight decades below the observation scale.
    """
    var_y = float(np.var(y))
    if var_y <= 0.0:
        var_y = 1.0
    std_y = math.sqrt(var_y)
    rows = [(math.log(1e-4 * var_y), math.log(1e4 * var_y))]
    rows += [(math.log(1e-2), math.log(1e1))] * p
    rows += [(math.log(1e-8 * std_y), math.log(std_y))]
    return np.array(rows)


def fit(U, y, trend, model=None, config=None, rng=None) -> FittedModel:
    """Maximum-likelihood hyperparameter estimation with restarts.

    Runs the configured number of restarts from log-uniform random
    initial hyperparameters and keeps the restart with the highest log
    marginal likelihood (ties break toward the lower restart index
    inside the optimizer).  Per-restart optima and counters are attached
    as ``diagnostics`` so callers can apply their own selection rule.
    """
    _threads.ensure_reference_blas_threads()
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float)
    if rng is None:
        rng = np.random.default_rng()
    if config is None:
        config = _optimize.OptimizerConfig()
    if config.bounds is None:
        config = _optimize.replace_bounds(config, default_bounds(y, U.shape[1]))

    H = basis_eval(trend, U, model)  # trend matrix is hyperparameter independent

    def value_objective(vec):
        try:
            return lml_universal(HyperParams.from_vector(vec), U, y, H)
        except (_kernel.CholeskyError, ValueError):
            return -math.inf

    if config.fd_mode:
        objective = value_objective
    else:
        def objective(vec):
            try:
                return lml_grad_universal(HyperParams.from_vector(vec), U, y, H)
            except (_kernel.CholeskyError, ValueError):
                return -math.inf, np.zeros(len(vec))

    result = _optimize.maximize(objective, config, rng,
                                value_objective=value_objective)
    hp = HyperParams.from_vector(result.best_params)
    fitted = build_fitted(hp, U, y, trend, model)
    fitted.diagnostics = result
    return fitted


def predict(fitted: FittedModel, Ustar):
    """Posterior mean and variance at uniform-space prediction points.

    The mean is ``Hstar' mu + kstar' Ky^-1 (y - H' mu)``; the variance
    subtracts the data-explained part and adds back the trend-estimation
    uncertainty through ``R = Hstar - H Ky^-1 kstar``.  Negative
    variances arising from floating point are clamped to zero and
    counted in the log.
    """
    Ustar = np.atleast_2d(np.asarray(Ustar, dtype=float))
    if Ustar.shape[1] != fitted.U.shape[1]:
        raise ValueError("prediction points do not match the training dimension")
    hp = fitted.hp
    kstar = cross_kernel(hp, fitted.U, Ustar)           # (n, l)
    Kinv_k = cho_solve((fitted.L_K, True), kstar)       # (n, l)
    var = hp.amplitude - np.einsum("nl,nl->l", kstar, Kinv_k)

    if fitted.trend.q > 0:
        Hstar = basis_eval(fitted.trend, Ustar, fitted.input_model)  # (q, l)
        mean = Hstar.T @ fitted.mu + kstar.T @ (fitted.alpha - fitted.gamma @ fitted.mu)
        R = Hstar - fitted.gamma.T @ kstar              # (q, l)
        var = var + np.einsum("ql,ql->l", R, cho_solve((fitted.L_eta, True), R))
    else:
        mean = kstar.T @ fitted.alpha

    neg = var < 0.0
    if np.any(neg):
        logger.debug("clamped %d negative prediction variances (worst %.3e)",
                     int(neg.sum()), float(var[neg].min()))
        var = np.where(neg, 0.0, var)
    return mean, var
