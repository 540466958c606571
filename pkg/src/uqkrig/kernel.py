"""Anisotropic squared-exponential covariance and its hyperparameter derivatives.

The kernel is ``k(u, v) = amplitude * exp(-sum_i ((u_i - v_i) / ell_i)^2)``
with one lengthscale per input dimension.  Training covariance matrices
add the noise variance and a small diagonal jitter; a module-level
counter tracks every n-by-n Cholesky factorization so complexity
contracts can be asserted in tests.

Hyperparameters are stored and optimized in log-space, which enforces
positivity by construction; all derivatives here are taken with respect
to the log-parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["HyperParams", "kernel_eval", "kernel_matrix", "cross_kernel",
           "kernel_matrix_grad", "grad_traces", "chol_ky", "CholeskyError"]

# Jitter policy: relative to the amplitude, escalating by x10 on
# factorization failure up to the hard cap.
BASE_JITTER_REL = 1e-10
MAX_JITTER_REL = 1e-4

_cholesky_count = 0

# Test hook: flips the sign of the amplitude derivative so gradient
# validation tooling can prove it detects broken gradients.
_FLIP_AMPLITUDE_GRAD = False


def cholesky_count() -> int:
    """Number of n-by-n covariance factorization attempts so far."""
    return _cholesky_count


def reset_cholesky_count() -> None:
    global _cholesky_count
    _cholesky_count = 0


class CholeskyError(RuntimeError):
    """Covariance factorization failed even at the maximum jitter level."""


@dataclass(frozen=True)
class HyperParams:
    """Kernel amplitude, per-dimension lengthscales and noise level.

    ``log_lengthscales`` has one entry per input dimension (unit
    hypercube units); the amplitude carries the variance units of the
    observations.  A zero noise level is represented by ``-inf`` in
    log-space.
    """

    log_amplitude: float
    log_lengthscales: np.ndarray
    log_noise_std: float

    @classmethod
    def from_values(cls, amplitude, lengthscales, noise_std) -> "HyperParams":
        amplitude = float(amplitude)
        lengthscales = np.asarray(lengthscales, dtype=float)
        noise_std = float(noise_std)
        if amplitude <= 0.0 or np.any(lengthscales <= 0.0):
            raise ValueError("amplitude and lengthscales must be positive")
        if noise_std < 0.0:
            raise ValueError("noise level must be nonnegative")
        log_noise = math.log(noise_std) if noise_std > 0.0 else -math.inf
        ls = np.log(lengthscales)
        ls.setflags(write=False)
        return cls(math.log(amplitude), ls, log_noise)

    @property
    def amplitude(self) -> float:
        return math.exp(self.log_amplitude)

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def noise_std(self) -> float:
        return math.exp(self.log_noise_std) if self.log_noise_std > -math.inf else 0.0

    @property
    def dimension(self) -> int:
        return self.log_lengthscales.shape[0]

    def to_vector(self) -> np.ndarray:
        """Log-parameter vector [log amp, log ell_1..log ell_p, log noise]."""
        return np.concatenate(([self.log_amplitude], self.log_lengthscales,
                               [self.log_noise_std]))

    @classmethod
    def from_vector(cls, v) -> "HyperParams":
        v = np.asarray(v, dtype=float)
        ls = v[1:-1].copy()
        ls.setflags(write=False)
        return cls(float(v[0]), ls, float(v[-1]))


def _scaled_sq_dists(hp, U, V=None):
    """Sum over dimensions of ((u_i - v_i) / ell_i)^2, shape (n, m).

    Evaluated through the Gram-matrix identity so only (n, m) arrays
    are materialized; tiny negative round-off is clamped and the
    diagonal of the square case is exactly zero.
    """
    inv = 1.0 / hp.lengthscales
    a = U * inv
    sq_a = np.einsum("ij,ij->i", a, a)
    if V is None:
        d2 = sq_a[:, None] + sq_a[None, :] - 2.0 * (a @ a.T)
        np.fill_diagonal(d2, 0.0)
    else:
        b = V * inv
        sq_b = np.einsum("ij,ij->i", b, b)
        d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0, out=d2)


def kernel_eval(hp, u, v) -> float:
    """Covariance between two points; symmetric, bounded by the amplitude."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.shape != (hp.dimension,):
        raise ValueError("point dimensions must match the hyperparameters")
    r = (u - v) / hp.lengthscales
    return hp.amplitude * math.exp(-float(r @ r))


def kernel_matrix(hp, U, jitter_rel=BASE_JITTER_REL):
    """Training covariance K + (noise_var + jitter) * I.

    The jitter is ``jitter_rel`` times the amplitude, so the whole
    diagonal inflation scales with the signal variance.
    """
    U = np.asarray(U, dtype=float)
    K = hp.amplitude * np.exp(-_scaled_sq_dists(hp, U))
    diag = hp.noise_std ** 2 + jitter_rel * hp.amplitude
    K[np.diag_indices_from(K)] += diag
    return K


def cross_kernel(hp, U, V):
    """Covariance between training and prediction points (no noise term)."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape[1] != V.shape[1]:
        raise ValueError("point sets must share the input dimension")
    return hp.amplitude * np.exp(-_scaled_sq_dists(hp, U, V))


def kernel_matrix_grad(hp, U, jitter_rel=BASE_JITTER_REL):
    """Derivatives of the training covariance w.r.t. all log-parameters.

    Returns an array of shape (p + 2, n, n) ordered like
    :meth:`HyperParams.to_vector`:

    - d/dlog(amplitude) is the noise-free covariance (plus the jitter,
      which scales with the amplitude),
    - d/dlog(ell_i) is the covariance times 2 d_i^2 / ell_i^2 with d_i
      the per-pair coordinate distance (zero diagonal),
    - d/dlog(noise) is 2 noise_var * I.
    """
    U = np.asarray(U, dtype=float)
    n, p = U.shape
    ell = hp.lengthscales
    K = hp.amplitude * np.exp(-_scaled_sq_dists(hp, U))

    grads = np.empty((p + 2, n, n))
    grads[0] = K
    grads[0][np.diag_indices(n)] += jitter_rel * hp.amplitude
    if _FLIP_AMPLITUDE_GRAD:
        grads[0] = -grads[0]
    for i in range(p):
        di = U[:, i, None] - U[None, :, i]
        grads[1 + i] = K * (2.0 / ell[i] ** 2) * (di * di)
    grads[p + 1] = 0.0
    grads[p + 1][np.diag_indices(n)] = 2.0 * hp.noise_std ** 2
    return grads


def grad_traces(hp, U, bracket, jitter_rel=BASE_JITTER_REL):
    """Half Frobenius products of ``bracket`` with every covariance derivative.

    Equivalent to contracting :func:`kernel_matrix_grad` against
    ``bracket`` but without materializing the stack of derivative
    matrices: with C = bracket * K, the lengthscale terms reduce to
    sum_jk C_jk (u_ji - u_ki)^2 / ell_i^2, which is evaluated through
    row sums and one matrix product.
    """
    U = np.asarray(U, dtype=float)
    n, p = U.shape
    ell = hp.lengthscales
    K = hp.amplitude * np.exp(-_scaled_sq_dists(hp, U))
    C = bracket * K
    tr_bracket = float(np.trace(bracket))

    out = np.empty(p + 2)
    out[0] = 0.5 * (float(C.sum()) + jitter_rel * hp.amplitude * tr_bracket)
    if _FLIP_AMPLITUDE_GRAD:
        out[0] = -out[0]
    U_sq = U * U
    row = C.sum(axis=1)
    col = C.sum(axis=0)
    cross = np.einsum("ji,ji->i", U, C @ U)
    out[1:p + 1] = (row @ U_sq + col @ U_sq - 2.0 * cross) / ell ** 2
    out[p + 1] = hp.noise_std ** 2 * tr_bracket
    return out


def chol_ky(hp, U, jitter_rel=None):
    """Lower Cholesky factor of the training covariance.

    With ``jitter_rel=None`` the jitter escalates from the base level by
    factors of ten until the factorization succeeds, up to the cap;
    beyond that a :class:`CholeskyError` is raised.  Returns the factor
    and the jitter level actually used.  Every attempt increments the
    module factorization counter.
    """
    global _cholesky_count
    levels = ([jitter_rel] if jitter_rel is not None else
              [BASE_JITTER_REL * 10 ** k
               for k in range(int(math.log10(MAX_JITTER_REL / BASE_JITTER_REL)) + 1)])
    for level in levels:
        Ky = kernel_matrix(hp, U, jitter_rel=level)
        _cholesky_count += 1
        try:
            return np.linalg.cholesky(Ky), level
        except np.linalg.LinAlgError:
            continue
    raise CholeskyError(
        f"covariance factorization failed at jitter {levels[-1]:g} x amplitude")
