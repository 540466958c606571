import math

import numpy as np
import pytest

import uqkrig.kernel as kernel
from uqkrig.benchmarks import registry
from uqkrig.gp import (FittedModel, build_fitted, build_workspace,
                       default_bounds, fit, lml_grad_simple,
                       lml_grad_universal, lml_simple, lml_universal, predict)
from uqkrig.kernel import HyperParams, kernel_matrix
from uqkrig.optimize import OptimizerConfig
from uqkrig.trend import TrendSpec, basis_eval

LOG_2PI = math.log(2 * math.pi)


def toy_problem(rng, n=20, p=2, noise=0.05):
    U = rng.random((n, p))
    y = np.sin(2 * math.pi * U[:, 0]) + U.sum(axis=1) + 0.1 * rng.standard_normal(n)
    hp = HyperParams.from_values(float(np.var(y)) + 0.5,
                                 np.linspace(0.3, 0.8, p), noise)
    return U, y, hp


def dense_lml(hp, U, y, H, jitter_rel):
    """Brute-force oracle: dense inverses and explicit determinants."""
    Ky = kernel_matrix(hp, U, jitter_rel)
    Kinv = np.linalg.inv(Ky)
    n = len(y)
    q = H.shape[0]
    value = -0.5 * y @ Kinv @ y - 0.5 * np.linalg.slogdet(Ky)[1]
    if q:
        A = H @ Kinv @ H.T
        C = Kinv @ H.T @ np.linalg.inv(A) @ H @ Kinv
        value += 0.5 * y @ C @ y - 0.5 * np.linalg.slogdet(A)[1]
    return value - 0.5 * (n - q) * LOG_2PI


def central_fd(fun, vec, h=1e-5):
    g = np.empty(len(vec))
    for i in range(len(vec)):
        vp, vm = vec.copy(), vec.copy()
        vp[i] += h
        vm[i] -= h
        g[i] = (fun(vp) - fun(vm)) / (2 * h)
    return g


def rel_err(a, b):
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)),
                       1e-2 * max(1.0, float(np.max(np.abs(a)))))
    return float(np.max(np.abs(a - b) / scale))


class TestLmlSimple:
    def test_single_zero_observation_unit_variance(self):
        hp = HyperParams.from_values(1.0, [1.0], 0.0)
        value = lml_simple(hp, np.array([[0.5]]), np.array([0.0]), jitter_rel=0.0)
        assert value == pytest.approx(-0.5 * LOG_2PI, rel=1e-12)
        assert value == pytest.approx(-0.918939, abs=1e-6)

    def test_single_observation_scalar_formula(self):
        hp = HyperParams.from_values(4.0, [1.0], 0.0)
        value = lml_simple(hp, np.array([[0.5]]), np.array([2.0]), jitter_rel=0.0)
        expected = -0.5 - 0.5 * math.log(4.0) - 0.5 * LOG_2PI
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(-2.112086, abs=1e-6)

    def test_matches_dense_inverse_oracle(self, rng):
        for n, p in ((10, 1), (25, 3), (30, 2)):
            U, y, hp = toy_problem(rng, n, p)
            mine = lml_simple(hp, U, y, jitter_rel=1e-10)
            oracle = dense_lml(hp, U, y, np.empty((0, n)), 1e-10)
            assert mine == pytest.approx(oracle, abs=1e-10 * max(1, abs(oracle)))


class TestLmlGradSimple:
    @pytest.mark.parametrize("p", [1, 3, 8])
    def test_matches_central_fd(self, p, rng):
        U, y, hp = toy_problem(rng, 10 * p, p)
        value, grad = lml_grad_simple(hp, U, y, jitter_rel=1e-10)
        fd = central_fd(lambda v: lml_simple(HyperParams.from_vector(v), U, y,
                                             jitter_rel=1e-10),
                        hp.to_vector(), h=1e-5)
        assert rel_err(grad, fd) < 1e-5

    def test_amplitude_component_closed_form(self, rng):
        # at zero noise and zero jitter: d lml / d log amplitude
        # equals (y' K^-1 y - n) / 2
        U = rng.random((2, 1))
        y = rng.standard_normal(2)
        hp = HyperParams.from_values(2.0, [0.7], 0.0)
        _, grad = lml_grad_simple(hp, U, y, jitter_rel=0.0)
        Kinv = np.linalg.inv(kernel_matrix(hp, U, 0.0))
        assert grad[0] == pytest.approx(0.5 * (y @ Kinv @ y - 2), rel=1e-10)

    def test_gradient_small_at_optimizer_solution(self, rng):
        bench = registry()[0]
        U = rng.random((10, 1))
        y = bench.evaluate(bench.input_model.rosenblatt_inverse(U))
        fitted = fit(U, y, TrendSpec("zero", 1), None,
                     OptimizerConfig(restarts=8), rng)
        converged = [r for r in fitted.diagnostics.restarts if r.converged]
        assert converged, "no restart reached the gradient tolerance"
        bounds = default_bounds(y, 1)
        for r in converged:
            _, grad = lml_grad_simple(HyperParams.from_vector(r.params), U, y)
            pg = r.params - np.clip(r.params + grad, bounds[:, 0], bounds[:, 1])
            assert np.max(np.abs(pg)) < 1e-6


class TestLmlUniversal:
    def test_constant_trend_equals_profile_formula(self, rng):
        # ordinary-kriging oracle with the GLS mean substituted
        U, y, hp = toy_problem(rng, 5, 1)
        H = np.ones((1, 5))
        Ky = kernel_matrix(hp, U, 1e-10)
        Kinv = np.linalg.inv(Ky)
        one = np.ones(5)
        A = one @ Kinv @ one
        mu = (one @ Kinv @ y) / A
        r = y - mu * one
        oracle = (-0.5 * r @ Kinv @ r - 0.5 * np.linalg.slogdet(Ky)[1]
                  - 0.5 * math.log(A) - 0.5 * 4 * LOG_2PI)
        mine = lml_universal(hp, U, y, H, jitter_rel=1e-10)
        assert mine == pytest.approx(oracle, abs=1e-10 * max(1, abs(oracle)))

    def test_zero_trend_equals_simple_exactly(self, rng):
        U, y, hp = toy_problem(rng, 15, 2)
        assert lml_universal(hp, U, y, np.empty((0, 15)), 1e-10) == \
            lml_simple(hp, U, y, 1e-10)

    def test_invariant_under_basis_row_reordering(self, rng):
        U, y, hp = toy_problem(rng, 20, 2)
        H = basis_eval(TrendSpec("quadratic", 2), U)
        a = lml_universal(hp, U, y, H, 1e-10)
        b = lml_universal(hp, U, y, H[::-1], 1e-10)
        assert a == pytest.approx(b, rel=1e-12)

    def test_matches_dense_inverse_oracle(self, rng):
        U, y, hp = toy_problem(rng, 25, 2)
        H = basis_eval(TrendSpec("quadratic", 2), U)
        mine = lml_universal(hp, U, y, H, 1e-10)
        oracle = dense_lml(hp, U, y, H, 1e-10)
        assert mine == pytest.approx(oracle, abs=1e-9 * max(1, abs(oracle)))

    def test_rank_deficient_basis_raises(self, rng):
        U, y, hp = toy_problem(rng, 10, 2)
        H = np.ones((2, 10))  # duplicated constant row
        with pytest.raises(ValueError):
            lml_universal(hp, U, y, H, 1e-10)

    def test_more_bases_than_points_raises(self, rng):
        U, y, hp = toy_problem(rng, 5, 2)
        with pytest.raises(ValueError):
            lml_universal(hp, U, y, np.ones((6, 5)), 1e-10)


class TestLmlGradUniversal:
    @pytest.mark.parametrize("token", ["zero", "constant", "linear", "quadratic",
                                       "t-linear", "t-quadratic"])
    def test_matches_central_fd_on_short_column_geometry(self, token, rng):
        bench = {b.id: b for b in registry()}[4]
        model = bench.input_model
        U = rng.random((30, 3))
        y = bench.evaluate(model.rosenblatt_inverse(U))
        y = (y - y.mean()) / y.std()
        hp = HyperParams.from_values(1.2, [0.5, 0.4, 0.6], 0.05)
        H = basis_eval(TrendSpec.from_token(token, 3), U, model)
        _, grad = lml_grad_universal(hp, U, y, H, jitter_rel=1e-10)
        fd = central_fd(lambda v: lml_universal(HyperParams.from_vector(v), U, y, H,
                                                jitter_rel=1e-10),
                        hp.to_vector(), h=1e-5)
        assert rel_err(grad, fd) < 1e-5

    def test_zero_trend_equals_simple_gradient(self, rng):
        U, y, hp = toy_problem(rng, 20, 2)
        v1, g1 = lml_grad_simple(hp, U, y, 1e-10)
        v2, g2 = lml_grad_universal(hp, U, y, np.empty((0, 20)), 1e-10)
        assert v1 == v2
        np.testing.assert_array_equal(g1, g2)

    def test_bracket_symmetric(self, rng):
        U, y, hp = toy_problem(rng, 18, 2)
        H = basis_eval(TrendSpec("linear", 2), U)
        ws = build_workspace(hp, U, y, H, 1e-10)[0]
        assert np.max(np.abs(ws.bracket - ws.bracket.T)) < 1e-10

    def test_workspace_definitional_identities(self, rng):
        U, y, hp = toy_problem(rng, 16, 2)
        H = basis_eval(TrendSpec("linear", 2), U)
        ws, L_K, alpha, gamma, L_eta, mu, _ = build_workspace(hp, U, y, H, 1e-10)
        np.testing.assert_allclose(ws.rho, np.outer(alpha, alpha), rtol=1e-14)
        assert np.linalg.matrix_rank(ws.rho, tol=1e-10) <= 1
        np.testing.assert_allclose(ws.eps, gamma @ ws.eta, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(ws.xi, ws.eps @ ws.rho, rtol=1e-8, atol=1e-10)
        Ky = kernel_matrix(hp, U, 1e-10)
        np.testing.assert_allclose(ws.Kinv @ Ky, np.eye(16), atol=1e-8)

    def test_single_factorization_per_evaluation(self, rng):
        U, y, hp = toy_problem(rng, 25, 3)
        H = basis_eval(TrendSpec("quadratic", 3), U)
        kernel.reset_cholesky_count()
        lml_grad_universal(hp, U, y, H, jitter_rel=1e-10)
        assert kernel.cholesky_count() == 1


class TestFit:
    def test_beats_random_probes_on_1d_benchmark(self, rng):
        bench = registry()[0]
        U = rng.random((10, 1))
        y = bench.evaluate(bench.input_model.rosenblatt_inverse(U))
        fitted = fit(U, y, TrendSpec("constant", 1), None,
                     OptimizerConfig(restarts=10), np.random.default_rng(0))
        H = np.ones((1, 10))
        bounds = default_bounds(y, 1)
        probe_rng = np.random.default_rng(99)
        for _ in range(100):
            vec = bounds[:, 0] + (bounds[:, 1] - bounds[:, 0]) * probe_rng.random(3)
            try:
                probe = lml_universal(HyperParams.from_vector(vec), U, y, H)
            except Exception:
                continue
            assert fitted.lml >= probe - 1e-8

    def test_refit_from_optimum_is_idempotent(self, rng):
        bench = registry()[0]
        U = rng.random((10, 1))
        y = bench.evaluate(bench.input_model.rosenblatt_inverse(U))
        fitted = fit(U, y, TrendSpec("constant", 1), None,
                     OptimizerConfig(restarts=5), np.random.default_rng(3))
        opt = fitted.hp.to_vector()
        config = OptimizerConfig(restarts=1, bounds=default_bounds(y, 1),
                                 init_ranges=np.column_stack([opt, opt]))
        again = fit(U, y, TrendSpec("constant", 1), None, config,
                    np.random.default_rng(4))
        assert again.lml == pytest.approx(fitted.lml, abs=1e-6)

    def test_zero_trend_constant_data_reverts_to_prior_far_away(self, rng):
        # lengthscales capped well below the prediction distance so the
        # far corner is decorrelated from the data cluster
        U = rng.random((12, 2)) * 0.2
        y = np.full(12, 3.0)
        bounds = np.array([[math.log(1e-2), math.log(1e2)],
                           [math.log(1e-3), math.log(5e-2)],
                           [math.log(1e-3), math.log(5e-2)],
                           [math.log(1e-8), math.log(1e-4)]])
        fitted = fit(U, y, TrendSpec("zero", 2), None,
                     OptimizerConfig(restarts=5, bounds=bounds), rng)
        mean, var = predict(fitted, np.array([[0.95, 0.95]]))
        assert abs(mean[0]) < 1e-6  # reverts to the zero prior mean
        assert var[0] == pytest.approx(fitted.hp.amplitude, rel=1e-6)


class TestPredict:
    def test_interpolates_training_points(self, rng):
        U, y, _ = toy_problem(rng, 20, 2)
        hp = HyperParams.from_values(float(np.var(y)), [0.4, 0.4],
                                     1e-8 * float(np.std(y)))
        fitted = build_fitted(hp, U, y, TrendSpec("constant", 2))
        mean, var = predict(fitted, U)
        assert np.max(np.abs(mean - y)) < 1e-6 * np.std(y)
        assert np.max(var) <= 1e-6 * hp.amplitude

    def test_far_from_data_reverts_to_trend_with_inflated_variance(self, rng):
        U = rng.random((15, 2)) * 0.05
        y = 2.0 + rng.standard_normal(15) * 0.1
        hp = HyperParams.from_values(1.0, [1e-3, 1e-3], 1e-4)
        fitted = build_fitted(hp, U, y, TrendSpec("constant", 2))
        mean, var = predict(fitted, np.array([[0.99, 0.99]]))
        assert mean[0] == pytest.approx(float(fitted.mu[0]), rel=1e-6)
        assert var[0] >= hp.amplitude  # trend-estimation term inflates it

    def test_constant_trend_equals_ordinary_kriging_formulas(self, rng):
        U, y, hp = toy_problem(rng, 25, 2)
        fitted = build_fitted(hp, U, y, TrendSpec("constant", 2))
        Ustar = rng.random((40, 2))
        mean, var = predict(fitted, Ustar)

        Ky = kernel_matrix(hp, U, fitted.jitter_rel)
        Kinv = np.linalg.inv(Ky)
        one = np.ones(25)
        k = kernel.cross_kernel(hp, U, Ustar)
        mu = (one @ Kinv @ y) / (one @ Kinv @ one)
        assert fitted.mu.shape == (1,)
        assert fitted.mu[0] == pytest.approx(mu, rel=1e-10)
        ok_mean = mu + k.T @ Kinv @ (y - mu * one)
        R = 1.0 - one @ Kinv @ k
        ok_var = (hp.amplitude - np.einsum("nl,nl->l", k, Kinv @ k)
                  + R**2 / (one @ Kinv @ one))
        np.testing.assert_allclose(mean, ok_mean, atol=1e-10 * np.std(y))
        np.testing.assert_allclose(var, ok_var, atol=1e-10 * hp.amplitude)

    def test_invariant_under_training_permutation(self, rng):
        U, y, hp = toy_problem(rng, 18, 2)
        perm = rng.permutation(18)
        Ustar = rng.random((5, 2))
        m1, v1 = predict(build_fitted(hp, U, y, TrendSpec("linear", 2)), Ustar)
        m2, v2 = predict(build_fitted(hp, U[perm], y[perm], TrendSpec("linear", 2)),
                         Ustar)
        np.testing.assert_allclose(m1, m2, rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(v1, v2, rtol=1e-8, atol=1e-11)

    def test_dimension_mismatch(self, rng):
        U, y, hp = toy_problem(rng, 10, 2)
        fitted = build_fitted(hp, U, y, TrendSpec("zero", 2))
        with pytest.raises(ValueError):
            predict(fitted, rng.random((3, 3)))


class TestSerialization:
    def test_round_trip_reproduces_model(self, rng):
        bench = {b.id: b for b in registry()}[4]
        U = rng.random((30, 3))
        y = bench.evaluate(bench.input_model.rosenblatt_inverse(U))
        hp = HyperParams.from_values(float(np.var(y)), [0.5, 0.6, 0.7],
                                     1e-6 * float(np.std(y)))
        fitted = build_fitted(hp, U, y, TrendSpec("transformed_linear", 3),
                              bench.input_model)
        clone = FittedModel.from_json(fitted.to_json())
        assert clone.lml == pytest.approx(fitted.lml, rel=1e-12)
        Ustar = rng.random((7, 3))
        m1, v1 = predict(fitted, Ustar)
        m2, v2 = predict(clone, Ustar)
        np.testing.assert_allclose(m1, m2, rtol=1e-12)
        np.testing.assert_allclose(v1, v2, rtol=1e-10, atol=1e-14)

    def test_rejects_unknown_version(self):
        with pytest.raises(ValueError):
            FittedModel.from_dict({"format_version": 99})
