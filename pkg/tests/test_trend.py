import numpy as np
import pytest

from uqkrig.distributions import Marginal
from uqkrig.input_model import JointInputModel
from uqkrig.trend import TrendSpec, basis_eval


@pytest.mark.parametrize("kind,p,q", [
    ("zero", 3, 0),
    ("constant", 3, 1),
    ("linear", 3, 4),
    ("quadratic", 3, 10),
    ("transformed_linear", 3, 4),
    ("transformed_quadratic", 3, 10),
    ("quadratic", 15, 136),
    ("quadratic", 2, 6),
])
def test_basis_counts(kind, p, q):
    assert TrendSpec(kind, p).q == q


def test_token_mapping():
    assert TrendSpec.from_token("t-quadratic", 4).kind == "transformed_quadratic"
    assert TrendSpec.from_token("zero", 1).kind == "zero"
    with pytest.raises(ValueError):
        TrendSpec.from_token("cubic", 2)


def test_zero_trend_empty_matrix(rng):
    H = basis_eval(TrendSpec("zero", 2), rng.random((5, 2)))
    assert H.shape == (0, 5)


def test_constant_trend_row_of_ones(rng):
    H = basis_eval(TrendSpec("constant", 2), rng.random((7, 2)))
    np.testing.assert_array_equal(H, np.ones((1, 7)))


def test_quadratic_monomials_and_ordering():
    H = basis_eval(TrendSpec("quadratic", 2), np.array([[0.5, 0.2]]))
    np.testing.assert_allclose(H[:, 0], [1.0, 0.5, 0.2, 0.25, 0.04, 0.1])


def test_quadratic_ordering_three_dims():
    u = np.array([[2.0, 3.0, 5.0]])
    H = basis_eval(TrendSpec("quadratic", 3), u)
    np.testing.assert_allclose(
        H[:, 0], [1, 2, 3, 5, 4, 9, 25, 6, 10, 15])  # 1, x, x^2, cross (i<j)


def test_transformed_linear_is_quantile_function():
    model = JointInputModel.build([Marginal.from_moments("uniform", 1, 10)])
    H = basis_eval(TrendSpec("transformed_linear", 1), np.array([[0.5]]), model)
    np.testing.assert_allclose(H[:, 0], [1.0, 5.5])

    centered = JointInputModel.build([Marginal.from_moments("normal", 0, 4)])
    H2 = basis_eval(TrendSpec("transformed_linear", 1), np.array([[0.5]]), centered)
    assert H2[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_transformed_requires_model(rng):
    with pytest.raises(ValueError):
        basis_eval(TrendSpec("transformed_linear", 2), rng.random((3, 2)))


def test_all_uniform_model_transform_is_identity(rng):
    model = JointInputModel.build(
        [Marginal.from_moments("uniform", 0, 1) for _ in range(3)])
    U = rng.random((20, 3)) * 0.98 + 0.01
    plain = basis_eval(TrendSpec("quadratic", 3), U)
    transformed = basis_eval(TrendSpec("transformed_quadratic", 3), U, model)
    np.testing.assert_array_equal(plain, transformed)


def test_transformed_linear_recovers_physical_coordinates(rng):
    model = JointInputModel.build(
        [Marginal.from_moments("lognormal", 5, 0.5),
         Marginal.from_moments("normal", 2000, 400),
         Marginal.from_moments("normal", 500, 100)],
        [[1, 0, 0], [0, 1, 0.5], [0, 0.5, 1]])
    x = model.sample(rng, 50)
    H = basis_eval(TrendSpec("transformed_linear", 3), model.rosenblatt_forward(x),
                   model)
    scale = np.maximum(np.abs(x.T), 1e-6)
    assert np.max(np.abs(H[1:] - x.T) / scale) < 1e-8


def test_dimension_validation(rng):
    with pytest.raises(ValueError):
        basis_eval(TrendSpec("linear", 3), rng.random((4, 2)))
