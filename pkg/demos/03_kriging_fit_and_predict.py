"""
Fitting a kriging surrogate and predicting with uncertainty
===========================================================

Trains simple, ordinary and universal kriging surrogates on the
one-dimensional benchmark f(x) = 5 + x + cos(x) with x ~ N(0, 4) and
compares their validation errors.
"""

import numpy as np

from uqkrig import (OptimizerConfig, TrendSpec, fit, maximin_lhs, nmse,
                    predict, registry)

bench = registry()[0]
model = bench.input_model
rng = np.random.default_rng(1)

# training data: a maximin design in the uniform space, evaluated on the
# physical function through the inverse Rosenblatt transformation
design = maximin_lhs(10, 1, rng)
x_train = model.rosenblatt_inverse(design.points)
y_train = bench.evaluate(x_train)

# validation data: Monte Carlo draws from the input distribution
x_val, u_val = model.sample(rng, 1000, return_uniform=True)
y_val = bench.evaluate(x_val)

for token in ("zero", "constant", "t-linear"):
    trend = TrendSpec.from_token(token, 1)
    fitted = fit(design.points, y_train, trend, model,
                 OptimizerConfig(restarts=10), np.random.default_rng(5))
    err = nmse(fitted, u_val, y_val)
    print(f"{token:>9s}: log marginal likelihood {fitted.lml:8.3f}   "
          f"validation NMSE {err:.3e}")

# pointwise predictions come with variances; at training points the
# residuals sit at the fitted noise level (forcing the noise to its
# floor would make the surrogate interpolate exactly)
fitted = fit(design.points, y_train, TrendSpec.from_token("constant", 1), model,
             OptimizerConfig(restarts=10), np.random.default_rng(5))
print("fitted noise level:", fitted.hp.noise_std)
mean, var = predict(fitted, design.points)
print("max |mean - y| at training points:", np.max(np.abs(mean - y_train)))
print("max variance at training points:  ", var.max())

grid = np.linspace(0.02, 0.98, 9)[:, None]
mean, var = predict(fitted, grid)
for u, m, v in zip(grid[:, 0], mean, np.sqrt(var)):
    print(f"u={u:.2f}  prediction {m:7.3f} +- {v:.3f}")
