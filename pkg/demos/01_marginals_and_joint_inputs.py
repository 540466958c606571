"""
Marginals, joint input models and the Rosenblatt transformation
===============================================================

Builds one-dimensional marginals from moments, couples them with a
correlation, and walks points back and forth between the physical
space and the i.i.d. uniform space.
"""

import numpy as np

from uqkrig import JointInputModel, Marginal

# marginals are parameterized by (mean, std), or (lower, upper) for uniform
load = Marginal.from_moments("normal", 2000, 400)
strength = Marginal.from_moments("lognormal", 5, 0.5)
print("lognormal native parameters (mu_log, sigma_log):", strength.params)

# densities, probabilities and quantiles are vectorized
x = np.linspace(1.0, 9.0, 5)
print("pdf:", strength.pdf(x))
print("cdf:", strength.cdf(x))
print("ppf(0.5) is the median:", strength.ppf(0.5))

# a joint model: physical-space Pearson correlation of 0.5 between the
# two normal loads, realized through a Gaussian copula
moment = Marginal.from_moments("normal", 500, 100)
model = JointInputModel.build(
    [strength, load, moment],
    [[1.0, 0.0, 0.0],
     [0.0, 1.0, 0.5],
     [0.0, 0.5, 1.0]])
print("copula correlation:\n", model.copula_corr)

# the Rosenblatt transformation sends physical points to i.i.d.
# uniforms; its inverse goes back exactly
rng = np.random.default_rng(0)
x_phys = model.sample(rng, 4)
u = model.rosenblatt_forward(x_phys)
x_back = model.rosenblatt_inverse(u)
print("uniform coordinates:\n", u)
print("round-trip error:", np.max(np.abs(x_phys - x_back) / np.abs(x_phys)))

# large samples reproduce the prescribed moments and correlation
big = model.sample(rng, 200_000)
print("sample means:", big.mean(axis=0))
print("sample correlation of the load pair:", np.corrcoef(big[:, 1], big[:, 2])[0, 1])
