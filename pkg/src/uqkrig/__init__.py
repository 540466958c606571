"""Universal kriging with quantile-transformed trend bases for probabilistic inputs.

Surrogate models are built in the i.i.d. uniform space reached through
the Rosenblatt transformation of the physical inputs; trend basis
polynomials can be defined in the physical space and carried into the
uniform space through the inverse transformation.  Hyperparameters are
estimated by maximizing the log marginal likelihood with analytic
gradients.
"""

from .benchmarks import Benchmark, registry
from .design import Design, maximin_lhs
from .distributions import Marginal
from .experiment import (ExperimentRecord, ExperimentSettings, nmse,
                         nmse_values, run_experiment, summarize)
from .gp import FittedModel, build_fitted, fit, lml_grad_simple, \
    lml_grad_universal, lml_simple, lml_universal, predict
from .input_model import JointInputModel
from .kernel import HyperParams, cross_kernel, kernel_eval, kernel_matrix
from .optimize import OptimizerConfig, maximize
from .trend import TrendSpec, basis_eval

__version__ = "0.1.0"

__all__ = [
    "Benchmark", "Design", "ExperimentRecord", "ExperimentSettings",
    "FittedModel", "HyperParams", "JointInputModel", "Marginal",
    "OptimizerConfig", "TrendSpec", "basis_eval", "build_fitted",
    "cross_kernel", "fit", "kernel_eval", "kernel_matrix", "lml_grad_simple",
    "lml_grad_universal", "lml_simple", "lml_universal", "maximin_lhs",
    "maximize", "nmse", "nmse_values", "predict", "registry",
    "run_experiment", "summarize",
]
