"""Importance-weighted kernel ridge regression with Nystrom subspaces."""
from . import _backend
from .errors import InputError, NumericalError
from .estimators import (FittedModel, SampleSet, fit_krr, fit_nystrom_wkrr, fit_path, fit_wkrr,
                         predict, solve_psd, weighted_risk)
from .kernel import KernelSpec, eval_kernel, gram, kernel_matvec
from .sampling import (LeverageProfile, NystromBasis, approx_leverage_scores,
                       effective_dimension_from_spectrum, empirical_effective_dimension,
                       exact_leverage_scores, nystrom_size_schedule, sample_als, sample_uniform)
from .simulation import (SimulationConfig, covariance_domination_check, generate_dataset, mse,
                         projection_residual, target_function)
from .weights import (ClippedWeight, ConstantWeight, GaussianParams, GaussianRatioWeight,
                      RulsifWeight, clip_weights, fit_rulsif, gaussian_ratio_weight,
                      moment_diagnostic)

BACKEND = _backend.NAME
__version__ = "0.1.0"
