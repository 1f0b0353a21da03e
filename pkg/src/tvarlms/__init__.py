"""Time-varying autoregressions tracked by normalized LMS.

Simulation of TVAR(d) paths, local stationary covariances, NLMS and the
two-step-size bias-corrected estimator, and a seeded Monte Carlo harness for
risk, bias and rate checks.
"""
from .curves import (ParamCurve, closed_form, coefficients_from_roots, curve_eval,
                     curve_from_config, curve_from_roots, piecewise_linear, root_trajectory)
from .errors import (DomainError, NumericalError, StabilityError, TVARError,
                     ValidationError)
from .linalg import fractional_power, jacobi_eigh, operator_norm
from .local_stationary import (covariance_approx_error, local_covariance,
                               local_covariance_quadrature, local_covariance_yw,
                               local_spectral_density)
from .nlms import (NLMSTrajectory, bias_corrected_estimate, error_decomposition, nlms_run,
                   nlms_step, normalized_gain, pointwise_estimate, romberg_combine)
from .polyroots import companion, spectral_radius
from .risk import (RiskReport, Scenario, StepRule, centered_residual, compare_estimators,
                   deterministic_bias_oracle, monte_carlo_msem, msem_expansion_check,
                   predicted_bias, rate_fit, rate_fit_report, step_size_rule,
                   theorem7_residual)
from .rng import InnovationSpec, sample_innovations, stream_seed
from .tvar import (TVARPath, check_stability_class, lemma1_bounds, lipschitz_seminorm,
                   radius_bounds, simulate)

__version__ = "0.1.0"
