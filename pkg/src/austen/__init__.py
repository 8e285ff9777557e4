"""Sensitivity analysis for unobserved confounding ("Austen plots").

Given per-unit predictions (propensity g, outcome predictions q0/q1)
this package draws, for a grid of hypothetical confounder strengths,
the bias a confounder of that strength would induce in the treatment
effect estimate, and calibrates the axes by measuring how strongly the
observed covariate groups influence treatment and outcome.
"""

from ._backend import KERNEL_BACKEND, available_backends
from .bootstrap import BootstrapBand, BootstrapConfig, DotInterval, bootstrap_band
from .calibration import (
    CovariateInfluence,
    LeaveOutPredictions,
    alpha_observed,
    calibrate_groups,
    covariate_influence,
    r2_observed,
)
from .core import (
    G_CLIP,
    BiasCurve,
    ContourPoint,
    Estimand,
    PredictionFrame,
    SensitivityParams,
    bias,
    bias_contour,
    default_alpha_grid,
    delta_from_r2,
    digamma_bracket,
    r2_par,
    tau_hat,
    trigamma_variance_term,
)
from .errors import (
    AustenError,
    ConvergenceWarning,
    DegenerateDataError,
    InputValidationError,
    NumericalError,
    SchemaError,
)
from .plot import PlotData, PlotLabels, PlotStyle, build_plot_data, render_svg
from .reference_models import (
    ConservatismReport,
    Dataset,
    FitConfig,
    GroupSpec,
    conservatism_experiment,
    crossfit_predictions,
    leave_group_out_predictions,
)
from .simulator import (
    ConfoundedScenario,
    SimConfig,
    SimSample,
    cancellation_scenario,
    constant_g_config,
    default_config,
    empirical_alpha,
    empirical_alpha_variance_form,
    empirical_outcome_r2,
    monotone_scenario,
    simulate,
)
from .specfun import digamma, kernel_backend, trigamma

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "available_backends",
    "digamma",
    "trigamma",
    "kernel_backend",
    "G_CLIP",
    "Estimand",
    "PredictionFrame",
    "SensitivityParams",
    "ContourPoint",
    "BiasCurve",
    "default_alpha_grid",
    "tau_hat",
    "digamma_bracket",
    "bias",
    "trigamma_variance_term",
    "r2_par",
    "delta_from_r2",
    "bias_contour",
    "LeaveOutPredictions",
    "CovariateInfluence",
    "alpha_observed",
    "r2_observed",
    "covariate_influence",
    "calibrate_groups",
    "SimConfig",
    "SimSample",
    "ConfoundedScenario",
    "simulate",
    "empirical_alpha",
    "empirical_alpha_variance_form",
    "empirical_outcome_r2",
    "default_config",
    "constant_g_config",
    "monotone_scenario",
    "cancellation_scenario",
    "Dataset",
    "GroupSpec",
    "FitConfig",
    "ConservatismReport",
    "crossfit_predictions",
    "leave_group_out_predictions",
    "conservatism_experiment",
    "BootstrapConfig",
    "BootstrapBand",
    "DotInterval",
    "bootstrap_band",
    "PlotData",
    "PlotLabels",
    "PlotStyle",
    "build_plot_data",
    "render_svg",
    "AustenError",
    "InputValidationError",
    "SchemaError",
    "DegenerateDataError",
    "NumericalError",
    "ConvergenceWarning",
]
