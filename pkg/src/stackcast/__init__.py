"""Bayesian stacking of regression models with CV-estimated simplex weights.

Closed-form Bayesian linear candidates and MAP-fitted logistic candidates
are combined by weights that minimize the cross-validated squared error
over the unit simplex, alongside a Monte Carlo harness and a numerical
verifier for the hat-matrix eigenvalue bounds.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .crossval import (
    CvPredictionMatrix,
    CvScheme,
    ResidualMatrix,
    cv_matrix,
    kfold_logistic,
    loo_linear_closed_form,
    loo_linear_refit,
    residuals,
)
from .data import (
    Dataset,
    DgpConfig,
    coef_linear,
    coef_logistic,
    generate,
    load_csv,
    signal_scale,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    GridSpec,
    ResultRow,
    build_candidates,
    emit_csv,
    linear_defaults,
    load_result_csv,
    logistic_defaults,
    run_experiment,
)
from .models import (
    CandidateSpec,
    FitResult,
    GeneralNormal,
    GPrior,
    IsoNormalLogistic,
    IsotropicNormal,
    MultiT,
    expit,
    hat_diag,
    map_logistic,
    neg_log_posterior_logistic,
    posterior_mean_linear,
)
from .plotting import emit_plot
from .spectral import SpectralReport, extreme_eigs, verify_lemma1
from .stack import (
    LossRatioAccumulator,
    StackModel,
    fit_stack,
    from_document,
    predict,
    ratio_linear,
    ratio_logistic,
    to_document,
)
from .weights import WeightVector, gram, kkt_check, project_simplex, solve

__all__ = [
    "CandidateSpec",
    "CvPredictionMatrix",
    "CvScheme",
    "Dataset",
    "DgpConfig",
    "ExperimentConfig",
    "ExperimentResult",
    "FitResult",
    "GPrior",
    "GeneralNormal",
    "GridSpec",
    "IsoNormalLogistic",
    "IsotropicNormal",
    "LossRatioAccumulator",
    "MultiT",
    "ResidualMatrix",
    "ResultRow",
    "SpectralReport",
    "StackModel",
    "WeightVector",
    "backend_name",
    "build_candidates",
    "coef_linear",
    "coef_logistic",
    "cv_matrix",
    "emit_csv",
    "emit_plot",
    "expit",
    "extreme_eigs",
    "fit_stack",
    "from_document",
    "generate",
    "gram",
    "hat_diag",
    "kfold_logistic",
    "kkt_check",
    "linear_defaults",
    "load_csv",
    "load_result_csv",
    "logistic_defaults",
    "loo_linear_closed_form",
    "loo_linear_refit",
    "map_logistic",
    "neg_log_posterior_logistic",
    "posterior_mean_linear",
    "predict",
    "project_simplex",
    "ratio_linear",
    "ratio_logistic",
    "residuals",
    "run_experiment",
    "signal_scale",
    "solve",
    "to_document",
    "verify_lemma1",
]
