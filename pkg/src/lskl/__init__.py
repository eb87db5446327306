"""Divergence computations, minimum-divergence projections, and
divergence-based Bayesian model selection for location-scale families."""

from .divergence import (
    CLOSED_FORM_PAIRS,
    KLValue,
    kl_closed_form,
    kl_divergence,
    kl_monte_carlo,
    kl_quadrature,
    sample_kl,
    support_included,
)
from .errors import (
    DataModelMismatchError,
    IntegrationFailureError,
    LsklError,
    MLEFailureError,
    NoClosedFormError,
    NoModelExplainsDataError,
    OptimizationFailureError,
    ParseError,
)
from .families import (
    EULER_GAMMA,
    FAMILIES,
    Dataset,
    FamilySpec,
    ModelInstance,
    TransformSpec,
    default_params,
    get_family,
    instance,
    log_density,
    log_density_vec,
    log_mean_var,
    mean_var,
    model_text,
    moment,
    parse_model,
    sample,
    support,
    to_location_scale,
)
from .minkl import (
    ANALYTIC_PAIRS,
    IndependenceReport,
    MinKLResult,
    OptimizerOptions,
    fit_mle,
    independence_check,
    min_kl,
    min_kl_analytic,
    min_kl_numeric,
    min_kl_via_mle,
)
from .priors import (
    PUBLISHED_LOSSES,
    ModelPriorPair,
    ParameterPrior,
    expected_min_kl,
    grid_prior,
    loggrid_prior,
    model_prior_pair,
    parse_prior,
    parse_setting_grid,
    point_prior,
    sampler_prior,
)
from .selection import (
    BerkReport,
    PosteriorOdds,
    berk_consistency_sim,
    default_grid_prior,
    marginal_likelihood,
    posterior_odds,
)

__version__ = "0.1.0"

__all__ = [
    "CLOSED_FORM_PAIRS",
    "ANALYTIC_PAIRS",
    "PUBLISHED_LOSSES",
    "FAMILIES",
    "EULER_GAMMA",
    "FamilySpec",
    "TransformSpec",
    "ModelInstance",
    "Dataset",
    "KLValue",
    "MinKLResult",
    "IndependenceReport",
    "OptimizerOptions",
    "ParameterPrior",
    "ModelPriorPair",
    "PosteriorOdds",
    "BerkReport",
    "LsklError",
    "ParseError",
    "NoClosedFormError",
    "DataModelMismatchError",
    "IntegrationFailureError",
    "OptimizationFailureError",
    "MLEFailureError",
    "NoModelExplainsDataError",
    "get_family",
    "default_params",
    "instance",
    "parse_model",
    "model_text",
    "log_density",
    "log_density_vec",
    "moment",
    "mean_var",
    "log_mean_var",
    "support",
    "support_included",
    "to_location_scale",
    "sample",
    "kl_divergence",
    "kl_closed_form",
    "kl_quadrature",
    "kl_monte_carlo",
    "sample_kl",
    "min_kl",
    "min_kl_analytic",
    "min_kl_numeric",
    "min_kl_via_mle",
    "fit_mle",
    "independence_check",
    "parse_prior",
    "parse_setting_grid",
    "point_prior",
    "grid_prior",
    "loggrid_prior",
    "sampler_prior",
    "expected_min_kl",
    "model_prior_pair",
    "marginal_likelihood",
    "posterior_odds",
    "berk_consistency_sim",
    "default_grid_prior",
]
