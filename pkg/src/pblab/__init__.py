"""Exact Bernoulli-sum distributions, local approximations, and their checks.

The package computes the distribution of a sum of independent (or weakly
dependent) Bernoulli variables by several mutually checking exact methods,
evaluates Poisson-type and normal local approximations with explicit error
envelopes, and certifies the envelope inequalities and trend claims
empirically at finite n.
"""

from .asymptotics import (
    ApproxKind,
    DistanceReport,
    EnvelopeReport,
    approx_pmf,
    dehpfeif_ratio,
    dehpfeif_report,
    envelope_thm1,
    envelope_thm2,
    envelope_thm3,
    mmm_residual,
    normal_local_report,
    poisson_form_bracket,
    verify_sandwich,
)
from .dependent import (
    CallableModel,
    DependentModel,
    MixtureModel,
    ProductModel,
    RareSetSpec,
    RatioReport,
    SchemeDiagnostics,
    check_scheme,
    load_model,
    model_from_dict,
    pmf_dependent,
    ratio_report,
    s_tilde,
)
from .errors import (
    ConditioningError,
    HypothesisError,
    PblabError,
    SizeError,
    ValidationError,
)
from .exact import (
    Pmf,
    PoissonRef,
    SymmetricSums,
    elementary_symmetric,
    pmf_bruteforce,
    pmf_dc,
    pmf_dp,
    pmf_inclusion_exclusion,
    prob_zero_log,
    sup_cdf_distance,
    tv_distance,
)
from .profiles import (
    BernoulliProfile,
    ConditionReport,
    GrowthWindow,
    ProfileFamily,
    ProfileSummary,
    TrendVerdict,
    check_conditions,
    generate,
    load_profile,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxKind",
    "BernoulliProfile",
    "CallableModel",
    "ConditionReport",
    "ConditioningError",
    "DependentModel",
    "DistanceReport",
    "EnvelopeReport",
    "GrowthWindow",
    "HypothesisError",
    "MixtureModel",
    "PblabError",
    "Pmf",
    "PoissonRef",
    "ProductModel",
    "ProfileFamily",
    "ProfileSummary",
    "RareSetSpec",
    "RatioReport",
    "SchemeDiagnostics",
    "SizeError",
    "SymmetricSums",
    "TrendVerdict",
    "ValidationError",
    "approx_pmf",
    "check_conditions",
    "check_scheme",
    "dehpfeif_ratio",
    "dehpfeif_report",
    "elementary_symmetric",
    "envelope_thm1",
    "envelope_thm2",
    "envelope_thm3",
    "generate",
    "load_model",
    "load_profile",
    "mmm_residual",
    "model_from_dict",
    "normal_local_report",
    "pmf_bruteforce",
    "pmf_dc",
    "pmf_dependent",
    "pmf_dp",
    "pmf_inclusion_exclusion",
    "poisson_form_bracket",
    "prob_zero_log",
    "ratio_report",
    "s_tilde",
    "summarize",
    "sup_cdf_distance",
    "tv_distance",
    "verify_sandwich",
]
