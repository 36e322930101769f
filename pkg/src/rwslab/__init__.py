"""Randomized wavelet series on the torus: synthesis, estimation, experiments."""

from .constructions import (
    NestedPlacement,
    block_witness_process,
    coefficient_exceedances,
    dense_unbounded_field,
    divergence_scale_field,
    divergence_scales,
    divergent_subsequence,
    geometric_scale_ratio,
    nested_placement,
    sparse_loglog_field,
    sparse_loglog_rate,
    support_spacing,
    thin_to_feasible,
    two_sign_tree_field,
    unbounded_series_field,
)
from .errors import (
    InsufficientDataError,
    InvalidParameterError,
    InvalidPreconditionError,
    NoDivergenceSequenceError,
    NumericalFailureError,
    PlacementInfeasibleError,
    RwsLabError,
)
from .estimators import (
    ModulusFit,
    PowerLogModulus,
    SupGrowthProfile,
    analysis_field,
    empirical_scale_envelope,
    export_modulus_csv,
    export_profile_csv,
    hmin_estimate,
    modulus_ratio,
    regular_modulus_check,
    sup_growth,
)
from .experiments import (
    EXPERIMENT_NAMES,
    Experiment,
    config_digest,
    default_config,
    resolve_config,
    run_experiment,
)
from .fields import (
    CoefficientField,
    CriterionDecision,
    HolderFit,
    PowerLogRate,
    ScaleEnvelope,
    check_criterion,
    envelope_from_rate,
    export_envelope_csv,
    field_digest,
    holder_fit,
    load_field_json,
    save_field_json,
    scale_envelope,
    step_function_coefficients,
    uniform_decay_field,
    zero_field,
)
from .laws import (
    RandomLaw,
    bernoulli,
    bounded_uniform,
    divergence_sequence,
    draw,
    draw_array,
    exp_tail,
    gaussian,
    gaussian_max_check,
    half_tail_threshold,
    heavy_tail,
    law_string,
    log_tail_probability,
    parse_law,
    rademacher,
    tail_probability,
)
from .synthesis import (
    BlockEnergySummary,
    SamplePath,
    dyadic_block_energies,
    export_path_csv,
    fourier_sawtooth,
    randomized_field,
    randomized_synthesize,
    synthesize,
    wiener_brownian,
)
from .wavelets import (
    DyadicInterval,
    MotherWaveletTable,
    ScalingFilter,
    build_filter,
    cascade_evaluate,
    eval_periodized,
)

__version__ = "0.1.0"

__all__ = [
    "BlockEnergySummary",
    "CoefficientField",
    "CriterionDecision",
    "DyadicInterval",
    "EXPERIMENT_NAMES",
    "Experiment",
    "HolderFit",
    "InsufficientDataError",
    "InvalidParameterError",
    "InvalidPreconditionError",
    "ModulusFit",
    "MotherWaveletTable",
    "NestedPlacement",
    "NoDivergenceSequenceError",
    "NumericalFailureError",
    "PlacementInfeasibleError",
    "PowerLogModulus",
    "PowerLogRate",
    "RandomLaw",
    "RwsLabError",
    "SamplePath",
    "ScaleEnvelope",
    "ScalingFilter",
    "SupGrowthProfile",
    "analysis_field",
    "bernoulli",
    "block_witness_process",
    "bounded_uniform",
    "build_filter",
    "cascade_evaluate",
    "check_criterion",
    "coefficient_exceedances",
    "config_digest",
    "default_config",
    "dense_unbounded_field",
    "divergence_scale_field",
    "divergence_scales",
    "divergence_sequence",
    "divergent_subsequence",
    "draw",
    "draw_array",
    "dyadic_block_energies",
    "empirical_scale_envelope",
    "envelope_from_rate",
    "eval_periodized",
    "exp_tail",
    "export_envelope_csv",
    "export_modulus_csv",
    "export_path_csv",
    "export_profile_csv",
    "field_digest",
    "fourier_sawtooth",
    "gaussian",
    "gaussian_max_check",
    "geometric_scale_ratio",
    "half_tail_threshold",
    "heavy_tail",
    "hmin_estimate",
    "holder_fit",
    "law_string",
    "load_field_json",
    "log_tail_probability",
    "modulus_ratio",
    "nested_placement",
    "parse_law",
    "rademacher",
    "randomized_field",
    "randomized_synthesize",
    "regular_modulus_check",
    "resolve_config",
    "run_experiment",
    "save_field_json",
    "scale_envelope",
    "sparse_loglog_field",
    "sparse_loglog_rate",
    "step_function_coefficients",
    "sup_growth",
    "support_spacing",
    "synthesize",
    "tail_probability",
    "thin_to_feasible",
    "two_sign_tree_field",
    "unbounded_series_field",
    "uniform_decay_field",
    "wiener_brownian",
    "zero_field",
    "__version__",
]
