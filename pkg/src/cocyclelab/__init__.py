"""Computational ergodic theory over GF(2): coboundaries, skew products,
induced maps, Koopman correlation statistics, and the discrete 2D cochain
complex, with exact finite models and seeded statistical experiments."""

from .cobound import (
    CoboundaryCertificate,
    CoboundaryClassification,
    ErgodicityReport,
    SkewProductSystem,
    SkewState,
    catmap_challenge,
    classify_coboundary,
    coboundary_apply,
    cohomology_rank_finite,
    ergodicity_report_to_json,
    skew_apply,
    skew_orbit,
    solve_coboundary_finite,
    stepin_test,
)
from .cohomo2d import (
    Action2D,
    cohomology_dims,
    d0,
    d1,
    solve_curl,
)
from .dynsys import (
    GOLDEN_MEAN,
    CatMap,
    FinitePermutation,
    TorusRotation,
    apply,
    cycles,
    iterate,
    orbit_points,
)
from .induced import (
    CapExceededError,
    InducedSystem,
    ReturnRecord,
    ReturnStats,
    SamplingError,
    default_cap,
    induced_apply,
    induced_orbit,
    induced_orbit_samples,
    return_stats_summary,
    return_stats_to_csv,
    return_time_stats,
    sample_points,
    ta2_ergodicity_experiment,
)
from .msets import (
    FiniteSet,
    GridSet,
    IntervalUnion,
    conditional_bin_array,
    distance,
    grid_box,
    measure,
    membership,
    membership_array,
    preimage,
    pushforward,
    random_grid_set,
    random_interval_union,
    random_rational_union,
    rational_union,
    set_from_json,
    set_to_json,
    symdiff,
)
from .spectral import (
    CorrelationSequence,
    Observable,
    SpectralDensityEstimate,
    WeakMixingReport,
    autocorrelation,
    correlation_to_csv,
    density_to_csv,
    fiber_sign,
    grid_function,
    koopman_spectrum_finite,
    spectral_density,
    torus_character,
    weak_mixing_experiment,
    wiener_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "GOLDEN_MEAN",
    "FinitePermutation",
    "TorusRotation",
    "CatMap",
    "apply",
    "iterate",
    "cycles",
    "orbit_points",
    "FiniteSet",
    "IntervalUnion",
    "GridSet",
    "symdiff",
    "measure",
    "distance",
    "membership",
    "membership_array",
    "pushforward",
    "preimage",
    "grid_box",
    "rational_union",
    "random_interval_union",
    "random_rational_union",
    "random_grid_set",
    "conditional_bin_array",
    "set_to_json",
    "set_from_json",
    "CoboundaryCertificate",
    "SkewState",
    "SkewProductSystem",
    "ErgodicityReport",
    "CoboundaryClassification",
    "coboundary_apply",
    "solve_coboundary_finite",
    "cohomology_rank_finite",
    "skew_apply",
    "skew_orbit",
    "stepin_test",
    "classify_coboundary",
    "catmap_challenge",
    "ergodicity_report_to_json",
    "CapExceededError",
    "SamplingError",
    "ReturnRecord",
    "ReturnStats",
    "InducedSystem",
    "default_cap",
    "induced_apply",
    "induced_orbit",
    "induced_orbit_samples",
    "sample_points",
    "return_time_stats",
    "return_stats_to_csv",
    "return_stats_summary",
    "ta2_ergodicity_experiment",
    "Observable",
    "torus_character",
    "fiber_sign",
    "grid_function",
    "CorrelationSequence",
    "SpectralDensityEstimate",
    "WeakMixingReport",
    "autocorrelation",
    "wiener_statistic",
    "spectral_density",
    "koopman_spectrum_finite",
    "weak_mixing_experiment",
    "correlation_to_csv",
    "density_to_csv",
    "Action2D",
    "d0",
    "d1",
    "cohomology_dims",
    "solve_curl",
]
