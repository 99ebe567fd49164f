"""Rank-one cutting-and-stacking transformations.

Construct transformations from their defining parameters, realize them
as finite towers with certified correlation error bounds, fit weak
limits of powers, test p/q-similarity disjointness evidence, and run
Mobius-independence experiments including the exact telescoping
identities of the prime-extension argument.
"""

from .construction import (
    ClassKind,
    ClassLabel,
    ConstructionParams,
    StageParams,
    Window,
    WindowSet,
    bounded_profile,
    chacon,
    class4,
    classify,
    cyclic_factor_preset,
    eigenvalue_order,
    find_windows,
    flat3,
    flatness,
    heights,
    odometer,
    preset,
    return_times,
)
from .errors import (
    ConfigError,
    ConsistencyFailure,
    DepthTooShallow,
    NotBounded,
    OdometerCase,
    RankOneError,
    StageUnavailable,
)
from .limits import (
    DepthPolicy,
    DisjointnessVerdict,
    FitTolerances,
    LimitPolynomial,
    SimilarityVerdict,
    SupportSet,
    Verdict,
    WeakLimitResult,
    auto_ref_stage,
    disjointness_certificate,
    divisibility_cascade,
    fit_for_shift,
    fit_limit_polynomial,
    flatness_consequence,
    full_window,
    h_sequence,
    is_pq_similar,
    match_identity_mix,
    weak_limit,
)
from .mobius import MobiusTable, gcd_all, mobius_direct, residue_mertens, sieve_mobius
from .sarnak import (
    FactorPartition,
    Observable,
    compact_factor,
    decompose_observable,
    mobius_weighted_sum,
    prime_extension_report,
    telescope_identity_check,
)
from .tower import (
    CorrelationMatrix,
    LevelSet,
    ReferenceLevel,
    Spacer,
    TowerModel,
    build_labels,
    correlation_matrix,
    level_measures,
    orbit_labels,
    tail_bound,
)

__version__ = "0.1.0"
