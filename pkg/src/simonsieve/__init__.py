"""simonsieve: exact simulator of sieve-based algorithms for Simon's problem over G^n."""

__version__ = "0.1.0"

from .groups import (
    GroupError,
    GroupSpec,
    GroupTable,
    SubgroupSpec,
    build_group,
    center,
    commutator_subgroup,
    conjugacy_class_of,
    export_group,
    involutions,
    normal_subgroups,
    parse_group_file,
    parse_group_spec,
    quotient_group,
)
from .reps import (
    CGCache,
    CGData,
    Irrep,
    IrrepCatalog,
    RepError,
    cg_multiplicities,
    cg_transform,
    compute_catalog,
    dual_rep,
    fourier_matrix,
    one_dim_reps,
    product_rep_value,
    tensor_one_dim,
)
from .hsp import (
    GuardError,
    HSPError,
    HSPInstance,
    WeakDistribution,
    check_base_condition,
    check_normal_condition,
    h_perp,
    is_missing_harmonic,
    make_instance,
    modified_oracle,
    oracle_eval,
    plancherel_distribution,
    projective_kernel,
    projector_H,
    projector_rank,
    tv_distance,
    weak_distribution,
)
from .channels import (
    ChannelError,
    CombineOutcome,
    RegisterState,
    combine,
    combine_distribution,
    coset_state_literal,
    coset_state_matrix,
    reference_combine_full,
    reference_weak_sample_full,
    weak_sample,
    weak_sample_pool,
)
from .sieve import (
    SieveConfig,
    SieveResult,
    PairingKey,
    default_coins,
    default_pool_size,
    default_rounds,
    missing_for_support,
    pairing_key,
    progress_stats,
    run_sieve,
    run_trials,
    trial_seed_rng,
    weight,
)
from .recovery import (
    GF2System,
    RecoveredInvolution,
    RecoveryConfig,
    RecoveryFailure,
    TrivialVerdict,
    char_to_row,
    identify_coordinate,
    recover,
    solve_support,
)
