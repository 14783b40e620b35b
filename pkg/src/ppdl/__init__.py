"""Distribution learning from public and private samples under pure DP."""

from .distributions import (
    Dataset,
    Distribution,
    FiniteDist,
    GaussianParams,
    MixtureParams,
    ProductParams,
    density,
    dim,
    dist_from_dict,
    dist_from_json,
    dist_to_dict,
    dist_to_json,
    sample,
)
from .compression import (
    CandidateSet,
    CompressionScheme,
    Encoding,
    GridSpec,
    compression_from_list_learner,
    decode,
    default_grid,
    encode_gaussian,
    enumerate_gaussian_grid,
    gaussian_candidate_grid,
    gaussian_fit,
    gaussian_grid_scheme,
    mixture_candidates,
    packing_list_size,
    product_candidates,
)
from .selection import (
    AuditLog,
    PrivacyBudget,
    ScheffeTable,
    SelectionResult,
    dp_select,
    exponential_mechanism,
    scheffe_candidate,
    scheffe_empirical,
    utilities,
)
from .tv import (
    point_set_distance,
    tv_between,
    tv_exact_gaussian_1d,
    tv_finite,
    tv_lower_bound_1d,
    tv_monte_carlo,
)
from .yatracos import (
    SmallDbResult,
    YatracosOutcome,
    minimum_distance_select,
    public_cover,
    representative_domain,
    smalldb,
    yatracos_class,
    yatracos_learn,
)
from .lowerbound import (
    CylinderSpec,
    FlatGaussianParams,
    NflBudgets,
    c_value,
    decay_checks,
    estimate_eta,
    estimate_rk,
    estimate_sk,
    make_flat_gaussian,
    nfl_report,
    sample_instance,
    tv_far_certificate,
    u_k_value,
)
from .pipeline import (
    ExperimentSpec,
    FamilySpec,
    LearnerConfig,
    error_decomposition,
    fixed_anchor_candidates,
    format_experiment_csv,
    generate_candidates,
    pp_learn,
    pp_learn_agnostic_shifted,
    run_experiment,
    suggest_n,
)

__version__ = "0.1.0"
