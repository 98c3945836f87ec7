"""Threshold visibility for local-hidden-variable representability.

The damped singlet's joint outcome probabilities admit a local model
exactly when the visibility is small enough.  This package pins the
threshold four independent ways: an exact Legendre-series construction
(1/3), an SVD-based Monte-Carlo max-min search over discrete models, a
linear-programming oracle over deterministic strategies for small
instances, and the classical Bell (2/3) and CHSH (1/sqrt(2)) bounds.
"""

__version__ = "0.1.0"

from .analytic import (
    LegendreLhvModel,
    analytic_threshold,
    model_for_visibility,
    reconstruct_joint,
    response,
    validity_flip_visibility,
    validity_scan,
)
from .construct import (
    DEFAULT_RHO_MIN,
    AuxiliaryFrame,
    DiscreteLhvModel,
    GramSvd,
    SettingsEnsemble,
    ValidationReport,
    assemble_model,
    biorthogonalize,
    floor_normalized_weights,
    gram_svd,
    make_frame,
    project_out,
    raw_tables,
    validate_model,
    visibility_from_tables,
)
from .core import (
    Direction,
    legendre,
    quantum_joint,
    quantum_marginal,
    sphere_quadrature,
)
from .errors import (
    ConstructionFailureError,
    InvalidInputError,
    InvalidModelError,
    LvtError,
    ResourceLimitError,
)
from .estimate import VisibilityEstimate
from .inequalities import (
    BEST_PRIOR_GENERAL_SETTINGS_BOUND,
    PRIOR_GENERAL_SETTINGS_BOUNDS,
    BellConfiguration,
    BellThresholdResult,
    ChshConfiguration,
    ChshThresholdResult,
    aligned_chsh_configuration,
    bell_lhs,
    bell_threshold_numeric,
    chsh_angle_lhs,
    chsh_lhs,
    chsh_threshold_numeric,
)
from .oracle import (
    MAX_ORACLE_SETTINGS,
    DeterministicStrategy,
    enumerate_strategies,
    max_visibility_for_gram,
    max_visibility_lp,
)
from .search import (
    PowerLawFit,
    SearchConfig,
    extrapolate,
    fit_power_law,
    inner_maximize,
    n_sweep,
    outer_minimize,
    perturb_settings,
    state_to_model,
)

__all__ = [
    "__version__",
    "AuxiliaryFrame",
    "BellConfiguration",
    "BellThresholdResult",
    "BEST_PRIOR_GENERAL_SETTINGS_BOUND",
    "ChshConfiguration",
    "ChshThresholdResult",
    "ConstructionFailureError",
    "DEFAULT_RHO_MIN",
    "DeterministicStrategy",
    "Direction",
    "DiscreteLhvModel",
    "GramSvd",
    "InvalidInputError",
    "InvalidModelError",
    "LegendreLhvModel",
    "LvtError",
    "MAX_ORACLE_SETTINGS",
    "PRIOR_GENERAL_SETTINGS_BOUNDS",
    "PowerLawFit",
    "ResourceLimitError",
    "SearchConfig",
    "SettingsEnsemble",
    "ValidationReport",
    "VisibilityEstimate",
    "aligned_chsh_configuration",
    "analytic_threshold",
    "assemble_model",
    "bell_lhs",
    "bell_threshold_numeric",
    "biorthogonalize",
    "chsh_angle_lhs",
    "chsh_lhs",
    "chsh_threshold_numeric",
    "enumerate_strategies",
    "extrapolate",
    "fit_power_law",
    "floor_normalized_weights",
    "gram_svd",
    "inner_maximize",
    "legendre",
    "make_frame",
    "max_visibility_for_gram",
    "max_visibility_lp",
    "model_for_visibility",
    "n_sweep",
    "outer_minimize",
    "perturb_settings",
    "project_out",
    "quantum_joint",
    "quantum_marginal",
    "raw_tables",
    "reconstruct_joint",
    "response",
    "sphere_quadrature",
    "state_to_model",
    "validate_model",
    "validity_flip_visibility",
    "validity_scan",
    "visibility_from_tables",
]
