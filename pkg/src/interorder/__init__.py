"""Multi-order game-theoretic interaction analysis for black-box models."""

from .attacks import (
    AttackConfig,
    AttackResult,
    RecoveryRecord,
    attacking_utility,
    cutout_mask,
    dropout_defense,
    pgd_attack,
    recoverability_experiment,
)
from .decomposition import (
    AttackDecomposition,
    DetectorScore,
    decompose_attack,
    detector_score,
    multiorder_shapley_bridge_check,
    rank_auc,
)
from .errors import (
    CapacityExceededError,
    ConfigError,
    InterorderError,
    InvalidArgumentError,
    NumericFailureError,
    TrainingFailureError,
)
from .exact import (
    ExactEngine,
    ExactReport,
    dropout_expected_value,
    efficiency_residual,
    multiorder_interaction_exact,
    multiorder_shapley_exact,
    shapley_exact,
    shapley_interaction_exact,
)
from .game import Coalition, ValueOracle, coalitions_of_size, delta_v, full_coalition
from .infoeq import (
    DiscreteJoint,
    conditional_entropy,
    conditional_mi,
    conditional_three_way_mi,
    entropy_oracle,
    make_xor_joint,
    proposition1_check,
    random_joint,
)
from .masking import (
    BaselineSpec,
    GridPartition,
    OutputFunctional,
    masked_input,
    model_value_oracle,
)
from .models import (
    SyntheticDataset,
    ToyClassifier,
    TrainConfig,
    make_pattern_dataset,
    train,
)
from .sampling import (
    DeltaProfile,
    InteractionProfile,
    SamplingPlan,
    aggregate_over_samples,
    delta_profiles,
    estimate_disentanglement,
    estimate_profile,
    exact_profile,
)

__version__ = "0.1.0"
