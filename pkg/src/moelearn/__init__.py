"""moelearn: parameter recovery for mixture-of-experts models.

The regressors are learned by SGD on a designed quartic loss whose local
minima are global; the gating parameters are then learned by projected
gradient descent on the log-likelihood with the regressors held fixed.
EM and joint mean-squared-error SGD baselines, the tensor identities the
quartic loss rests on, and an experiment harness are included.
"""

from .model import (
    IDENTITY,
    RELU,
    SIGMOID,
    Dataset,
    InvalidParameters,
    MoEParameters,
    Nonlinearity,
    RegularizationConfig,
    ground_truth_paper_instance,
    init_random,
    leaky_relu,
    load_parameters,
    save_parameters,
    validate,
)
from .transforms import (
    NonlinearityProfile,
    OutputCoefficients,
    TensorConstants,
    make_profile,
    solve_output_coefficients,
)
from .datagen import (
    StandardGaussian,
    SymmetricGaussianMixture,
    gating_probs,
    sample_inputs,
    sample_moe,
)
from .losses import (
    GatingContext,
    L4Context,
    l2_gradients,
    l2_value,
    l4_gradient,
    l4_population_oracle,
    l4_value,
    llog_gradient_w,
    llog_value,
    posterior,
)
from .optim import (
    ContractionReport,
    TrainConfig,
    Trajectory,
    contraction_diagnostic,
    project_omega,
    projected_gd_gating,
    sgd_l4,
)
from .baselines import EmConfig, em_step, gradient_em_step_gating, l2_joint_sgd, run_em
from .metrics import MatchResult, gating_error, regressor_error, resolve_signs
from .gru_bridge import GruParams, gru_step_binary, hmoe_step, moe2_conditional_mean
from .harness import ExperimentConfig, ResultTable, make_config, run_preset, run_verification

__version__ = "0.1.0"
