"""Spectral generalization-bound auditing for small dense networks."""

from .matcore import (
    MatCoreError,
    ShapeError,
    InvalidParameterError,
    NotFiniteError,
    RankDeficientError,
    Svd,
    svd,
    singular_values,
    operator_norm,
    numeric_rank,
    rank_tolerance,
    pq_norm,
    gram_logdet,
    restricted_det,
    condition_number,
)
from .kernels import (
    KernelDivergenceError,
    kernel_trace_bound,
    sobolev_kernel,
    sobolev_gram,
    gaussian_head_norm,
)
from .network import (
    ValidationError,
    Identity,
    SmoothLeakyRelu,
    CustomActivation,
    GaussianHead,
    SoftmaxHead,
    CustomHead,
    LayerSpec,
    NetworkSpec,
    default_smoothness,
)
from .bounds import (
    VariantInapplicable,
    NotBiLipschitzError,
    BoundConstants,
    GridSpec,
    density_ratio_bound,
    density_ratio_grid_sup,
    koopman_layer_factor,
    g_factor_gaussian,
    activation_opnorm_bound,
    choose_variant,
    bound_invertible,
    bound_injective,
    bound_graph,
    bound_weighted,
    bound_combined,
    bound_combined_best,
    bound_neyshabur15,
    bound_neyshabur18,
    bound_golowich18,
    bound_bartlett17,
    default_constants,
    BoundReport,
    matrix_factor_product,
    full_report,
)
from .diagnostics import (
    layer_spectrum,
    stable_rank,
    alignment_angle,
    SpectrumLog,
    snapshot,
)
from .trainer import (
    DivergenceError,
    TrainConfig,
    TrainRun,
    Dataset,
    make_synthetic,
    load_digits,
    build_network,
    train,
    forward,
    loss_and_grads,
    regularizer_synthetic,
    regularizer_perlayer,
    gen_error_estimate,
    classification_accuracy,
)
from .rademacher import (
    InfeasibleClassError,
    FunctionClassSpec,
    sample_networks,
    empirical_rademacher_lower,
    rademacher_exact,
    rkhs_ball_rademacher,
    class_upper_bound,
)
from .weightio import WeightFileError, save_weights, load_weights

__version__ = "0.1.0"
