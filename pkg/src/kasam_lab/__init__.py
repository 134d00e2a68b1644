"""Spline additive models and a continual-learning training lab."""

from .splines import (
    ActiveWindow,
    SparseGrad,
    Spline1D,
    SplineBasis,
    activation,
    activation_deriv,
    active_window,
    design_matrix,
    eval1d,
    grad1d,
    make_basis,
    stack_design,
)
from .models import (
    AnnModel,
    FlatParams,
    KasamModel,
    ModelConfig,
    SamModel,
    clone_model,
    init_model,
    load_model,
    save_model,
)
from .training import (
    AdamState,
    Dataset,
    TrainConfig,
    TrainHistory,
    adam_step,
    mae,
    pseudo_rehearsal_mix,
    snapshot_labels,
    train,
)
from .experiments import (
    EXPERIMENTS,
    MODEL_KINDS,
    ExperimentSpec,
    Grid,
    StudySummary,
    TrialResult,
    function_grid,
    interference_grid,
    make_dataset,
    run_study,
    run_trial,
    summarize,
    target,
    trial_datasets,
    welch_test,
)

__version__ = "0.1.0"
