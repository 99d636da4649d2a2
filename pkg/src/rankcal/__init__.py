"""Class-probability estimation from ranking scores.

Train a linear pairwise ranker with SGD, post-process its scores with
isotonic regression, and compare against logistic / truncated-linear /
combined baselines on real or synthetic data.
"""

from .calibration import (
    CalibratedModel,
    CalibrationMap,
    PavBlock,
    PuEstimate,
    apply_map,
    apply_map_many,
    calibrate,
    estimate_c,
    expand_pav,
    fit_isotonic,
    fit_pav,
    pu_adjust,
)
from .data import (
    Dataset,
    FeatureVector,
    ScalingParams,
    SplitSpec,
    load_dense,
    load_sparse,
    save_sparse,
    split,
    split_indices,
    standardize,
)
from .evaluation import (
    EvalOptions,
    EvalReport,
    TieMode,
    auc,
    evaluate,
    mse,
    mse_to_truth,
    profit,
    prop2_bound,
    worst_case_ranking,
)
from .learners import (
    LinearModel,
    LossKind,
    TrainConfig,
    pairwise_sgd_step,
    pointwise_sgd_step,
    predict_probability,
    predict_score,
    sigmoid,
    train,
)
from .model_io import load_model, save_model
from .synthetic import (
    CappedLinkConfig,
    SweepRow,
    generate,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "CalibratedModel",
    "CalibrationMap",
    "CappedLinkConfig",
    "Dataset",
    "EvalOptions",
    "EvalReport",
    "FeatureVector",
    "LinearModel",
    "LossKind",
    "PavBlock",
    "PuEstimate",
    "ScalingParams",
    "SplitSpec",
    "SweepRow",
    "TieMode",
    "TrainConfig",
    "apply_map",
    "apply_map_many",
    "auc",
    "calibrate",
    "estimate_c",
    "evaluate",
    "expand_pav",
    "fit_isotonic",
    "fit_pav",
    "generate",
    "load_dense",
    "load_model",
    "load_sparse",
    "mse",
    "mse_to_truth",
    "pairwise_sgd_step",
    "pointwise_sgd_step",
    "predict_probability",
    "predict_score",
    "profit",
    "prop2_bound",
    "pu_adjust",
    "save_model",
    "save_sparse",
    "sigmoid",
    "split",
    "split_indices",
    "standardize",
    "sweep",
    "train",
    "worst_case_ranking",
]
