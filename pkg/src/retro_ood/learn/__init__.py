"""Reference template classifier, IRMv1 training and top-k evaluation."""

from .classifier import (
    Classifier,
    ClassifierConfig,
    ClassifierLog,
    fit_arrays,
    init_params,
    predict_scores,
    product_features,
    rank_from_scores,
    train_classifier,
)
from .evaluate import DEFAULT_KS, EvalResult, best_match_rank, evaluate_topk, topk_from_ranks
from .irm import (
    IrmConfig,
    TooFewSamples,
    bin_environments,
    irm_penalty,
    irm_penalty_tensor,
    logistic_risk_grad,
    softmax_risk_grad,
)
from .synthetic import EnvTask, accuracy, make_env_task

__all__ = [
    "Classifier",
    "ClassifierConfig",
    "ClassifierLog",
    "DEFAULT_KS",
    "EnvTask",
    "EvalResult",
    "IrmConfig",
    "TooFewSamples",
    "accuracy",
    "best_match_rank",
    "bin_environments",
    "evaluate_topk",
    "fit_arrays",
    "init_params",
    "irm_penalty",
    "irm_penalty_tensor",
    "logistic_risk_grad",
    "make_env_task",
    "predict_scores",
    "product_features",
    "rank_from_scores",
    "softmax_risk_grad",
    "topk_from_ranks",
    "train_classifier",
]
