"""Random forest: training, prediction, evaluation, serialization, export."""

from opttriage.forest.export import decision_function_ast, decide, export_decision_code
from opttriage.forest.kernels import ENV_VAR, active_backend, available_backends, warm_up
from opttriage.forest.model import (
    EASY,
    HARD,
    LABEL_NAMES,
    ForestParams,
    ModelFormatError,
    RandomForestModel,
    Split,
    Tree,
    best_split,
    build_tree,
    cross_validate,
    dumps_model,
    evaluate,
    gini,
    hard_votes,
    load_model,
    loads_model,
    predict,
    predict_batch,
    save_model,
    train,
)

__all__ = [
    "EASY",
    "ENV_VAR",
    "HARD",
    "LABEL_NAMES",
    "ForestParams",
    "ModelFormatError",
    "RandomForestModel",
    "Split",
    "Tree",
    "active_backend",
    "available_backends",
    "best_split",
    "build_tree",
    "cross_validate",
    "decide",
    "decision_function_ast",
    "dumps_model",
    "evaluate",
    "export_decision_code",
    "gini",
    "hard_votes",
    "load_model",
    "loads_model",
    "predict",
    "predict_batch",
    "save_model",
    "train",
    "warm_up",
]
