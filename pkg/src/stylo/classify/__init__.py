from .evaluate import ConfusionMatrix, cross_corpus_eval, evaluate, predict
from .forest import (
    ForestModel,
    ForestParams,
    ImportanceRanking,
    gini_importance,
    predict_forest,
    train_forest,
)
from .lasso import LassoModel, default_lambda_grid, lambda_max, predict_lasso, train_lasso
from .split import DatasetSplit, split

__all__ = [
    "ConfusionMatrix",
    "DatasetSplit",
    "ForestModel",
    "ForestParams",
    "ImportanceRanking",
    "LassoModel",
    "cross_corpus_eval",
    "default_lambda_grid",
    "evaluate",
    "gini_importance",
    "lambda_max",
    "predict",
    "predict_forest",
    "predict_lasso",
    "split",
    "train_forest",
    "train_lasso",
]
