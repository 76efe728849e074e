"""Normalization, classifiers, cross-validation and evaluation reports."""

import numpy as np

from ._base import CLASSES, logits_to_classes, validate_predict
from .evaluation import (
    CLASSIFIER_NAMES,
    GLOBAL,
    REGIMES,
    WITHIN,
    Dataset,
    EvaluationReport,
    cross_validate,
    make_classifier,
    summary_table,
)
from .linear import SoftmaxRegression, softmax_loss_grad
from .metrics import FMeasure, confusion_matrix, f_measure, macro_f
from .model_selection import derive_seed, leave_one_user_out, make_rng, stratified_kfold
from .neural import FeedForwardNet, default_hidden_size, mlp_loss_grad
from .persistence import load_model, save_model
from .preprocessing import Normalizer
from .svm import RbfSVC, smo_solve


def predict(model, rows):
    """Classes in {-1, 0, 1} for ``rows``; empty input gives an empty array."""
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0 and rows.ndim < 2:
        return np.empty(0, dtype=int)
    validate_predict(model, rows)
    return model.predict(rows)


__all__ = [
    "CLASSES",
    "CLASSIFIER_NAMES",
    "GLOBAL",
    "REGIMES",
    "WITHIN",
    "Dataset",
    "EvaluationReport",
    "FMeasure",
    "FeedForwardNet",
    "Normalizer",
    "RbfSVC",
    "SoftmaxRegression",
    "confusion_matrix",
    "cross_validate",
    "default_hidden_size",
    "derive_seed",
    "f_measure",
    "leave_one_user_out",
    "load_model",
    "logits_to_classes",
    "macro_f",
    "make_classifier",
    "make_rng",
    "mlp_loss_grad",
    "predict",
    "save_model",
    "smo_solve",
    "softmax_loss_grad",
    "stratified_kfold",
    "summary_table",
]
