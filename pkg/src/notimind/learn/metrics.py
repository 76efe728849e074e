from dataclasses import dataclass

import numpy as np

from ..errors import EmptyConfusion
from ._base import CLASSES, class_index


def confusion_matrix(y_true, y_pred):
    """3x3 counts; rows are true classes, columns predictions, order (-1, 0, 1)."""
    t = class_index(np.asarray(y_true))
    p = class_index(np.asarray(y_pred))
    if len(t) != len(p):
        raise ValueError("y_true and y_pred differ in length")
    out = np.zeros((len(CLASSES), len(CLASSES)), dtype=int)
    np.add.at(out, (t, p), 1)
    return out


@dataclass(frozen=True)
class FMeasure:
    precision: tuple
    recall: tuple
    per_class: tuple
    macro: float
    undefined: tuple  # per class: no predictions and no true rows

    @property
    def any_undefined(self):
        return any(self.undefined)


def f_measure(confusion):
    """Per-class one-vs-rest F (harmonic mean of precision and recall) and macro F.

    Precision with no predictions, recall with no true rows, and F with
    ``precision + recall = 0`` are all taken as 0.  A class with neither
    predictions nor true rows is flagged in ``undefined``; it still enters
    the macro average as 0.
    """
    cm = np.asarray(confusion)
    if cm.shape != (len(CLASSES), len(CLASSES)):
        raise ValueError(f"expected a {len(CLASSES)}x{len(CLASSES)} matrix")
    if np.any(cm < 0):
        raise ValueError("confusion counts must be non-negative")
    if cm.sum() == 0:
        raise EmptyConfusion("confusion matrix is empty")
    tp = np.diag(cm).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    actual = cm.sum(axis=1).astype(float)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    denom = precision + recall
    f = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return FMeasure(
        precision=tuple(precision.tolist()),
        recall=tuple(recall.tolist()),
        per_class=tuple(f.tolist()),
        macro=float(f.mean()),
        undefined=tuple(((predicted == 0) & (actual == 0)).tolist()),
    )


def macro_f(y_true, y_pred):
    return f_measure(confusion_matrix(y_true, y_pred)).macro
