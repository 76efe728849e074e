import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..errors import ArityMismatch

# Fixed class order; model outputs index into this array.
CLASSES = np.array([-1, 0, 1])


def class_index(y):
    y = np.asarray(y)
    idx = np.searchsorted(CLASSES, y)
    bad = (idx >= len(CLASSES)) | (CLASSES[np.minimum(idx, len(CLASSES) - 1)] != y)
    if np.any(bad):
        raise ValueError(f"labels must be in {CLASSES.tolist()}, got {np.unique(y[bad]).tolist()}")
    return idx


def one_hot(y):
    idx = class_index(y)
    out = np.zeros((len(idx), len(CLASSES)))
    out[np.arange(len(idx)), idx] = 1.0
    return out


def logits_to_classes(logits):
    """Argmax over the class axis, mapped to labels (first maximum wins)."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    return CLASSES[np.argmax(logits, axis=1)]


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def cross_entropy(P, Y):
    return float(-np.sum(Y * np.log(np.clip(P, 1e-300, None))) / len(Y))


def validate_fit(X, y):
    X, y = check_X_y(X, y, dtype=float)
    class_index(y)
    return X, y


def validate_predict(estimator, X):
    check_is_fitted(estimator)
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[0] == 0:
        if X.shape[1] != estimator.n_features_in_:
            raise ArityMismatch(
                f"model expects {estimator.n_features_in_} columns, got {X.shape[1]}"
            )
        return X
    X = check_array(X, dtype=float)
    if X.shape[1] != estimator.n_features_in_:
        raise ArityMismatch(f"model expects {estimator.n_features_in_} columns, got {X.shape[1]}")
    return X
