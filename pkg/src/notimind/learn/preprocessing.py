import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..errors import ArityMismatch, ConstantColumn


class Normalizer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Z-score scaling with the sample (n - 1) standard deviation.

    Parameters
    ----------
    on_constant : {"error", "center"}
        What to do with a column that is constant on the training rows.
        ``"error"`` raises :class:`~notimind.errors.ConstantColumn`;
        ``"center"`` only subtracts the mean (scale 1), which keeps small
        per-user training folds usable.
    columns : sequence of str, optional
        Column names, used in error messages.
    """

    def __init__(self, on_constant="error", columns=None):
        self.on_constant = on_constant
        self.columns = columns

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 2:
            raise ValueError("need at least 2 training rows to estimate a standard deviation")
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0, ddof=1)
        constant = ~(std > 0)
        if np.any(constant):
            if self.on_constant == "error":
                j = int(np.flatnonzero(constant)[0])
                name = self.columns[j] if self.columns is not None else f"x{j}"
                raise ConstantColumn(name)
            if self.on_constant != "center":
                raise ValueError(f"unknown on_constant={self.on_constant!r}")
            std = np.where(constant, 1.0, std)
        self.scale_ = std
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ArityMismatch(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        return np.asarray(X, dtype=float) * self.scale_ + self.mean_
