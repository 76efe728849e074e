import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import NonFiniteLoss
from ._base import CLASSES, cross_entropy, logits_to_classes, one_hot, softmax, validate_fit, validate_predict


def softmax_loss_grad(W, b, X, Y):
    """Mean cross-entropy of a softmax regression and its gradient.

    ``W`` has shape ``(n_features, n_classes)``, ``Y`` is one-hot.
    Returns ``(loss, dW, db)``.
    """
    P = softmax(X @ W + b)
    dZ = (P - Y) / len(X)
    return cross_entropy(P, Y), X.T @ dZ, dZ.sum(axis=0)


class SoftmaxRegression(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression fit by full-batch gradient descent.

    Weights start at zero, so ``random_state`` has no effect; it is accepted
    so every classifier shares one constructor signature.
    """

    def __init__(self, epochs=500, learning_rate=0.3, random_state=None):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_fit(X, y)
        Y = one_hot(y)
        W = np.zeros((X.shape[1], len(CLASSES)))
        b = np.zeros(len(CLASSES))
        losses = []
        # divergence surfaces as NonFiniteLoss rather than numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(self.epochs):
                loss, dW, db = softmax_loss_grad(W, b, X, Y)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(epoch)
                losses.append(loss)
                W -= self.learning_rate * dW
                b -= self.learning_rate * db
        self.weights_ = W
        self.bias_ = b
        self.loss_curve_ = losses
        self.classes_ = CLASSES
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        X = validate_predict(self, X)
        return X @ self.weights_ + self.bias_

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        if len(scores) == 0:
            return np.empty(0, dtype=int)
        return logits_to_classes(scores)
