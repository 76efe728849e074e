import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state

from ..errors import NonFiniteLoss
from ._base import (
    CLASSES,
    cross_entropy,
    logits_to_classes,
    one_hot,
    sigmoid,
    softmax,
    validate_fit,
    validate_predict,
)

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def default_hidden_size(n_features, n_classes=len(CLASSES)):
    return math.ceil((n_features + n_classes) / 2)


def mlp_forward(params, X):
    H = sigmoid(X @ params["W1"] + params["b1"])
    return H, softmax(H @ params["W2"] + params["b2"])


def mlp_loss_grad(params, X, Y):
    """Mean cross-entropy of a one-hidden-layer sigmoid net and its backprop gradient."""
    H, P = mlp_forward(params, X)
    dZ2 = (P - Y) / len(X)
    dH = dZ2 @ params["W2"].T
    dZ1 = dH * H * (1.0 - H)
    grads = {
        "W1": X.T @ dZ1,
        "b1": dZ1.sum(axis=0),
        "W2": H.T @ dZ2,
        "b2": dZ2.sum(axis=0),
    }
    return cross_entropy(P, Y), grads


def init_params(n_features, hidden_size, rng, n_classes=len(CLASSES)):
    """Uniform [-0.5, 0.5] initialisation of every weight and bias."""
    return {
        "W1": rng.uniform(-0.5, 0.5, size=(n_features, hidden_size)),
        "b1": rng.uniform(-0.5, 0.5, size=hidden_size),
        "W2": rng.uniform(-0.5, 0.5, size=(hidden_size, n_classes)),
        "b2": rng.uniform(-0.5, 0.5, size=n_classes),
    }


def momentum_step(params, grads, velocity, learning_rate, momentum):
    """One update: ``v <- momentum * v - lr * grad``; ``param <- param + v``."""
    for name in PARAM_NAMES:
        velocity[name] = momentum * velocity[name] - learning_rate * grads[name]
        params[name] = params[name] + velocity[name]
    return params, velocity


class FeedForwardNet(ClassifierMixin, BaseEstimator):
    """Feed-forward network with one sigmoid hidden layer and a softmax output.

    Trained by full-batch backpropagation with classical momentum.

    Parameters
    ----------
    hidden_size : int or None
        Hidden units; ``None`` means ``ceil((n_features + 3) / 2)``.
    epochs : int
        Number of training cycles.
    learning_rate, momentum : float
        Step size and the fraction of the previous update added to the next.
    random_state : int, RandomState or None
        Seeds the uniform weight initialisation.
    """

    def __init__(self, hidden_size=None, epochs=500, learning_rate=0.3, momentum=0.2,
                 random_state=None):
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_fit(X, y)
        Y = one_hot(y)
        hidden = self.hidden_size or default_hidden_size(X.shape[1])
        if hidden < 1:
            raise ValueError("hidden_size must be at least 1")
        rng = check_random_state(self.random_state)
        params = init_params(X.shape[1], hidden, rng)
        velocity = {name: np.zeros_like(value) for name, value in params.items()}
        losses = []
        # divergence surfaces as NonFiniteLoss rather than numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(self.epochs):
                loss, grads = mlp_loss_grad(params, X, Y)
                if not np.isfinite(loss):
                    raise NonFiniteLoss(epoch)
                losses.append(loss)
                params, velocity = momentum_step(params, grads, velocity,
                                                 self.learning_rate, self.momentum)
        self.params_ = params
        self.hidden_size_ = hidden
        self.loss_curve_ = losses
        self.classes_ = CLASSES
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        X = validate_predict(self, X)
        return mlp_forward(self.params_, X)[1]

    def predict(self, X):
        proba = self.predict_proba(X)
        if len(proba) == 0:
            return np.empty(0, dtype=int)
        return logits_to_classes(proba)
