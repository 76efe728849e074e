"""RBF-kernel support vector classification trained by SMO.

The binary solver works on the dual

    max  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
    s.t. 0 <= alpha_i <= C,  sum_i y_i alpha_i = 0

and at every step updates the maximal violating pair with an exact line
search, so the dual objective never decreases.  Three classes are handled
one-vs-one with pairwise voting.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import NoConvergence
from ._base import CLASSES, validate_fit, validate_predict


def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SMOResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    objective: float
    objective_trace: list = field(default_factory=list)


def dual_objective(alpha, y, K):
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def smo_solve(K, y, C=1.0, tol=1e-3, max_iter=1_000_000, record=False, pair=None):
    """Solve the binary SVM dual for kernel matrix ``K`` and labels ``y`` in {-1, +1}.

    Stops when the maximal KKT violation ``m - M`` drops below ``tol``.
    With ``record=True`` the dual objective after every step is kept in
    ``objective_trace`` (starting with the value at ``alpha = 0``).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the minimisation form 1/2 a'Qa - e'a
    diag = np.diag(K).copy()
    trace = [0.0] if record else []
    pos = y > 0
    for iteration in range(max_iter + 1):
        neg_yg = -y * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, neg_yg, -np.inf)))
        j = int(np.argmin(np.where(low, neg_yg, np.inf)))
        gap = neg_yg[i] - neg_yg[j]
        if gap < tol:
            break
        if iteration == max_iter:
            raise NoConvergence(pair, max_iter)
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        step = gap / eta
        # direction: alpha_i += y_i t, alpha_j -= y_j t
        step = min(step, C - alpha[i] if pos[i] else alpha[i])
        step = min(step, alpha[j] if pos[j] else C - alpha[j])
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        grad += step * y * (K[:, i] - K[:, j])
        if record:
            trace.append(-0.5 * float(alpha @ (grad - 1.0)))
    bias = _bias(alpha, y, grad, C)
    objective = -0.5 * float(alpha @ (grad - 1.0))
    return SMOResult(alpha, bias, iteration, objective, trace)


def _bias(alpha, y, grad, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(-yg[free].mean())
    at_upper = alpha >= C
    at_lower = alpha <= 0
    pos = y > 0
    ub_mask = (at_upper & ~pos) | (at_lower & pos)
    lb_mask = (at_upper & pos) | (at_lower & ~pos)
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if not np.isfinite(ub) or not np.isfinite(lb):
        return float(-(ub if np.isfinite(ub) else lb))
    return float(-(ub + lb) / 2.0)


@dataclass
class PairModel:
    positive: int  # class label voted for by a positive decision value
    negative: int
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    iterations: int = 0

    def decision(self, X, gamma):
        if len(self.support_vectors) == 0:
            return np.full(len(X), self.bias)
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef + self.bias


class RbfSVC(ClassifierMixin, BaseEstimator):
    """One-vs-one RBF support vector classifier for the labels -1, 0, 1.

    Parameters
    ----------
    C : float
        Box constraint on the dual variables.
    gamma : float or "auto"
        Kernel width; ``"auto"`` is ``1 / n_features``.
    tol : float
        KKT tolerance of the SMO solver.
    max_iter : int
        Iteration cap per class pair.
    random_state : ignored
        The solver is deterministic; kept for a uniform constructor.
    """

    def __init__(self, C=1.0, gamma="auto", tol=1e-3, max_iter=1_000_000, random_state=None):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_fit(X, y)
        self.gamma_ = 1.0 / X.shape[1] if self.gamma == "auto" else float(self.gamma)
        present = [c for c in CLASSES if np.any(y == c)]
        self.pairs_ = []
        for a, b in combinations(present, 2):
            mask = (y == a) | (y == b)
            Xp = X[mask]
            yp = np.where(y[mask] == a, 1.0, -1.0)
            K = rbf_kernel(Xp, Xp, self.gamma_)
            result = smo_solve(K, yp, self.C, self.tol, self.max_iter, pair=(int(a), int(b)))
            support = result.alpha > 0
            self.pairs_.append(PairModel(
                positive=int(a),
                negative=int(b),
                support_vectors=Xp[support],
                dual_coef=(result.alpha * yp)[support],
                bias=result.bias,
                iterations=result.iterations,
            ))
        self.present_classes_ = np.array(present)
        self.classes_ = CLASSES
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        """Per-pair decision values, shape ``(n_samples, n_pairs)``."""
        X = validate_predict(self, X)
        if not self.pairs_:
            return np.zeros((len(X), 0))
        return np.column_stack([pm.decision(X, self.gamma_) for pm in self.pairs_])

    def predict(self, X):
        X = validate_predict(self, X)
        if len(X) == 0:
            return np.empty(0, dtype=int)
        if len(self.present_classes_) == 1:
            return np.full(len(X), self.present_classes_[0])
        decisions = self.decision_function(X)
        votes = np.zeros((len(X), len(CLASSES)))
        margins = np.zeros((len(X), len(CLASSES)))
        for k, pm in enumerate(self.pairs_):
            d = decisions[:, k]
            pi, ni = pm.positive + 1, pm.negative + 1
            votes[:, pi] += d > 0
            votes[:, ni] += d <= 0
            margins[:, pi] += d
            margins[:, ni] -= d
        # never vote for a class absent from training
        absent = ~np.isin(CLASSES, self.present_classes_)
        votes[:, absent] = -1
        top = votes == votes.max(axis=1, keepdims=True)
        return CLASSES[np.argmax(np.where(top, margins, -np.inf), axis=1)]
