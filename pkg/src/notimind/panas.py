"""PANAS affect scores and their three-class discretization.

The affect balance (positive minus negative affect) ranges over
[-20, 20].  It is cut into classes -1 / 0 / +1 by two cut points chosen to
minimise the size-weighted entropy of the score distribution inside each
bin, where every distinct score value is treated as its own label.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import EmptyDistribution, EmptyInput, TooFewDistinctValues
from .ingest import NEGATIVE_ITEMS, PANAS_ITEMS, POSITIVE_ITEMS

__all__ = [
    "AffectScore",
    "DiscretizationModel",
    "DistributionSummary",
    "EntropyDiscretizer",
    "score",
    "entropy",
    "discretize",
    "classify",
    "distribution_report",
    "weighted_entropy",
]

_POS_IDX = [PANAS_ITEMS.index(name) for name in POSITIVE_ITEMS]
_NEG_IDX = [PANAS_ITEMS.index(name) for name in NEGATIVE_ITEMS]

# Objective values closer than this are ties; ties go to the smaller cuts.
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AffectScore:
    pa: int
    na: int

    @property
    def balance(self):
        return self.pa - self.na


def score(entry):
    """Positive affect, negative affect and their balance for one entry."""
    items = entry.items
    return AffectScore(
        pa=sum(items[i] for i in _POS_IDX),
        na=sum(items[i] for i in _NEG_IDX),
    )


def entropy(label_counts):
    """Shannon entropy in bits of a label histogram; ``0 log 0`` is 0."""
    counts = [c for c in label_counts if c > 0]
    if any(c < 0 for c in label_counts):
        raise ValueError("label counts must be non-negative")
    if not counts:
        raise EmptyDistribution("entropy of an all-zero histogram is undefined")
    total = sum(counts)
    return max(0.0, -sum((c / total) * math.log2(c / total) for c in counts))


@dataclass(frozen=True)
class DiscretizationModel:
    """Two cut points; a score equal to a cut belongs to the lower class."""

    cut1: float
    cut2: float

    def __post_init__(self):
        if not self.cut1 < self.cut2:
            raise ValueError(f"cuts must be increasing, got ({self.cut1}, {self.cut2})")

    @property
    def cuts(self):
        return (self.cut1, self.cut2)

    def classify(self, value):
        if value <= self.cut1:
            return -1
        if value <= self.cut2:
            return 0
        return 1

    def classify_many(self, values):
        values = np.asarray(values, dtype=float)
        return np.where(values <= self.cut1, -1, np.where(values <= self.cut2, 0, 1))

    def to_text(self):
        return f"cut1 {self.cut1!r}\ncut2 {self.cut2!r}\n"

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            if line.strip():
                key, value = line.split()
                values[key] = float(value)
        return cls(values["cut1"], values["cut2"])

    def save(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def classify(value, model):
    return model.classify(value)


def _histogram(scores):
    if len(scores) == 0:
        raise EmptyInput("no scores")
    values, counts = np.unique(np.asarray(scores), return_counts=True)
    return values, counts


def _xlog2x(n):
    n = np.asarray(n, dtype=float)
    return np.where(n > 0, n * np.log2(np.where(n > 0, n, 1.0)), 0.0)


def weighted_entropy(scores, cuts):
    """Size-weighted mean entropy of the bins that ``cuts`` carve out of ``scores``."""
    scores = np.asarray(scores)
    edges = [-np.inf, *sorted(cuts), np.inf]
    total = len(scores)
    value = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        inside = scores[(scores > lo) & (scores <= hi)]
        if len(inside):
            _, counts = np.unique(inside, return_counts=True)
            value += len(inside) / total * entropy(counts.tolist())
    return value


def _best_pair(values, counts):
    """Globally optimal (i, j) cut indices and objective for a 3-bin split.

    Cut ``i`` sits between ``values[i]`` and ``values[i + 1]``.  With
    ``S_b`` the sum of ``c log2 c`` over the value counts of bin ``b``, the
    weighted entropy is ``sum_b (n_b log2 n_b - S_b) / N``.
    """
    n_total = counts.sum()
    cum_n = np.concatenate([[0], np.cumsum(counts)])
    cum_s = np.concatenate([[0.0], np.cumsum(_xlog2x(counts))])
    d = len(values)
    i, j = np.triu_indices(d - 1, k=1)
    n1, n2, n3 = cum_n[i + 1], cum_n[j + 1] - cum_n[i + 1], n_total - cum_n[j + 1]
    s1, s2, s3 = cum_s[i + 1], cum_s[j + 1] - cum_s[i + 1], cum_s[d] - cum_s[j + 1]
    objective = (_xlog2x(n1) - s1 + _xlog2x(n2) - s2 + _xlog2x(n3) - s3) / n_total
    # triu_indices enumerates (i, j) lexicographically, so the first index within
    # tolerance of the minimum has the smallest cut pair.
    best = int(np.flatnonzero(objective <= objective.min() + TIE_TOLERANCE)[0])
    return int(i[best]), int(j[best]), float(objective[best])


def _best_single(counts):
    """Best single cut index inside one interval and its weighted entropy."""
    n_total = counts.sum()
    cum_n = np.cumsum(counts)[:-1]
    cum_s = np.cumsum(_xlog2x(counts))
    left = _xlog2x(cum_n) - cum_s[:-1]
    right = _xlog2x(n_total - cum_n) - (cum_s[-1] - cum_s[:-1])
    objective = (left + right) / n_total
    best = int(np.flatnonzero(objective <= objective.min() + TIE_TOLERANCE)[0])
    return best, float(objective[best])


def _midpoint(values, i):
    return (float(values[i]) + float(values[i + 1])) / 2.0


def discretize(scores, num_classes=3, strategy="optimal"):
    """Fit the two cut points that split ``scores`` into three classes.

    Candidate cuts lie midway between adjacent distinct values.

    ``strategy="optimal"`` (default) returns the pair minimising the
    weighted entropy of the three resulting bins over *all* candidate pairs.
    ``strategy="recursive"`` splits the whole range at its best single cut,
    then splits whichever side gives the lower overall weighted entropy.
    The recursive variant can miss the global minimum (e.g. six distinct
    singletons) and is kept for comparison.

    Ties go to the smallest cut values.
    """
    if num_classes != 3:
        raise ValueError("only three-class discretization is supported")
    values, counts = _histogram(scores)
    if len(values) < 3:
        raise TooFewDistinctValues(
            f"need at least 3 distinct scores, got {len(values)}"
        )
    if strategy == "optimal":
        i, j, _ = _best_pair(values, counts)
        return DiscretizationModel(_midpoint(values, i), _midpoint(values, j))
    if strategy == "recursive":
        return _discretize_recursive(values, counts)
    raise ValueError(f"unknown strategy {strategy!r}")


def _discretize_recursive(values, counts):
    first, _ = _best_single(counts)
    n_total = counts.sum()
    options = []
    for lo, hi in ((0, first + 1), (first + 1, len(values))):
        part = counts[lo:hi]
        if len(part) < 2:
            continue
        k, _ = _best_single(part)
        second = lo + k
        cuts = sorted((first, second))
        sizes = np.array([counts[: cuts[0] + 1].sum(),
                          counts[cuts[0] + 1: cuts[1] + 1].sum(),
                          counts[cuts[1] + 1:].sum()])
        bins = np.split(counts, [cuts[0] + 1, cuts[1] + 1])
        total = float(sum(_xlog2x(n) - _xlog2x(b).sum() for n, b in zip(sizes, bins)) / n_total)
        options.append((total, _midpoint(values, cuts[0]), _midpoint(values, cuts[1])))
    best = min(o[0] for o in options)
    _, c1, c2 = min(o for o in options if o[0] <= best + TIE_TOLERANCE)
    return DiscretizationModel(c1, c2)


class EntropyDiscretizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`discretize`.

    ``fit`` learns the cut points from a 1-D array of balance scores;
    ``transform`` maps scores to classes in {-1, 0, 1}.
    """

    def __init__(self, num_classes=3, strategy="optimal"):
        self.num_classes = num_classes
        self.strategy = strategy

    def fit(self, X, y=None):
        self.model_ = discretize(_as_scores(X), self.num_classes, self.strategy)
        self.cuts_ = self.model_.cuts
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.classify_many(_as_scores(X))


def _as_scores(X):
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("expected a 1-D array of scores")
    return arr


@dataclass(frozen=True)
class DistributionSummary:
    n: int
    mean: float
    std: float
    fraction_positive: float
    fraction_negative: float
    minimum: float
    maximum: float

    def to_text(self):
        return (
            f"n {self.n}\n"
            f"mean {self.mean:.4f}\n"
            f"std {self.std:.4f}\n"
            f"positive {100 * self.fraction_positive:.2f}%\n"
            f"negative {100 * self.fraction_negative:.2f}%\n"
            f"min {self.minimum:g}\n"
            f"max {self.maximum:g}\n"
        )


def distribution_report(scores):
    """Sample mean/std, share of positive and negative scores, and extremes."""
    arr = np.asarray(scores, dtype=float)
    if arr.size == 0:
        raise EmptyInput("no scores")
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return DistributionSummary(
        n=int(arr.size),
        mean=float(arr.mean()),
        std=std,
        fraction_positive=float((arr > 0).mean()),
        fraction_negative=float((arr < 0).mean()),
        minimum=float(arr.min()),
        maximum=float(arr.max()),
    )
