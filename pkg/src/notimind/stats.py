"""Correlation analysis and significance tests for classifier comparison."""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import ConstantInput, InsufficientData, LengthMismatch, UnknownFeatureName
from .segment import FEATURE_LABELS, SELECTED_FEATURES

__all__ = [
    "CorrelationRow",
    "CorrelationReport",
    "TTestResult",
    "BonferroniResult",
    "pearson",
    "pearson_pvalue",
    "permutation_pvalue",
    "correlation_table",
    "select_features",
    "paired_t_test",
    "sign_flip_pvalue",
    "bonferroni",
]

_LABEL_TO_NAME = {label.lower(): name for name, label in FEATURE_LABELS.items()}


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"vectors differ in shape: {x.shape} vs {y.shape}")
    return x, y


def pearson(x, y):
    """Sample Pearson correlation coefficient of two equal-length vectors."""
    x, y = _pair(x, y)
    if len(x) < 3:
        raise InsufficientData(f"need at least 3 samples, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("correlation with a constant vector is undefined")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def pearson_pvalue(r, n):
    """Two-sided p-value of ``r`` through the t transform with ``n - 2`` dof."""
    if n < 3:
        raise InsufficientData("need at least 3 samples")
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * sps.t.sf(abs(t), n - 2))


def permutation_pvalue(x, y, n_permutations=10_000, seed=0):
    """Two-sided permutation p-value for the Pearson correlation of ``x`` and ``y``."""
    x, y = _pair(x, y)
    observed = abs(pearson(x, y))
    rng = np.random.default_rng(seed)
    dx = x - x.mean()
    dy = y - y.mean()
    norm = math.sqrt(float(dx @ dx) * float(dy @ dy))
    hits = 0
    chunk = max(1, 2_000_000 // len(x))
    for start in range(0, n_permutations, chunk):
        size = min(chunk, n_permutations - start)
        perms = rng.permuted(np.tile(dy, (size, 1)), axis=1)
        hits += np.count_nonzero(np.abs(perms @ dx) / norm >= observed - 1e-12)
    return float((1 + hits) / (n_permutations + 1))


@dataclass(frozen=True)
class CorrelationRow:
    feature: str
    r: float
    p: float
    n: int
    constant: bool = False


@dataclass
class CorrelationReport:
    rows: list = field(default_factory=list)  # sorted by r, descending

    @property
    def n(self):
        return self.rows[0].n if self.rows else 0

    def __getitem__(self, feature):
        for row in self.rows:
            if row.feature == feature:
                return row
        raise UnknownFeatureName(feature)

    def features(self):
        return [row.feature for row in self.rows]

    def to_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("feature", "r", "p", "n"))
        for row in self.rows:
            writer.writerow((row.feature, repr(row.r), repr(row.p), row.n))

    @classmethod
    def from_values(cls, values, n=0):
        """Report built directly from ``{feature: r}`` (p-values left at NaN)."""
        rows = [CorrelationRow(name, float(r), math.nan, n) for name, r in values.items()]
        rows.sort(key=lambda row: (-row.r, row.feature))
        return cls(rows)


def correlation_table(features, scores, names=None, method="t", n_permutations=10_000, seed=0):
    """Pearson r and two-sided p of every feature column against ``scores``.

    ``features`` is an ``(n, k)`` matrix with column ``names`` or a mapping
    from name to vector.  A constant column is reported with ``r = 0``,
    ``p = 1`` and ``constant=True``.  ``method="permutation"`` replaces the
    t-transform p-value by a shuffle test.
    """
    if isinstance(features, dict):
        names = list(features)
        matrix = np.column_stack([np.asarray(features[n], dtype=float) for n in names])
    else:
        matrix = np.asarray(features, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        names = list(names) if names is not None else [f"x{i}" for i in range(matrix.shape[1])]
    scores = np.asarray(scores, dtype=float)
    if matrix.shape[0] != len(scores):
        raise LengthMismatch(f"{matrix.shape[0]} feature rows vs {len(scores)} scores")
    n = len(scores)
    if n < 3:
        raise InsufficientData(f"need at least 3 segments, got {n}")
    rows = []
    for j, name in enumerate(names):
        column = matrix[:, j]
        try:
            r = pearson(column, scores)
        except ConstantInput:
            if np.ptp(scores) == 0:
                raise
            rows.append(CorrelationRow(name, 0.0, 1.0, n, constant=True))
            continue
        if method == "t":
            p = pearson_pvalue(r, n)
        elif method == "permutation":
            p = permutation_pvalue(column, scores, n_permutations, seed)
        else:
            raise ValueError(f"unknown method {method!r}")
        rows.append(CorrelationRow(name, r, p, n))
    rows.sort(key=lambda row: (-row.r, row.feature))
    return CorrelationReport(rows)


def _canonical(name):
    key = str(name).strip()
    if key in FEATURE_LABELS:
        return key
    try:
        return _LABEL_TO_NAME[key.lower()]
    except KeyError:
        raise UnknownFeatureName(name) from None


def select_features(report, names=None, threshold=None):
    """Pick classifier inputs from a correlation report.

    With ``threshold`` set, every feature with ``|r| >= threshold`` is kept
    in report order.  Otherwise ``names`` (default: the nine-feature set
    without Screen-Off) is validated against the report and returned in the
    given order.  Names may be column ids (``k_a``) or labels
    (``Keyboard-Out``).
    """
    available = set(report.features())
    if threshold is not None:
        chosen = [row.feature for row in report.rows if abs(row.r) >= threshold]
        if not chosen:
            warnings.warn(f"no feature reaches |r| >= {threshold}", stacklevel=2)
        return chosen
    wanted = [_canonical(n) for n in (names if names is not None else SELECTED_FEATURES)]
    missing = [n for n in wanted if n not in available]
    if missing:
        raise UnknownFeatureName(f"not in correlation report: {missing}")
    return wanted


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    mean_difference: float
    degenerate: bool = False

    @property
    def better(self):
        """``'a'``, ``'b'`` or ``None`` according to the sign of the mean difference."""
        if self.mean_difference > 0:
            return "a"
        if self.mean_difference < 0:
            return "b"
        return None


def paired_t_test(a, b):
    """Two-sided paired t-test on per-fold scores.

    When all differences are identical the statistic is undefined; the
    result is then flagged ``degenerate`` with ``p = 1`` for a zero mean
    difference and ``p = 0`` otherwise.
    """
    a, b = _pair(a, b)
    if len(a) < 2:
        raise InsufficientData("paired t-test needs at least 2 pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd <= 1e-15 * max(1.0, abs(mean)):
        if abs(mean) <= 1e-15:
            return TTestResult(0.0, 1.0, 0.0, degenerate=True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, mean, degenerate=True)
    t = mean / (sd / math.sqrt(len(d)))
    p = float(2.0 * sps.t.sf(abs(t), len(d) - 1))
    return TTestResult(t, p, mean)


def sign_flip_pvalue(a, b, n_permutations=10_000, seed=0):
    """Permutation counterpart of :func:`paired_t_test` (random sign flips)."""
    a, b = _pair(a, b)
    d = a - b
    rng = np.random.default_rng(seed)
    observed = abs(d.mean())
    signs = rng.choice([-1.0, 1.0], size=(n_permutations, len(d)))
    null = np.abs(signs @ d) / len(d)
    return float((1 + np.count_nonzero(null >= observed - 1e-12)) / (n_permutations + 1))


@dataclass(frozen=True)
class BonferroniResult:
    threshold: float
    p_values: tuple
    significant: tuple


def bonferroni(p_values, family_alpha=0.05):
    """Reject each hypothesis whose p-value is below ``family_alpha / m``."""
    p_values = tuple(float(p) for p in p_values)
    if not p_values:
        raise ValueError("need at least one p-value")
    threshold = family_alpha / len(p_values)
    return BonferroniResult(threshold, p_values, tuple(p < threshold for p in p_values))
