"""Cross-validated comparison of the three affect classifiers.

Two regimes are supported:

``within_subject_15fold``
    Each user is evaluated separately with stratified k-fold CV (k = 15)
    over their own segments; the per-user mean macro F is the unit of
    analysis and the reported mean/std are taken across users.
``global_louo``
    All users are pooled and every user is held out once.

In both, the normalizer is fit on the training rows of each fold only.
Pairwise paired t-tests run on the unit scores and are judged against a
Bonferroni-adjusted threshold.
"""

import csv
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..errors import FoldError
from ..stats import bonferroni, paired_t_test
from ._base import CLASSES, class_index
from .linear import SoftmaxRegression
from .metrics import confusion_matrix, f_measure
from .model_selection import derive_seed, iter_folds, leave_one_user_out, stratified_kfold
from .neural import FeedForwardNet, default_hidden_size
from .preprocessing import Normalizer
from .svm import RbfSVC

CLASSIFIER_NAMES = ("ann", "svm", "lr")
DISPLAY_NAMES = {"ann": "ANN", "svm": "SVM", "lr": "LR"}
WITHIN = "within_subject_15fold"
GLOBAL = "global_louo"
REGIMES = (WITHIN, GLOBAL)
_REGIME_KEY = {WITHIN: 1, GLOBAL: 2}


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    users: np.ndarray
    columns: tuple

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        self.users = np.asarray(self.users).astype(str)
        self.columns = tuple(self.columns)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.columns):
            raise ValueError("feature matrix must be 2-D with one column per name")
        if not len(self.X) == len(self.y) == len(self.users):
            raise ValueError("features, labels and users differ in length")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("feature matrix contains missing or non-finite values")
        class_index(self.y)
        missing = [int(c) for c in CLASSES if not np.any(self.y == c)]
        if missing:
            raise ValueError(f"classes {missing} have no rows")

    def __len__(self):
        return len(self.y)


def make_classifier(name, n_features, seed=None):
    """Fresh estimator with the fixed hyperparameters used for evaluation."""
    if name == "ann":
        return FeedForwardNet(hidden_size=default_hidden_size(n_features), epochs=500,
                              learning_rate=0.3, momentum=0.2, random_state=seed)
    if name == "svm":
        return RbfSVC(C=1.0, gamma=1.0 / n_features, random_state=seed)
    if name == "lr":
        return SoftmaxRegression(epochs=500, learning_rate=0.3, random_state=seed)
    raise ValueError(f"unknown classifier {name!r}; choose from {CLASSIFIER_NAMES}")


@dataclass(frozen=True)
class PairwiseComparison:
    a: str
    b: str
    statistic: float
    p_value: float
    degenerate: bool
    significant: bool
    better: str  # name of the better classifier, or "" for a zero mean difference


@dataclass
class EvaluationReport:
    regime: str
    classifiers: tuple
    fold_scores: dict  # classifier -> list of (fold id, macro F)
    unit_scores: dict  # classifier -> per-user means (within) or per-fold F (global)
    baseline_scores: list  # majority-class macro F per fold
    confusion: dict  # classifier -> summed 3x3 confusion matrix
    pairwise: list = field(default_factory=list)
    threshold: float = None
    skipped_users: list = field(default_factory=list)

    def mean(self, name):
        return float(np.mean(self.unit_scores[name]))

    def std(self, name):
        scores = self.unit_scores[name]
        return float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0

    @property
    def baseline_mean(self):
        return float(np.mean(self.baseline_scores))

    def to_csv(self, fh, header=True):
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(("classifier", "regime", "fold", "f_macro"))
        for name in self.classifiers:
            for fold, value in self.fold_scores[name]:
                writer.writerow((name, self.regime, fold, repr(float(value))))


def _threads():
    try:
        return max(1, int(os.environ.get("NOTIMIND_THREADS", "1")))
    except ValueError:
        return 1


def _majority(y):
    values, counts = np.unique(y, return_counts=True)
    return int(values[np.argmax(counts)])


def _run_fold(X, y, train, test, classifiers, seeds, fold_id):
    """Train every classifier on one split; returns per-classifier (macro F, confusion)."""
    normalizer = Normalizer(on_constant="center").fit(X[train])
    Xtr, Xte = normalizer.transform(X[train]), normalizer.transform(X[test])
    out = {}
    for name in classifiers:
        try:
            model = make_classifier(name, X.shape[1], seeds[name]).fit(Xtr, y[train])
        except Exception as exc:
            raise FoldError(fold_id, name, exc) from exc
        cm = confusion_matrix(y[test], model.predict(Xte))
        out[name] = (f_measure(cm).macro, cm)
    baseline = np.full(len(test), _majority(y[train]))
    out[None] = (f_measure(confusion_matrix(y[test], baseline)).macro, None)
    return out


def _fold_tasks(dataset, regime, classifiers, seed, k):
    """List of (unit, fold id, X, y, train, test, seeds) in deterministic order."""
    tasks, skipped = [], []
    clf_keys = {name: i for i, name in enumerate(CLASSIFIER_NAMES)}
    if regime not in _REGIME_KEY:
        raise ValueError(f"unknown regime {regime!r}; choose from {REGIMES}")
    rkey = _REGIME_KEY[regime]
    if regime == WITHIN:
        for u_index, user in enumerate(sorted(set(dataset.users.tolist()))):
            rows = np.flatnonzero(dataset.users == user)
            if len(rows) < k:
                warnings.warn(f"user {user!r} has {len(rows)} segments (< {k}); skipped",
                              stacklevel=3)
                skipped.append(user)
                continue
            X, y = dataset.X[rows], dataset.y[rows]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                assignment = stratified_kfold(y, k, derive_seed(seed, rkey, u_index))
            for fold, train, test in iter_folds(assignment):
                seeds = {n: derive_seed(seed, rkey, u_index, fold, clf_keys[n]) for n in classifiers}
                tasks.append((user, f"{user}/{fold}", X, y, train, test, seeds))
    elif regime == GLOBAL:
        assignment, fold_users = leave_one_user_out(dataset.users)
        for fold, train, test in iter_folds(assignment):
            seeds = {n: derive_seed(seed, rkey, fold, clf_keys[n]) for n in classifiers}
            user = fold_users[fold]
            tasks.append((user, user, dataset.X, dataset.y, train, test, seeds))
    return tasks, skipped


def cross_validate(dataset, regime=GLOBAL, classifiers=CLASSIFIER_NAMES, seed=0, k=15,
                   family_alpha=0.05):
    """Evaluate ``classifiers`` on ``dataset`` under ``regime``.

    Results depend only on ``seed``: every fold and model draws from its
    own derived stream, so the fold execution order (and the optional
    thread pool sized by ``NOTIMIND_THREADS``) cannot change the report.
    """
    classifiers = tuple(classifiers)
    for name in classifiers:
        if name not in CLASSIFIER_NAMES:
            raise ValueError(f"unknown classifier {name!r}")
    tasks, skipped = _fold_tasks(dataset, regime, classifiers, seed, k)

    def run(task):
        _, fold_id, X, y, train, test, seeds = task
        return _run_fold(X, y, train, test, classifiers, seeds, fold_id)

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]

    fold_scores = {name: [] for name in classifiers}
    per_unit = {name: {} for name in classifiers}
    confusion = {name: np.zeros((3, 3), dtype=int) for name in classifiers}
    baseline = []
    for (unit, fold_id, *_), result in zip(tasks, results):
        baseline.append(result[None][0])
        for name in classifiers:
            f, cm = result[name]
            fold_scores[name].append((fold_id, f))
            per_unit[name].setdefault(unit, []).append(f)
            confusion[name] += cm
    unit_scores = {name: [float(np.mean(v)) for v in per_unit[name].values()] for name in classifiers}

    report = EvaluationReport(
        regime=regime,
        classifiers=classifiers,
        fold_scores=fold_scores,
        unit_scores=unit_scores,
        baseline_scores=baseline,
        confusion=confusion,
        skipped_users=skipped,
    )
    _compare(report, family_alpha)
    return report


def _compare(report, family_alpha):
    pairs = list(combinations(report.classifiers, 2))
    if not pairs or len(next(iter(report.unit_scores.values()))) < 2:
        return
    tests = [paired_t_test(report.unit_scores[a], report.unit_scores[b]) for a, b in pairs]
    decision = bonferroni([t.p_value for t in tests], family_alpha)
    report.threshold = decision.threshold
    for (a, b), test, significant in zip(pairs, tests, decision.significant):
        better = {"a": a, "b": b, None: ""}[test.better]
        report.pairwise.append(PairwiseComparison(
            a, b, float(test.statistic), test.p_value, test.degenerate, significant, better
        ))


def summary_table(reports):
    """Fixed-layout text: Average/STD rows (within-subject) and a Global row."""
    by_regime = {r.regime: r for r in reports}
    names = next(iter(reports)).classifiers
    width = 10
    lines = ["".ljust(width) + "".join(DISPLAY_NAMES[n].rjust(width) for n in names)]
    within = by_regime.get(WITHIN)
    if within is not None:
        lines.append("Average".ljust(width) + "".join(f"{within.mean(n):.3f}".rjust(width) for n in names))
        lines.append("STD".ljust(width) + "".join(f"±{within.std(n):.2f}".rjust(width) for n in names))
    glob = by_regime.get(GLOBAL)
    if glob is not None:
        lines.append("Global".ljust(width) + "".join(f"{glob.mean(n):.3f}".rjust(width) for n in names))
    for report in reports:
        lines.append("")
        lines.append(f"[{report.regime}] units={len(next(iter(report.unit_scores.values())))}"
                     f" majority-baseline={report.baseline_mean:.3f}")
        if report.skipped_users:
            lines.append(f"  skipped users: {', '.join(report.skipped_users)}")
        if report.threshold is not None:
            lines.append(f"  Bonferroni threshold = {report.threshold:.4f}")
        for cmp in report.pairwise:
            verdict = "significant" if cmp.significant else "not significant"
            flag = " (degenerate)" if cmp.degenerate else ""
            better = f", better: {DISPLAY_NAMES[cmp.better]}" if cmp.better else ""
            lines.append(f"  {DISPLAY_NAMES[cmp.a]} vs {DISPLAY_NAMES[cmp.b]}: "
                         f"p={cmp.p_value:.4g} {verdict}{flag}{better}")
    return "\n".join(lines) + "\n"


def write_summary_csv(reports, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("classifier", "regime", "mean", "std", "units"))
    for report in reports:
        for name in report.classifiers:
            writer.writerow((name, report.regime, repr(report.mean(name)), repr(report.std(name)),
                             len(report.unit_scores[name])))


def write_pairwise_csv(reports, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("regime", "a", "b", "t", "p", "threshold", "significant", "degenerate"))
    for report in reports:
        for cmp in report.pairwise:
            writer.writerow((report.regime, cmp.a, cmp.b, repr(cmp.statistic), repr(cmp.p_value),
                             repr(report.threshold), int(cmp.significant), int(cmp.degenerate)))
