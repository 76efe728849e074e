"""Fold assignment for the two cross-validation regimes.

Randomness is derived from one integer seed plus a tuple of stream keys
through :class:`numpy.random.SeedSequence` and the counter-based Philox
generator, so each (seed, user, fold, classifier) stream is reproducible
on its own regardless of execution order.
"""

import warnings

import numpy as np

from ..errors import SingleUser, TooFewRows

_MASK64 = (1 << 64) - 1

STREAM_KFOLD = 1
STREAM_MODEL = 2


def make_rng(seed, *keys):
    sequence = np.random.SeedSequence([int(seed) & _MASK64, *(int(k) for k in keys)])
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed, *keys):
    """A 32-bit integer seed for the stream ``(seed, *keys)``."""
    sequence = np.random.SeedSequence([int(seed) & _MASK64, *(int(k) for k in keys)])
    return int(sequence.generate_state(1)[0])


def stratified_kfold(labels, k=15, seed=0):
    """Assign every row to one of ``k`` test folds, stratified by label.

    Rows are shuffled within each class, classes are laid end to end and the
    sequence is dealt round-robin over a random permutation of the folds.
    Each fold therefore receives ``floor`` or ``ceil`` of ``n_c / k`` rows
    of every class ``c``, and fold sizes differ by at most one.  Classes
    with fewer than ``k`` rows simply leave some folds without them (a
    warning is issued).
    """
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise TooFewRows(f"{n} rows cannot fill {k} folds")
    rng = make_rng(seed, STREAM_KFOLD)
    order = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            warnings.warn(f"class {cls} has {len(idx)} rows, fewer than k={k}", stacklevel=2)
        order.append(rng.permutation(idx))
    order = np.concatenate(order)
    fold_of_position = rng.permutation(k)[np.arange(n) % k]
    assignment = np.empty(n, dtype=int)
    assignment[order] = fold_of_position
    return assignment


def leave_one_user_out(user_ids, users=None):
    """One test fold per user.

    Returns ``(assignment, fold_users)`` where ``assignment[i]`` indexes
    ``fold_users``.  Users listed in ``users`` that own no rows are skipped
    with a warning.
    """
    user_ids = np.asarray(user_ids)
    fold_users = sorted(set(user_ids.tolist()))
    if users is not None:
        empty = sorted(set(users) - set(fold_users))
        for user in empty:
            warnings.warn(f"user {user!r} has no rows; fold skipped", stacklevel=2)
    if len(fold_users) < 2:
        raise SingleUser("leave-one-user-out needs at least two users")
    index = {user: i for i, user in enumerate(fold_users)}
    return np.array([index[u] for u in user_ids.tolist()], dtype=int), fold_users


def iter_folds(assignment):
    """Yield ``(fold, train_idx, test_idx)`` for every non-empty fold in order."""
    assignment = np.asarray(assignment)
    for fold in np.unique(assignment):
        test = np.flatnonzero(assignment == fold)
        train = np.flatnonzero(assignment != fold)
        yield int(fold), train, test
