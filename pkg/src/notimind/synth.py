"""Synthetic cohorts with planted feature/affect couplings.

Every segment draws its event mix from a multinomial whose log-intensities
are shifted in proportion to the standardized affect score of the report
that closes it.  Shift strengths are calibrated once per parameter set by a
large deterministic simulation, so that the pooled Pearson correlation of
each rate feature with the score lands on the requested coupling.

The generator emits exactly the ingest formats plus ``ground_truth.csv``;
:func:`verify_cohort` replays the pipeline and checks it against that table.
"""

import csv
import io
import math
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._kvfile import as_list, read_kv
from .errors import InfeasibleCoupling
from .ingest import (
    EventState,
    NotificationEvent,
    PanasEntry,
    RingerMode,
    format_timestamp,
    from_millis,
    millis,
    serialize_event,
    serialize_panas,
)
from .learn.model_selection import make_rng

STATES = ("p", "r", "o", "f", "u", "k")
KINDS = ("m", "s", "w", "g", "x")  # multi, system, work, group, personal (reference)
RATE_COLUMNS = ("p_a", "r_a", "o_a", "f_a", "u_a", "k_a", "s_a", "m_a", "g_a", "e_a", "w_a")
COUNT_COLUMNS = ("p", "r", "o", "f", "u", "k", "m", "g", "w", "s", "e")
GROUND_TRUTH_COLUMNS = ("user", "t_start", "t_end", "score", *COUNT_COLUMNS, *RATE_COLUMNS)

# Which log-intensity each coupled feature acts on.  Screen-Off is the
# reference state and personal messages the reference kind.  State shares
# sum to 100, so their covariances with the score sum to zero and f_a takes
# up whatever the coupled states leave; it cannot be targeted itself.
COUPLABLE = {
    "p_a": ("state", 0),
    "r_a": ("state", 1),
    "o_a": ("state", 2),
    "u_a": ("state", 4),
    "k_a": ("state", 5),
    "m_a": ("kind", 0),
    "s_a": ("kind", 1),
    "w_a": ("kind", 2),
    "g_a": ("kind", 3),
    "e_a": ("emoji", 0),
}

DEFAULT_COUPLINGS = (
    ("k_a", 0.46),
    ("e_a", 0.35),
    ("m_a", 0.22),
    ("p_a", 0.13),
    ("o_a", 0.09),
    ("r_a", 0.08),
    ("u_a", -0.07),
    ("g_a", -0.08),
    ("w_a", -0.35),
)

MAX_GAP_MS = 10 * 3600 * 1000
EMOJI_RATE_CAP = 500.0

_CAL_USERS = 2000
_CAL_SEGMENTS_PER_USER = 100
_CAL_TOLERANCE = 0.003
_CAL_MAX_ERROR = 0.02
_CAL_MAX_ITER = 60
_CAL_MAX_SHIFT = 25.0
_CAL_STEP = 0.25
_CAL_SHARE_TOLERANCE = 0.1  # percentage points
_STREAM_CALIBRATION = 101
_STREAM_USER = 102


@dataclass(frozen=True)
class CohortSpec:
    """Parameters of a synthetic cohort.

    Parameters
    ----------
    n_users, days, panas_per_day : int
        Cohort size and reporting schedule.
    report_times : tuple of str
        Nominal ``HH:MM`` report times (UTC); used when their number equals
        ``panas_per_day``, otherwise reports are spread evenly over
        09:00-21:00.
    time_jitter_minutes : float
        Uniform jitter around each nominal time.
    skip_prob : float
        Probability that a scheduled report is missed.
    events_per_segment : float
        Poisson mean of the number of events between two reports.
    state_mix : tuple of 6 floats
        Target shares (percent) of Posted, Removed, Screen-On, Screen-Off,
        Unlock and Keyboard-Out events.
    sub_rates : tuple of 5 floats
        Target system, multi, emoji, group and work rates (percent).
    couplings : tuple of (feature, r) pairs
        Target Pearson correlation of each rate feature with the score.
    score_mean, score_std : float
        Gaussian the affect balance is drawn from before rounding.
    label_noise : float in [0, 1)
        Share of the variance of the counting latent not explained by the
        reported score.
    heterogeneity : float
        Standard deviation of per-user log-intensity offsets.
    start_date : str
        First day (``YYYY-MM-DD``).
    seed : int
    """

    n_users: int = 34
    days: int = 35
    panas_per_day: int = 3
    report_times: tuple = ("09:00", "14:30", "20:00")
    time_jitter_minutes: float = 30.0
    skip_prob: float = 0.1
    events_per_segment: float = 160.0
    state_mix: tuple = (31.0, 5.0, 15.0, 15.0, 10.0, 20.0)
    sub_rates: tuple = (6.0, 17.0, 9.0, 13.0, 7.0)
    couplings: tuple = DEFAULT_COUPLINGS
    score_mean: float = 4.78
    score_std: float = 5.08
    label_noise: float = 0.1
    heterogeneity: float = 1.6
    start_date: str = "2016-03-07"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "report_times", tuple(self.report_times))
        object.__setattr__(self, "state_mix", tuple(float(v) for v in self.state_mix))
        object.__setattr__(self, "sub_rates", tuple(float(v) for v in self.sub_rates))
        pairs = self.couplings.items() if isinstance(self.couplings, dict) else self.couplings
        object.__setattr__(self, "couplings", tuple((str(k), float(v)) for k, v in pairs))
        if self.n_users < 0 or self.days < 0 or self.panas_per_day < 1:
            raise ValueError("n_users and days must be non-negative, panas_per_day positive")
        if len(self.state_mix) != len(STATES) or min(self.state_mix) <= 0:
            raise ValueError("state_mix needs six positive shares")
        # shares are normalized; the default Table-style mix adds up to 96
        if abs(sum(self.state_mix) - 100.0) > 5.0:
            raise ValueError(f"state_mix sums to {sum(self.state_mix)}, expected ~100")
        if len(self.sub_rates) != 5 or min(self.sub_rates) <= 0:
            raise ValueError("sub_rates needs five positive rates (S, M, E, G, W)")
        s, m, _, g, w = self.sub_rates
        if s + m + g + w * (1 - s / 100) >= 100:
            raise ValueError("system, multi, group and work rates leave no personal posts")
        seen = set()
        for name, value in self.couplings:
            if name not in COUPLABLE:
                raise ValueError(f"feature {name!r} cannot be coupled; choose from {sorted(COUPLABLE)}")
            if name in seen:
                raise ValueError(f"coupling for {name!r} given twice")
            seen.add(name)
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"coupling {name}={value} outside [-1, 1]")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must lie in [0, 1)")
        if not 0.0 <= self.skip_prob < 1.0:
            raise ValueError("skip_prob must lie in [0, 1)")
        if self.events_per_segment <= 0 or self.score_std <= 0 or self.heterogeneity < 0:
            raise ValueError("events_per_segment and score_std must be positive")
        times = self.schedule_minutes()
        gaps = np.diff(times + [times[0] + 1440])
        if 2 * self.time_jitter_minutes >= gaps.min():
            raise ValueError("time jitter may reorder reports")

    def coupling(self, name):
        return dict(self.couplings).get(name, 0.0)

    def schedule_minutes(self):
        if len(self.report_times) == self.panas_per_day:
            out = []
            for hhmm in self.report_times:
                hh, mm = hhmm.split(":")
                out.append(int(hh) * 60 + int(mm))
            return out
        if self.panas_per_day == 1:
            return [540]
        step = 720 / (self.panas_per_day - 1)
        return [round(540 + i * step) for i in range(self.panas_per_day)]

    def without_couplings(self):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["couplings"] = ()
        return CohortSpec(**values)

    @classmethod
    def from_mapping(cls, raw):
        """Build from string values as read from a ``key = value`` file.

        ``couplings`` is a comma list of ``feature:r`` items (``none`` for
        a null cohort); ``state_mix``, ``sub_rates`` and ``report_times``
        are comma lists.
        """
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, value in raw.items():
            if key not in types:
                raise ValueError(f"unknown cohort option {key!r}")
            if key == "couplings":
                items = [] if str(value).strip().lower() in ("", "none") else as_list(value)
                pairs = []
                for item in items:
                    name, _, number = item.partition(":")
                    pairs.append((name.strip(), float(number)))
                kwargs[key] = tuple(pairs)
            elif key in ("state_mix", "sub_rates"):
                kwargs[key] = tuple(float(v) for v in as_list(value))
            elif key == "report_times":
                kwargs[key] = tuple(as_list(value))
            elif key == "start_date":
                kwargs[key] = str(value)
            elif types[key] is int:
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(read_kv(path))

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "couplings":
                value = ", ".join(f"{k}:{v!r}" for k, v in value) or "none"
            elif isinstance(value, tuple):
                value = ", ".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# count model


@dataclass(frozen=True)
class Shifts:
    """Per-standard-deviation log-intensity shifts of states, kinds and emojis."""

    state: tuple = (0.0,) * len(STATES)
    kind: tuple = (0.0,) * len(KINDS)
    emoji: float = 0.0

    @classmethod
    def from_features(cls, values):
        state, kind, emoji = [0.0] * len(STATES), [0.0] * len(KINDS), 0.0
        for name, value in values.items():
            group, index = COUPLABLE[name]
            if group == "state":
                state[index] = value
            elif group == "kind":
                kind[index] = value
            else:
                emoji = value
        return cls(tuple(state), tuple(kind), emoji)

    def feature(self, name):
        group, index = COUPLABLE[name]
        return self.emoji if group == "emoji" else getattr(self, group)[index]


@dataclass(frozen=True)
class CountModel:
    """Base log-intensities of states and post kinds, the emoji logit, and the shifts.

    Base intensities are fitted so that pooled shares over a cohort match
    the spec's mix despite per-user offsets and score-driven shifts.
    """

    state_logs: tuple
    kind_logs: tuple
    emoji_logit: float
    shifts: Shifts = Shifts()


def _logit(p):
    return math.log(p / (1.0 - p))


def _share_targets(spec):
    state = np.asarray(spec.state_mix) / sum(spec.state_mix)
    s, m, e, g, w = (v / 100.0 for v in spec.sub_rates)
    return state, np.array([m, s, w, g]), e


def initial_model(spec, shifts=Shifts()):
    state, kinds, emoji = _share_targets(spec)
    m, s, w, g = kinds
    kind = np.array([m, s, w * (1.0 - s), g])
    kind = np.append(kind, 1.0 - kind.sum())
    return CountModel(tuple(np.log(state)), tuple(np.log(kind)), _logit(emoji), shifts)


def _softmax_rows(logits):
    logits = logits - logits.max(axis=1, keepdims=True)
    out = np.exp(logits)
    return out / out.sum(axis=1, keepdims=True)


def _draw_scores(rng, size, spec):
    raw = rng.normal(spec.score_mean, spec.score_std, size)
    return np.clip(np.rint(raw), -20, 20).astype(int)


def _draw_offsets(rng, spec):
    h = spec.heterogeneity
    return (rng.normal(0, h, len(STATES)), rng.normal(0, h, len(KINDS)), float(rng.normal(0, h)))


def _latent(rng, scores, spec):
    z = (scores - spec.score_mean) / spec.score_std
    noise = spec.label_noise
    return math.sqrt(1.0 - noise) * z + math.sqrt(noise) * rng.standard_normal(len(scores))


def _draw_counts(rng, n_events, latent, offsets, model):
    """Counts per segment as a dict of integer arrays keyed by COUNT_COLUMNS.

    States are multinomial over the segment's events and post kinds
    multinomial over its posts.  Emojis are Poisson with a mean per
    non-multi post that goes through a logistic link, so heavy user
    offsets cannot blow the rate up.
    """
    shifts = model.shifts
    state_off, kind_off, emoji_off = offsets
    state_logits = np.asarray(model.state_logs) + state_off + np.outer(latent, shifts.state)
    states = rng.multinomial(n_events, _softmax_rows(state_logits))
    posted = states[:, 0]
    kind_logits = np.asarray(model.kind_logs) + kind_off + np.outer(latent, shifts.kind)
    kinds = rng.multinomial(posted, _softmax_rows(kind_logits))
    eligible = posted - kinds[:, 0]
    per_post = 1.0 / (1.0 + np.exp(-(model.emoji_logit + emoji_off + shifts.emoji * latent)))
    emojis = rng.poisson(eligible * per_post)
    out = {name: states[:, i] for i, name in enumerate(STATES)}
    out.update(m=kinds[:, 0], s=kinds[:, 1], w=kinds[:, 2], g=kinds[:, 3], e=emojis)
    return out


def rates_from_counts(c):
    """Rate features as a ``(segments, 11)`` array, column order RATE_COLUMNS."""
    n = sum(np.asarray(c[name]) for name in STATES)

    def pct(num, den):
        num, den = np.asarray(num, dtype=float), np.asarray(den, dtype=float)
        out = np.zeros(np.broadcast(num, den).shape)
        np.divide(100.0 * num, den, out=out, where=den > 0)
        return out

    cols = [pct(c[name], n) for name in STATES]
    cols.append(pct(c["s"], c["p"]))
    cols.append(pct(c["m"], c["p"]))
    cols.append(pct(c["g"], c["p"]))
    cols.append(np.minimum(pct(c["e"], np.asarray(c["p"]) - c["m"]), EMOJI_RATE_CAP))
    cols.append(np.clip(pct(c["w"], np.asarray(c["p"]) - c["s"]), 0.0, 100.0))
    return np.column_stack(cols)


def pooled_shares(c):
    """State shares, (m, s, w, g) rates and the emoji rate pooled over all segments, as fractions."""
    t = {name: float(np.sum(c[name])) for name in COUNT_COLUMNS}
    n = sum(t[name] for name in STATES)
    state = np.array([t[name] / n for name in STATES]) if n else np.zeros(len(STATES))

    def frac(a, b):
        return a / b if b > 0 else 0.0

    kinds = np.array([frac(t["m"], t["p"]), frac(t["s"], t["p"]), frac(t["w"], t["p"] - t["s"]),
                      frac(t["g"], t["p"])])
    return state, kinds, frac(t["e"], t["p"] - t["m"])


def _pooled_r(rates, scores):
    x = rates - rates.mean(axis=0)
    y = scores - scores.mean()
    den = np.sqrt((x * x).sum(axis=0) * (y * y).sum())
    return np.divide(x.T @ y, den, out=np.zeros(x.shape[1]), where=den > 0)


# --------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class Calibration:
    model: CountModel
    achieved: dict  # feature -> correlation reached on the calibration sample
    shares: tuple  # pooled (state, kinds, emoji) fractions on the calibration sample
    iterations: int

    @property
    def shifts(self):
        return self.model.shifts


def _simulate(spec, model):
    """Pooled correlations and shares on the fixed calibration sample."""
    rng = make_rng(0, _STREAM_CALIBRATION)
    size = _CAL_USERS * _CAL_SEGMENTS_PER_USER
    scores = _draw_scores(rng, size, spec)
    latent = _latent(rng, scores, spec)
    h = spec.heterogeneity
    reps = _CAL_SEGMENTS_PER_USER
    offsets = (
        np.repeat(rng.normal(0, h, (_CAL_USERS, len(STATES))), reps, axis=0),
        np.repeat(rng.normal(0, h, (_CAL_USERS, len(KINDS))), reps, axis=0),
        np.repeat(rng.normal(0, h, _CAL_USERS), reps),
    )
    n_events = rng.poisson(spec.events_per_segment, size)
    counts = _draw_counts(rng, n_events, latent, offsets, model)
    r = _pooled_r(rates_from_counts(counts), scores.astype(float))
    return dict(zip(RATE_COLUMNS, r.tolist())), pooled_shares(counts)


def _calibration_key(spec):
    return (spec.state_mix, spec.sub_rates, tuple(sorted(spec.couplings)), spec.events_per_segment,
            spec.score_mean, spec.score_std, spec.label_noise, spec.heterogeneity)


def calibrate(spec):
    """Count model planting ``spec.couplings`` at the spec's mix.

    Raises InfeasibleCoupling when a coupling cannot be reached.
    """
    key = _calibration_key(spec)
    if key not in _CAL_CACHE:
        _CAL_CACHE[key] = _calibrate(spec)
    return _CAL_CACHE[key]


_CAL_CACHE = {}


class _Problem:
    """Unknowns and residuals of the calibration.

    The unknown vector holds the shifts of the coupled features, the six
    state log-intensities, the first four kind log-intensities and the
    emoji logit.  Residuals are the correlation errors followed by the log
    ratios of achieved to target shares (logit difference for emojis).
    """

    def __init__(self, spec, names):
        self.spec = spec
        self.names = names
        self.targets = np.array([spec.coupling(name) for name in names])
        self.state_t, self.kinds_t, self.emoji_t = _share_targets(spec)
        self.q = len(names)

    def pack(self, model):
        beta = [model.shifts.feature(name) for name in self.names]
        return np.concatenate([beta, model.state_logs, model.kind_logs[:4], [model.emoji_logit]])

    def unpack(self, theta):
        q = self.q
        shifts = Shifts.from_features(dict(zip(self.names, theta[:q].tolist())))
        kind_logs = (*theta[q + 6:q + 10].tolist(), math.log(1.0 - self.kinds_t.sum()))
        return CountModel(tuple(theta[q:q + 6].tolist()), kind_logs, float(theta[q + 10]), shifts)

    def evaluate(self, theta):
        r_all, shares = _simulate(self.spec, self.unpack(theta))
        state, kinds, emoji = shares
        r = np.array([r_all[name] for name in self.names])
        residual = np.concatenate([
            r - self.targets,
            np.log(np.maximum(state, 1e-12) / self.state_t),
            np.log(np.maximum(kinds, 1e-12) / self.kinds_t),
            [_logit(min(max(emoji, 1e-12), 1 - 1e-12)) - _logit(self.emoji_t)],
        ])
        share_err = 100.0 * max(np.abs(state - self.state_t).max(), np.abs(kinds - self.kinds_t).max(),
                                abs(emoji - self.emoji_t))
        r_err = float(np.abs(r - self.targets).max()) if self.q else 0.0
        return residual, r_err, share_err, r_all, shares

    def merit(self, r_err, share_err):
        return max(r_err / _CAL_TOLERANCE, share_err / _CAL_SHARE_TOLERANCE)

    def base_jacobian(self, shares):
        """Share block of the Jacobian with respect to the base intensities."""
        q = self.q
        J = np.zeros((q + 11, q + 11))
        state = shares[0]
        J[q:q + 6, q:q + 6] = np.eye(6) - state[None, :]
        J[q + 6:, q + 6:] = np.eye(5)
        return J


def _calibrate(spec):
    names = [name for name, value in spec.couplings if value != 0.0]
    ceiling = math.sqrt(1.0 - spec.label_noise)
    for name in names:
        value = spec.coupling(name)
        if abs(value) >= ceiling:
            raise InfeasibleCoupling(
                f"|r|={abs(value)} for {name} is not reachable with label_noise "
                f"{spec.label_noise} (ceiling {ceiling:.3f})"
            )
    problem = _Problem(spec, names)
    q = problem.q

    # Quasi-Newton on shifts and base intensities together.  Shift columns
    # of the Jacobian come from finite differences; base columns start from
    # the softmax derivative of the shares and zero effect on the
    # correlations.  Broyden updates refine every column after each step.
    # The simulation reuses one random stream, so the residual is a smooth
    # deterministic function of the unknowns.
    theta = problem.pack(initial_model(spec, Shifts.from_features(
        {name: 1.5 * problem.targets[i] for i, name in enumerate(names)})))
    residual, r_err, share_err, r_all, shares = problem.evaluate(theta)
    jacobian = None
    iterations = 0
    for _ in range(_CAL_MAX_ITER):
        merit = problem.merit(r_err, share_err)
        if merit < 1.0:
            break
        iterations += 1
        fresh = jacobian is None
        if fresh:
            jacobian = problem.base_jacobian(shares)
            for j in range(q):
                probe = theta.copy()
                probe[j] += _CAL_STEP
                jacobian[:, j] = (problem.evaluate(probe)[0] - residual) / _CAL_STEP
        step = np.linalg.lstsq(jacobian, -residual, rcond=None)[0]
        step /= max(1.0, np.abs(step).max())
        for _ in range(6):
            trial = problem.evaluate(theta + step)
            if problem.merit(trial[1], trial[2]) < merit:
                break
            step /= 2.0
        else:
            if fresh:
                break  # no descent even from a rebuilt Jacobian
            jacobian = None  # stale; rebuild around the current point
            continue
        jacobian += np.outer(trial[0] - residual - jacobian @ step, step) / (step @ step)
        theta = theta + step
        residual, r_err, share_err, r_all, shares = trial
        if np.any(np.abs(theta[:q]) > _CAL_MAX_SHIFT):
            break

    if r_err > _CAL_MAX_ERROR:
        errors = {name: abs(r_all[name] - problem.targets[i]) for i, name in enumerate(names)}
        worst = max(errors, key=errors.get)
        raise InfeasibleCoupling(
            f"coupling {worst}={spec.coupling(worst)} not reachable: best r={r_all[worst]:.3f} "
            f"with label_noise={spec.label_noise}, heterogeneity={spec.heterogeneity}"
        )
    return Calibration(problem.unpack(theta), r_all, shares, iterations)


# --------------------------------------------------------------------------
# PANAS items


def items_for_balance(balance):
    """Item values (positives then negatives) whose PA - NA equals ``balance``.

    Greedy fill from the floor (all positives 1, all negatives 5): raise
    positive items one at a time up to 5, then lower negatives.
    """
    balance = int(balance)
    if not -20 <= balance <= 20:
        raise ValueError(f"balance {balance} outside [-20, 20]")
    need = balance + 20
    pos, neg = [1] * 5, [5] * 5
    for i in range(5):
        step = min(4, need)
        pos[i] += step
        need -= step
    for i in range(5):
        step = min(4, need)
        neg[i] -= step
        need -= step
    return tuple(pos + neg)


# --------------------------------------------------------------------------
# rendering

_PERSONAL = (
    ("whatsapp : Mum", "dinner?"),
    ("whatsapp : Sam", "see you at 5"),
    ("com.facebook.orca : Alex", "haha nice"),
    ("telegram : Jo", "on my way"),
    ("whatsapp : Chris", "call me when you can"),
    ("com.instagram.android : Kim", "liked your photo"),
    ("sms : Dad", "ok"),
)
_GROUP = (
    ("whatsapp : William @ Friendship-Group", "who is coming tonight"),
    ("whatsapp : Ana @ Family", "happy birthday"),
    ("telegram : Lee @ Climbing Club", "session moved to Friday"),
)
_WORK = (
    ("com.google.android.gm : boss", "Re: quarterly numbers"),
    ("linkedin : recruiter", "New opportunity for you"),
    ("com.microsoft.office.outlook : Finance", "Fwd: invoice"),
    ("com.google.android.gm : team", "Meeting moved to 3pm"),
)
_SYSTEM = (
    ("com.android.systemui : Cable charging", "Cable charging"),
    ("android : Settings", "WIFI networks available"),
    ("com.android.vending : Play Store", "Updating 3 apps"),
    ("android : Settings", "USB debugging connected"),
)
_MULTI_ORIGINATORS = ("whatsapp", "telegram", "com.facebook.orca")
_EMOJIS = tuple(chr(cp) for cp in (0x1F600, 0x1F602, 0x1F60A, 0x1F60D, 0x1F64F, 0x1F60E, 0x1F622,
                                   0x1F44D, 0x1F389, 0x1F525))
_SCREEN_NAMES = {
    "o": EventState.SCREEN_ON,
    "f": EventState.SCREEN_OFF,
    "u": EventState.UNLOCK,
    "k": EventState.KEYBOARD_OUT,
}
_VOLUMES = (RingerMode.NORMAL, RingerMode.VIBRATE, RingerMode.SILENT)


def _render_segment(rng, user, t0_ms, t1_ms, counts, volume_probs):
    """Events realizing one segment's counts with times in ``(t0, t1]``."""
    p = counts["p"]
    kinds = (["m"] * counts["m"] + ["s"] * counts["s"] + ["w"] * counts["w"]
             + ["g"] * counts["g"] + ["x"] * (p - counts["m"] - counts["s"] - counts["w"] - counts["g"]))
    emoji_slots = [i for i, kind in enumerate(kinds) if kind != "m"]
    emoji_per_post = [0] * p
    if counts["e"]:
        hits = rng.multinomial(counts["e"], np.full(len(emoji_slots), 1.0 / len(emoji_slots)))
        for slot, h in zip(emoji_slots, hits):
            emoji_per_post[slot] = int(h)
    records = []
    for kind, n_emoji in zip(kinds, emoji_per_post):
        if kind == "m":
            name = _MULTI_ORIGINATORS[rng.integers(len(_MULTI_ORIGINATORS))]
            msg = f"{int(rng.integers(2, 10))} new messages"
        else:
            pool = {"s": _SYSTEM, "w": _WORK, "g": _GROUP, "x": _PERSONAL}[kind]
            name, msg = pool[rng.integers(len(pool))]
            if n_emoji:
                msg = msg + " " + "".join(_EMOJIS[i] for i in rng.integers(len(_EMOJIS), size=n_emoji))
        records.append((EventState.POSTED, name, msg))
    for _ in range(counts["r"]):
        records.append((EventState.REMOVED, _PERSONAL[rng.integers(len(_PERSONAL))][0], ""))
    for key, state in _SCREEN_NAMES.items():
        records.extend((state, "android", "") for _ in range(counts[key]))
    if not records:
        return []
    order = rng.permutation(len(records))
    offsets = np.sort(rng.integers(1, t1_ms - t0_ms + 1, size=len(records)))
    volumes = rng.choice(len(_VOLUMES), size=len(records), p=volume_probs)
    events = []
    for position, index in enumerate(order):
        state, name, msg = records[index]
        events.append(NotificationEvent(
            timestamp=from_millis(t0_ms + int(offsets[position])),
            user_id=user,
            event_name=name,
            state=state,
            message=msg,
            volume=_VOLUMES[volumes[position]],
        ))
    return events


# --------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GroundTruthRow:
    user: str
    t_start: datetime
    t_end: datetime
    score: int
    counts: tuple  # COUNT_COLUMNS order
    rates: tuple  # RATE_COLUMNS order

    def key(self):
        return (self.user, self.t_start, self.t_end)


@dataclass
class Cohort:
    spec: CohortSpec
    events: list
    panas: list
    ground_truth: list
    calibration: Calibration = None
    dismissed: int = 0

    @property
    def n_segments(self):
        return len(self.ground_truth)


def _report_times(rng, spec, day0_ms):
    times = []
    jitter_ms = spec.time_jitter_minutes * 60_000
    for day in range(spec.days):
        for minute in spec.schedule_minutes():
            if rng.random() < spec.skip_prob:
                continue
            nominal = day0_ms + (day * 1440 + minute) * 60_000
            # whole seconds keep the logs readable
            jitter = rng.uniform(-jitter_ms, jitter_ms)
            times.append(int(round((nominal + jitter) / 1000.0)) * 1000)
    return times


def user_id(index):
    return f"u{index + 1:02d}"


def generate_cohort(spec=None):
    """Generate events, PANAS reports and the ground-truth segment table.

    Users are generated independently from streams derived from
    ``(spec.seed, user index)`` and merged in user order, so the output is
    a pure function of the spec.
    """
    spec = spec or CohortSpec()
    calibration = calibrate(spec)
    day0 = datetime.strptime(spec.start_date, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    day0_ms = millis(day0)
    events, panas, truth = [], [], []
    dismissed = 0
    for index in range(spec.n_users):
        rng = make_rng(spec.seed, _STREAM_USER, index)
        user = user_id(index)
        offsets = _draw_offsets(rng, spec)
        volume_probs = rng.dirichlet(np.ones(len(_VOLUMES)) * 2.0)
        times = _report_times(rng, spec, day0_ms)
        scores = _draw_scores(rng, len(times), spec)
        for t, s in zip(times, scores):
            panas.append(PanasEntry(from_millis(t), user, items_for_balance(s)))
        if len(times) < 2:
            continue
        end_scores = scores[1:]
        latent = _latent(rng, end_scores, spec)
        n_events = rng.poisson(spec.events_per_segment, len(end_scores))
        counts = _draw_counts(rng, n_events, latent, offsets, calibration.model)
        rates = rates_from_counts(counts)
        for i in range(len(end_scores)):
            seg_counts = {name: int(counts[name][i]) for name in COUNT_COLUMNS}
            events.extend(_render_segment(rng, user, times[i], times[i + 1], seg_counts, volume_probs))
            if times[i + 1] - times[i] > MAX_GAP_MS:
                dismissed += 1
                continue
            truth.append(GroundTruthRow(
                user=user,
                t_start=from_millis(times[i]),
                t_end=from_millis(times[i + 1]),
                score=int(end_scores[i]),
                counts=tuple(seg_counts[name] for name in COUNT_COLUMNS),
                rates=tuple(float(v) for v in rates[i]),
            ))
    events.sort(key=NotificationEvent.sort_key)
    panas.sort(key=lambda e: (e.timestamp, e.user_id))
    return Cohort(spec, events, panas, truth, calibration, dismissed)


# --------------------------------------------------------------------------
# files


def write_ground_truth(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(GROUND_TRUTH_COLUMNS)
    for row in rows:
        writer.writerow((row.user, format_timestamp(row.t_start), format_timestamp(row.t_end), row.score,
                         *row.counts, *(repr(v) for v in row.rates)))


def read_ground_truth(fh):
    from .ingest import parse_timestamp

    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.reader(fh)
    header = tuple(next(reader, ()))
    if header != GROUND_TRUTH_COLUMNS:
        raise ValueError("not a ground-truth table (unexpected header)")
    rows = []
    n_counts = len(COUNT_COLUMNS)
    for record in reader:
        rows.append(GroundTruthRow(
            user=record[0],
            t_start=parse_timestamp(record[1]),
            t_end=parse_timestamp(record[2]),
            score=int(record[3]),
            counts=tuple(int(v) for v in record[4:4 + n_counts]),
            rates=tuple(float(v) for v in record[4 + n_counts:]),
        ))
    return rows


COHORT_FILES = ("events.jsonl", "panas.jsonl", "ground_truth.csv")


def write_cohort(cohort, out_dir):
    """Write ``events.jsonl``, ``panas.jsonl`` and ``ground_truth.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "events.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for event in cohort.events:
            fh.write(serialize_event(event) + "\n")
    with open(out / "panas.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for entry in cohort.panas:
            fh.write(serialize_panas(entry) + "\n")
    with open(out / "ground_truth.csv", "w", encoding="utf-8", newline="\n") as fh:
        write_ground_truth(cohort.ground_truth, fh)
    return [out / name for name in COHORT_FILES]


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class SegmentMismatch:
    user: str
    t_start: datetime
    t_end: datetime
    reason: str

    def __str__(self):
        return f"{self.user} {format_timestamp(self.t_start)} {format_timestamp(self.t_end)}: {self.reason}"


@dataclass
class VerificationReport:
    checked: int = 0
    n_mismatches: int = 0
    mismatches: list = field(default_factory=list)  # first ``limit`` divergent segments

    @property
    def ok(self):
        return self.n_mismatches == 0

    def to_text(self):
        lines = [f"segments checked: {self.checked}", f"mismatches: {self.n_mismatches}"]
        lines.extend(f"  {m}" for m in self.mismatches)
        return "\n".join(lines) + "\n"


def verify_cohort(events, panas_entries, ground_truth, config=None, limit=10, rate_tol=1e-9):
    """Replay enrich and segment on parsed logs and compare with the ground truth.

    Returns a :class:`VerificationReport`; segments missing on either side
    count as mismatches as well as differing rates or scores.
    """
    from .enrich import DetectorConfig, enrich_all
    from .segment import build_segments

    enriched = enrich_all(events, config or DetectorConfig())
    recovered = {(s.user_id, s.t_start, s.t_end): s for s in build_segments(enriched, panas_entries)}
    expected = {row.key(): row for row in ground_truth}
    report = VerificationReport()

    def record(key, reason):
        report.n_mismatches += 1
        if len(report.mismatches) < limit:
            report.mismatches.append(SegmentMismatch(*key, reason))

    for key in sorted(set(recovered) | set(expected)):
        report.checked += 1
        seg, row = recovered.get(key), expected.get(key)
        if seg is None:
            record(key, "segment missing from pipeline output")
            continue
        if row is None:
            record(key, "segment absent from ground truth")
            continue
        if seg.label_score != row.score:
            record(key, f"score {seg.label_score} != {row.score}")
            continue
        got = seg.features.rates(RATE_COLUMNS)
        diffs = [name for name, a, b in zip(RATE_COLUMNS, got, row.rates) if abs(a - b) > rate_tol]
        if diffs:
            record(key, "rates differ: " + ", ".join(diffs))
    return report
