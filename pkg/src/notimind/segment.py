"""Inter-report segmentation and per-segment rate features.

A segment covers the half-open interval ``(t_start, t_end]`` between two
consecutive PANAS reports of one user and is labelled with the balance
score of the report at ``t_end``.  Pairs further apart than ``max_gap``
(10 hours by default) are dismissed together with their events.
"""

import bisect
import csv
import io
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from datetime import timedelta

import numpy as np

from .ingest import EventState, RingerMode, format_timestamp, parse_timestamp
from .panas import score

__all__ = [
    "RATE_FEATURES",
    "SELECTED_FEATURES",
    "FEATURE_LABELS",
    "CSV_COLUMNS",
    "RawCounts",
    "FeatureVector",
    "Segment",
    "Segmentation",
    "FeatureTable",
    "build_segments",
    "segment_stream",
    "count_states",
    "feature_vector",
    "assign_classes",
    "response_rate",
    "write_feature_csv",
    "read_feature_csv",
]

MAX_GAP = timedelta(hours=10)
EMOJI_RATE_CAP = 500.0

RATE_FEATURES = ("p_a", "r_a", "o_a", "f_a", "u_a", "k_a", "s_a", "m_a", "g_a", "e_a", "w_a")
STATE_FEATURES = RATE_FEATURES[:6]

FEATURE_LABELS = {
    "p_a": "Post",
    "r_a": "Remove",
    "o_a": "Screen-On",
    "f_a": "Screen-Off",
    "u_a": "Unlock",
    "k_a": "Keyboard-Out",
    "s_a": "System",
    "m_a": "Multi",
    "g_a": "Group",
    "e_a": "Emoji-Count",
    "w_a": "Work",
}

# The nine inputs of the affect classifiers; Screen-Off is left out because
# it is nearly collinear with Screen-On.
SELECTED_FEATURES = ("k_a", "e_a", "r_a", "w_a", "p_a", "g_a", "m_a", "o_a", "u_a")

CSV_COLUMNS = ("user", "t_start", "t_end", *RATE_FEATURES, "hour", "volume", "score", "class")

_STATE_FIELD = {
    EventState.POSTED: "p",
    EventState.REMOVED: "r",
    EventState.SCREEN_ON: "o",
    EventState.SCREEN_OFF: "f",
    EventState.UNLOCK: "u",
    EventState.KEYBOARD_OUT: "k",
}


@dataclass(frozen=True)
class RawCounts:
    p: int = 0
    r: int = 0
    o: int = 0
    f: int = 0
    u: int = 0
    k: int = 0
    m: int = 0
    g: int = 0
    w: int = 0
    s: int = 0
    e: int = 0

    def __post_init__(self):
        for name in ("p", "r", "o", "f", "u", "k", "m", "g", "w", "s", "e"):
            if getattr(self, name) < 0:
                raise ValueError(f"count {name} is negative")
        for name in ("m", "g", "w", "s"):
            if getattr(self, name) > self.p:
                raise ValueError(f"{name}={getattr(self, name)} exceeds posted count {self.p}")

    @property
    def n(self):
        return self.p + self.r + self.o + self.f + self.u + self.k

    def scaled(self, factor):
        return RawCounts(**{name: getattr(self, name) * factor for name in self.__dataclass_fields__})


@dataclass(frozen=True)
class FeatureVector:
    p_a: float = 0.0
    r_a: float = 0.0
    o_a: float = 0.0
    f_a: float = 0.0
    u_a: float = 0.0
    k_a: float = 0.0
    s_a: float = 0.0
    m_a: float = 0.0
    g_a: float = 0.0
    e_a: float = 0.0
    w_a: float = 0.0
    hour_of_day: int = 0
    volume_mode: RingerMode = RingerMode.UNKNOWN

    def rates(self, names=RATE_FEATURES):
        return [getattr(self, name) for name in names]


@dataclass
class Segment:
    user_id: str
    t_start: object
    t_end: object
    counts: RawCounts
    features: FeatureVector
    label_score: int
    label_class: int = None


@dataclass
class Segmentation:
    """Segments plus the bookkeeping needed to audit what was left out."""

    segments: list
    assigned_events: int = 0
    dropped_events: int = 0
    dismissed: list = field(default_factory=list)  # (user, t_start, t_end) over max_gap


def _rate(numerator, denominator):
    return 100.0 * numerator / denominator if denominator > 0 else 0.0


def count_states(segment_events):
    """Tally states, Posted-event flags and emoji totals for one segment."""
    tally = Counter()
    for event in segment_events:
        tally[_STATE_FIELD[event.state]] += 1
        if event.state is EventState.POSTED:
            tally["m"] += event.is_multi
            tally["g"] += event.is_group
            tally["w"] += event.is_work
            tally["s"] += event.is_system
            tally["e"] += event.emoji_count
    return RawCounts(**tally)


def _dominant_volume(volumes):
    tally = Counter(volumes)
    if not tally:
        return RingerMode.UNKNOWN
    order = list(RingerMode)
    return max(tally, key=lambda mode: (tally[mode], -order.index(mode)))


def feature_vector(counts, t_start, volumes=(), emoji_cap=EMOJI_RATE_CAP):
    """Rate features of one segment.

    State shares are percentages of all events; system, multi and group
    shares are percentages of posted notifications; the emoji rate is per
    non-multi post and the work rate per non-system post.  Rates with a
    zero denominator are 0.
    """
    c = counts
    n = c.n
    return FeatureVector(
        p_a=_rate(c.p, n),
        r_a=_rate(c.r, n),
        o_a=_rate(c.o, n),
        f_a=_rate(c.f, n),
        u_a=_rate(c.u, n),
        k_a=_rate(c.k, n),
        s_a=_rate(c.s, c.p),
        m_a=_rate(c.m, c.p),
        g_a=_rate(c.g, c.p),
        e_a=min(_rate(c.e, c.p - c.m), emoji_cap),
        # flags overlap, so a work post may also be a system post
        w_a=min(max(_rate(c.w, c.p - c.s), 0.0), 100.0),
        hour_of_day=t_start.hour,
        volume_mode=_dominant_volume(volumes),
    )


def segment_stream(events, panas_entries, max_gap=MAX_GAP, emoji_cap=EMOJI_RATE_CAP):
    """Cut enriched events into inter-report segments.

    Returns a :class:`Segmentation`; ``assigned_events + dropped_events``
    always equals the number of input events.
    """
    entries_by_user = defaultdict(list)
    for entry in panas_entries:
        entries_by_user[entry.user_id].append(entry)
    events_by_user = defaultdict(list)
    for event in events:
        events_by_user[event.user_id].append(event)

    result = Segmentation(segments=[])
    for user in sorted(set(entries_by_user) | set(events_by_user)):
        entries = sorted(entries_by_user.get(user, ()), key=lambda e: e.timestamp)
        times = [entry.timestamp for entry in entries]
        keep = [times[i + 1] - times[i] <= max_gap for i in range(len(times) - 1)]
        for i, ok in enumerate(keep):
            if not ok:
                result.dismissed.append((user, times[i], times[i + 1]))
        buckets = defaultdict(list)
        for event in events_by_user.get(user, ()):
            k = bisect.bisect_left(times, event.timestamp)
            # event in (times[k-1], times[k]] belongs to pair k-1
            if 1 <= k < len(times) and keep[k - 1]:
                buckets[k - 1].append(event)
                result.assigned_events += 1
            else:
                result.dropped_events += 1
        for i, ok in enumerate(keep):
            if not ok:
                continue
            members = buckets.get(i, [])
            counts = count_states(members)
            result.segments.append(Segment(
                user_id=user,
                t_start=times[i],
                t_end=times[i + 1],
                counts=counts,
                features=feature_vector(
                    counts, times[i], [e.base.volume for e in members], emoji_cap
                ),
                label_score=score(entries[i + 1]).balance,
            ))
    return result


def build_segments(events, panas_entries, max_gap=MAX_GAP, emoji_cap=EMOJI_RATE_CAP):
    """One segment per consecutive pair of reports no more than ``max_gap`` apart."""
    return segment_stream(events, panas_entries, max_gap, emoji_cap).segments


def assign_classes(segments, model, per_user_models=None):
    """Return copies of ``segments`` with ``label_class`` filled in.

    ``per_user_models`` maps user ids to their own discretization model;
    users missing from it fall back to ``model``.
    """
    per_user_models = per_user_models or {}
    out = []
    for seg in segments:
        chosen = per_user_models.get(seg.user_id, model)
        out.append(replace(seg, label_class=chosen.classify(seg.label_score)))
    return out


@dataclass(frozen=True)
class ResponseRate:
    table: list  # (user, date, count) sorted
    fraction: float
    undefined: bool = False


def response_rate(panas_entries, utc_offset=timedelta(0), min_entries=3):
    """Entries per user-day and the share of user-days with ``min_entries`` or more.

    Days are calendar days at ``utc_offset`` from UTC.  With no entries the
    fraction is reported as 0 and ``undefined`` is set.
    """
    per_day = Counter((e.user_id, (e.timestamp + utc_offset).date()) for e in panas_entries)
    table = sorted((user, day, count) for (user, day), count in per_day.items())
    if not table:
        warnings.warn("no PANAS entries; response rate undefined", stacklevel=2)
        return ResponseRate([], 0.0, undefined=True)
    fraction = sum(count >= min_entries for _, _, count in table) / len(table)
    return ResponseRate(table, fraction)


def _fmt(value):
    return repr(float(value))


def write_feature_csv(segments, fh):
    """Write the feature matrix in the fixed column order of :data:`CSV_COLUMNS`."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for seg in segments:
        fv = seg.features
        writer.writerow([
            seg.user_id,
            format_timestamp(seg.t_start),
            format_timestamp(seg.t_end),
            *(_fmt(v) for v in fv.rates()),
            fv.hour_of_day,
            fv.volume_mode.value,
            seg.label_score,
            "" if seg.label_class is None else seg.label_class,
        ])


@dataclass
class FeatureTable:
    """Column-oriented view of a feature CSV."""

    users: list
    t_start: list
    t_end: list
    rates: np.ndarray  # (n, 11) in RATE_FEATURES order
    hour: np.ndarray
    volume: list
    score: np.ndarray
    label_class: np.ndarray  # int; absent labels make this None

    def __len__(self):
        return len(self.users)

    def columns(self, names):
        idx = [RATE_FEATURES.index(name) for name in names]
        return self.rates[:, idx]

    def column(self, name):
        return self.rates[:, RATE_FEATURES.index(name)]


def read_feature_csv(fh):
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected feature CSV header: {header}")
    users, starts, ends, rates, hours, volumes, scores, classes = [], [], [], [], [], [], [], []
    for row in reader:
        if not row:
            continue
        users.append(row[0])
        starts.append(parse_timestamp(row[1]))
        ends.append(parse_timestamp(row[2]))
        rates.append([float(v) for v in row[3:14]])
        hours.append(int(row[14]))
        volumes.append(RingerMode.parse(row[15]))
        scores.append(int(row[16]))
        classes.append(row[17])
    has_classes = bool(classes) and all(c != "" for c in classes)
    return FeatureTable(
        users=users,
        t_start=starts,
        t_end=ends,
        rates=np.array(rates, dtype=float).reshape(len(users), len(RATE_FEATURES)),
        hour=np.array(hours, dtype=int),
        volume=volumes,
        score=np.array(scores, dtype=int),
        label_class=np.array([int(c) for c in classes], dtype=int) if has_classes else None,
    )
