"""Parsing of notification-event and PANAS self-report logs.

Both logs are UTF-8 JSON-lines files.  Event records carry the keys
``ts, user, name, state, msg, vol``; PANAS records carry ``ts, user`` and
the ten item names of :data:`PANAS_ITEMS` with integer values in [1, 5].

Per-line problems are reported as :class:`~notimind.errors.ParseError`
instances; the stream parsers collect them instead of stopping.
"""

import enum
import json
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import (
    BadItemRange,
    BadState,
    BadTimestamp,
    DuplicateEntry,
    MalformedRecord,
    MissingField,
    ParseError,
)

__all__ = [
    "EventState",
    "RingerMode",
    "NotificationEvent",
    "PanasEntry",
    "PANAS_ITEMS",
    "POSITIVE_ITEMS",
    "NEGATIVE_ITEMS",
    "parse_timestamp",
    "format_timestamp",
    "parse_event_line",
    "parse_event_log",
    "parse_panas_line",
    "parse_panas_log",
    "serialize_event",
    "serialize_panas",
]


class EventState(str, enum.Enum):
    POSTED = "Posted"
    REMOVED = "Removed"
    SCREEN_ON = "ScreenOn"
    SCREEN_OFF = "ScreenOff"
    UNLOCK = "Unlock"
    KEYBOARD_OUT = "KeyboardOut"


class RingerMode(str, enum.Enum):
    NORMAL = "Normal"
    VIBRATE = "Vibrate"
    SILENT = "Silent"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, value):
        try:
            return cls(value)
        except ValueError:
            return cls.UNKNOWN


POSITIVE_ITEMS = ("Determined", "Attentive", "Alert", "Inspired", "Active")
NEGATIVE_ITEMS = ("Upset", "Ashamed", "Nervous", "Afraid", "Hostile")
PANAS_ITEMS = POSITIVE_ITEMS + NEGATIVE_ITEMS

_STATES = {state.value: state for state in EventState}
_STATE_ORDER = {state: i for i, state in enumerate(EventState)}

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,3}))?(Z|\+00:00)$"
)


@dataclass(frozen=True)
class NotificationEvent:
    timestamp: datetime
    user_id: str
    event_name: str
    state: EventState
    message: str = ""
    volume: RingerMode = RingerMode.UNKNOWN

    def sort_key(self):
        return (
            self.user_id,
            self.timestamp,
            _STATE_ORDER[self.state],
            self.event_name,
            self.message,
            self.volume.value,
        )


@dataclass(frozen=True)
class PanasEntry:
    timestamp: datetime
    user_id: str
    items: tuple  # ten ints in PANAS_ITEMS order

    def __post_init__(self):
        if len(self.items) != len(PANAS_ITEMS):
            raise ValueError(f"expected {len(PANAS_ITEMS)} items, got {len(self.items)}")
        for name, value in zip(PANAS_ITEMS, self.items):
            if not 1 <= value <= 5:
                raise BadItemRange(f"{name}={value} outside [1, 5]", field=name, value=value)

    def item(self, name):
        return self.items[PANAS_ITEMS.index(name)]

    def as_dict(self):
        return dict(zip(PANAS_ITEMS, self.items))


def parse_timestamp(text):
    """Parse an RFC-3339 UTC timestamp with at most millisecond precision.

    >>> parse_timestamp("2016-04-12T09:30:00.000Z").isoformat()
    '2016-04-12T09:30:00+00:00'
    """
    if not isinstance(text, str):
        raise BadTimestamp(f"timestamp must be a string, got {text!r}", field="ts", value=text)
    match = _TS_RE.match(text)
    if match is None:
        raise BadTimestamp(f"not an RFC-3339 UTC timestamp: {text!r}", field="ts", value=text)
    year, month, day, hour, minute, second, frac, _ = match.groups()
    millis = int(frac.ljust(3, "0")) if frac else 0
    try:
        return datetime(
            int(year), int(month), int(day), int(hour), int(minute), int(second),
            millis * 1000, tzinfo=timezone.utc,
        )
    except ValueError as exc:
        raise BadTimestamp(f"invalid instant {text!r}: {exc}", field="ts", value=text) from None


def format_timestamp(ts):
    """Inverse of :func:`parse_timestamp`; always emits milliseconds and ``Z``."""
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def _load_object(line):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc.msg}") from None
    if not isinstance(record, dict):
        raise MalformedRecord("record is not a JSON object")
    return record


def _require(record, key):
    if key not in record or record[key] is None:
        raise MissingField(f"missing field {key!r}", field=key)
    return record[key]


def _require_str(record, key, allow_empty=True):
    value = _require(record, key)
    if not isinstance(value, str):
        raise MalformedRecord(f"field {key!r} must be a string", field=key, value=value)
    if not allow_empty and not value:
        raise MissingField(f"field {key!r} is empty", field=key)
    return value


def _with_line(exc, line_no):
    exc.line_no = line_no
    return exc


def parse_event_line(line, line_no=None):
    """Parse one event-log record into a :class:`NotificationEvent`.

    Unknown ``state`` strings raise :class:`BadState`; unknown ``vol``
    strings silently become :attr:`RingerMode.UNKNOWN`.
    """
    try:
        record = _load_object(line)
        ts = parse_timestamp(_require(record, "ts"))
        user = _require_str(record, "user", allow_empty=False)
        name = _require_str(record, "name")
        state_text = _require(record, "state")
        state = _STATES.get(state_text) if isinstance(state_text, str) else None
        if state is None:
            raise BadState(f"unknown state {state_text!r}", field="state", value=state_text)
        message = record.get("msg")
        if message is None:
            message = ""
        elif not isinstance(message, str):
            raise MalformedRecord("field 'msg' must be a string", field="msg", value=message)
        volume = RingerMode.parse(record.get("vol"))
    except ParseError as exc:
        raise _with_line(exc, line_no) from None
    return NotificationEvent(ts, user, name, state, message, volume)


def parse_panas_line(line, line_no=None):
    """Parse one PANAS record into a :class:`PanasEntry`."""
    try:
        record = _load_object(line)
        ts = parse_timestamp(_require(record, "ts"))
        user = _require_str(record, "user", allow_empty=False)
        items = []
        for name in PANAS_ITEMS:
            value = _require(record, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise BadItemRange(f"{name} must be an integer, got {value!r}", field=name, value=value)
            if not 1 <= value <= 5:
                raise BadItemRange(f"{name}={value} outside [1, 5]", field=name, value=value)
            items.append(value)
    except ParseError as exc:
        raise _with_line(exc, line_no) from None
    return PanasEntry(ts, user, tuple(items))


def _parse_stream(stream, parse_line):
    numbered, errors = [], []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            numbered.append((line_no, parse_line(line, line_no=line_no)))
        except ParseError as exc:
            errors.append(exc)
    return numbered, errors


def parse_event_log(stream):
    """Parse an iterable of event lines.

    Returns ``(events, errors)``.  Events are sorted by user then time (full
    record as tie-break, so the result depends only on the multiset of
    lines).  Blank lines are skipped; every other line yields exactly one
    event or one error.
    """
    numbered, errors = _parse_stream(stream, parse_event_line)
    events = [event for _, event in numbered]
    events.sort(key=NotificationEvent.sort_key)
    return events, errors


def parse_panas_log(stream):
    """Parse an iterable of PANAS lines.

    Returns ``(entries, errors)`` with entries sorted by (user, time).  A
    repeated (user, timestamp) pair is rejected as :class:`DuplicateEntry`;
    the first occurrence in input order is kept.
    """
    numbered, errors = _parse_stream(stream, parse_panas_line)
    seen = set()
    entries = []
    for line_no, entry in numbered:
        key = (entry.user_id, entry.timestamp)
        if key in seen:
            errors.append(DuplicateEntry(
                f"duplicate entry for user {entry.user_id!r} at {format_timestamp(entry.timestamp)}",
                field="ts", line_no=line_no,
            ))
            continue
        seen.add(key)
        entries.append(entry)
    entries.sort(key=lambda e: (e.user_id, e.timestamp))
    errors.sort(key=lambda e: e.line_no or 0)
    return entries, errors


def serialize_event(event):
    return json.dumps(
        {
            "ts": format_timestamp(event.timestamp),
            "user": event.user_id,
            "name": event.event_name,
            "state": event.state.value,
            "msg": event.message,
            "vol": event.volume.value,
        },
        ensure_ascii=False,
    )


def serialize_panas(entry):
    record = {"ts": format_timestamp(entry.timestamp), "user": entry.user_id}
    record.update(entry.as_dict())
    return json.dumps(record, ensure_ascii=False)


def millis(ts):
    """Milliseconds since the epoch for an aware datetime."""
    return (ts - _EPOCH) // timedelta(milliseconds=1)


def from_millis(value):
    return _EPOCH + timedelta(milliseconds=int(value))


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
