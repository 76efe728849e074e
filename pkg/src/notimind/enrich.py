"""Category flags and content metrics for notification events.

Every detector is a pure function of the event and a
:class:`DetectorConfig`.  Flags are not mutually exclusive: a work message
posted to a group is both ``is_work`` and ``is_group``.
"""

import bisect
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ._kvfile import as_bool, as_list, read_kv
from .ingest import EventState, NotificationEvent

__all__ = [
    "DetectorConfig",
    "EmojiTable",
    "EnrichedEvent",
    "default_emoji_table",
    "detect_group",
    "detect_work",
    "detect_system",
    "detect_multi",
    "detect_media",
    "count_emojis",
    "enrich",
    "enrich_all",
]

MOVIE_CAMERA = "\U0001F3A5"
VIDEO_CAMERA = "\U0001F4F9"
CAMERA = "\U0001F4F7"

SCREEN_STATES = frozenset(
    {EventState.SCREEN_ON, EventState.SCREEN_OFF, EventState.UNLOCK, EventState.KEYBOARD_OUT}
)


@dataclass(frozen=True)
class DetectorConfig:
    """Keyword and originator lists used by the category detectors.

    ``work_originators`` are matched case-insensitively against the
    alphanumeric tokens of the originator (the part of the event name before
    ``" : "``), so ``com.google.android.gm`` matches the ``gm`` alias of
    Gmail.  ``work_tags`` are reply/forward markers looked up at a word
    boundary in the message body.
    """

    work_originators: tuple = ("gmail", "gm", "email", "outlook", "k9", "linkedin")
    work_tags: tuple = ("Re:", "Fwd:")
    work_email_addresses: bool = True
    system_keywords: tuple = ("Updating", "WIFI", "USB")
    system_originators: tuple = ("com.android.systemui",)
    multi_pattern: bool = True
    video_markers: tuple = (MOVIE_CAMERA, VIDEO_CAMERA)
    image_markers: tuple = (CAMERA,)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @classmethod
    def from_file(cls, path):
        """Load overrides from a ``key = value`` file; lists are comma separated."""
        raw = read_kv(path)
        kwargs = {}
        for key, value in raw.items():
            if key in ("work_email_addresses", "multi_pattern"):
                kwargs[key] = as_bool(value)
            elif key in ("work_originators", "work_tags", "system_keywords", "system_originators"):
                kwargs[key] = tuple(as_list(value))
            elif key in ("video_markers", "image_markers"):
                kwargs[key] = tuple(chr(int(cp.upper().removeprefix("U+"), 16)) for cp in as_list(value))
            else:
                raise ValueError(f"unknown detector option {key!r}")
        return cls(**kwargs)

    def _compiled(self, name, build):
        if name not in self._cache:
            self._cache[name] = build()
        return self._cache[name]

    @property
    def work_originator_set(self):
        return self._compiled("orig", lambda: frozenset(o.lower() for o in self.work_originators))

    @property
    def work_tag_re(self):
        def build():
            if not self.work_tags:
                return None
            alternatives = "|".join(re.escape(tag) for tag in self.work_tags)
            return re.compile(rf"(?<!\w)(?:{alternatives})", re.IGNORECASE)
        return self._compiled("tags", build)

    @property
    def system_keyword_re(self):
        def build():
            if not self.system_keywords:
                return None
            alternatives = "|".join(re.escape(k) for k in self.system_keywords)
            return re.compile(rf"\b(?:{alternatives})\b", re.IGNORECASE)
        return self._compiled("system", build)


DEFAULT_CONFIG = DetectorConfig()

_EMAIL_RE = re.compile(r"@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+")
_MULTI_RE = re.compile(r"^\s*(\d+)\s+(?:new\s+)?messages?\s*$", re.IGNORECASE)
_DURATION_RE = re.compile(r"(?<![\d:])(?:(\d+):)?(\d{1,2}):(\d{2})(?![\d:])")
_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmojiTable:
    """Codepoint ranges that count as emoji, plus per-codepoint names.

    Parsed from the tab-separated format ``FIRST..LAST<TAB>RANGE-NAME`` /
    ``CODEPOINT<TAB>NAME``.
    """

    def __init__(self, ranges, names):
        merged = sorted(ranges)
        self._starts = [lo for lo, _ in merged]
        self._ends = [hi for _, hi in merged]
        self.names = dict(names)

    @classmethod
    def parse(cls, lines):
        ranges, names = [], {}
        for line_no, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                key, label = line.split("\t", 1)
                if ".." in key:
                    lo, hi = (int(part, 16) for part in key.split(".."))
                    if hi < lo:
                        raise ValueError("empty range")
                    ranges.append((lo, hi))
                else:
                    names[int(key, 16)] = label.strip()
            except ValueError as exc:
                raise ValueError(f"emoji table line {line_no}: {exc}") from None
        return cls(ranges, names)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh)

    def is_emoji(self, codepoint):
        i = bisect.bisect_right(self._starts, codepoint) - 1
        return i >= 0 and codepoint <= self._ends[i]

    def describe(self, codepoint):
        return self.names.get(codepoint, "UNKNOWN")


@lru_cache(maxsize=1)
def default_emoji_table():
    text = resources.files("notimind").joinpath("data/emoji.tsv").read_text(encoding="utf-8")
    return EmojiTable.parse(text.splitlines())


@dataclass(frozen=True)
class EnrichedEvent:
    base: NotificationEvent
    is_group: bool = False
    is_work: bool = False
    is_system: bool = False
    is_multi: bool = False
    emoji_count: int = 0
    emoji_descriptions: tuple = ()
    has_video: bool = False
    video_length_seconds: int = None
    has_image: bool = False
    message_length: int = 0

    @property
    def state(self):
        return self.base.state

    @property
    def timestamp(self):
        return self.base.timestamp

    @property
    def user_id(self):
        return self.base.user_id


def _originator(event_name):
    return event_name.split(" : ", 1)[0].strip()


def detect_group(event):
    return "@" in event.event_name


def detect_work(event, config=DEFAULT_CONFIG):
    tokens = _TOKEN_RE.findall(_originator(event.event_name).lower())
    if config.work_originator_set.intersection(tokens):
        return True
    message = event.message
    tag_re = config.work_tag_re
    if tag_re is not None and tag_re.search(message):
        return True
    return config.work_email_addresses and _EMAIL_RE.search(message) is not None


def detect_system(event, config=DEFAULT_CONFIG):
    keyword_re = config.system_keyword_re
    if keyword_re is not None and (
        keyword_re.search(event.message) or keyword_re.search(event.event_name)
    ):
        return True
    originator = _originator(event.event_name).lower()
    return any(originator == o.lower() for o in config.system_originators)


def detect_multi(event, config=DEFAULT_CONFIG):
    if not config.multi_pattern:
        return False
    match = _MULTI_RE.match(event.message)
    return match is not None and int(match.group(1)) >= 2


def count_emojis(message, table=None):
    """Return ``(count, descriptions)`` for the emoji codepoints in ``message``.

    >>> count_emojis("hi \\U0001F600\\U0001F600")
    (2, ['GRINNING FACE', 'GRINNING FACE'])
    """
    table = table or default_emoji_table()
    descriptions = [table.describe(ord(ch)) for ch in message if table.is_emoji(ord(ch))]
    return len(descriptions), descriptions


def _parse_duration(match):
    hours, minutes, seconds = match.groups()
    minutes, seconds = int(minutes), int(seconds)
    if seconds >= 60:
        return None
    if hours is not None:
        if minutes >= 60:
            return None
        return int(hours) * 3600 + minutes * 60 + seconds
    return minutes * 60 + seconds


def detect_media(message, config=DEFAULT_CONFIG):
    """Return ``(has_video, video_length_seconds, has_image)``.

    The length is read from the first ``m:ss`` or ``h:mm:ss`` token after
    the first video marker; it is ``None`` when no valid token follows.
    """
    positions = [message.find(marker) for marker in config.video_markers]
    positions = [p for p in positions if p >= 0]
    has_video = bool(positions)
    length = None
    if has_video:
        match = _DURATION_RE.search(message, min(positions) + 1)
        if match is not None:
            length = _parse_duration(match)
    has_image = any(marker in message for marker in config.image_markers)
    return has_video, length, has_image


def enrich(event, config=DEFAULT_CONFIG, table=None):
    """Apply every detector to ``event``.

    Screen-interaction events carry no notification content and come back
    with all flags cleared.  Aggregate ("5 new messages") banners are
    excluded from emoji accounting.
    """
    if event.state in SCREEN_STATES:
        return EnrichedEvent(base=event)
    message = event.message
    is_multi = detect_multi(event, config)
    if is_multi:
        count, descriptions = 0, ()
    else:
        count, descriptions = count_emojis(message, table)
    has_video, video_length, has_image = detect_media(message, config)
    return EnrichedEvent(
        base=event,
        is_group=detect_group(event),
        is_work=detect_work(event, config),
        is_system=detect_system(event, config),
        is_multi=is_multi,
        emoji_count=count,
        emoji_descriptions=tuple(descriptions),
        has_video=has_video,
        video_length_seconds=video_length,
        has_image=has_image,
        message_length=len(message),
    )


def enrich_all(events, config=DEFAULT_CONFIG, table=None):
    table = table or default_emoji_table()
    return [enrich(event, config, table) for event in events]
