import json
import random
from datetime import timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from notimind.errors import (
    BadItemRange,
    BadState,
    BadTimestamp,
    DuplicateEntry,
    MalformedRecord,
    MissingField,
)
from notimind.ingest import (
    PANAS_ITEMS,
    EventState,
    NotificationEvent,
    PanasEntry,
    RingerMode,
    format_timestamp,
    parse_event_line,
    parse_event_log,
    parse_panas_line,
    parse_panas_log,
    parse_timestamp,
    serialize_event,
    serialize_panas,
)

from conftest import T0, at

EXAMPLE = (
    '{"ts":"2016-04-12T09:30:00.000Z","user":"u07",'
    '"name":"whatsapp : William @ Friendship-Group","state":"Posted","msg":"hi \U0001F600","vol":"Normal"}'
)


def event_line(**overrides):
    record = json.loads(EXAMPLE)
    record.update(overrides)
    return json.dumps({k: v for k, v in record.items() if v is not ...})


def panas_line(user="u01", ts="2016-04-12T10:00:00.000Z", **items):
    record = {"ts": ts, "user": user}
    record.update({name: 3 for name in PANAS_ITEMS})
    record.update(items)
    return json.dumps(record)


class TestTimestamps:
    def test_parses_utc_with_millis(self):
        ts = parse_timestamp("2016-04-12T09:30:00.250Z")
        assert ts == at(minutes=30, seconds=0.25)

    def test_accepts_explicit_zero_offset(self):
        assert parse_timestamp("2016-04-12T09:00:00+00:00") == T0

    @pytest.mark.parametrize("text", [
        "2016-04-12 09:30:00Z", "2016-04-12T09:30:00", "2016-04-12T09:30:00+02:00",
        "2016-02-30T00:00:00Z", "2016-04-12T09:30:00.1234Z", "", "yesterday",
    ])
    def test_rejects_other_forms(self, text):
        with pytest.raises(BadTimestamp):
            parse_timestamp(text)

    def test_non_string_rejected(self):
        with pytest.raises(BadTimestamp):
            parse_timestamp(1460453400000)

    @given(st.integers(min_value=0, max_value=10**12))
    def test_format_round_trip(self, ms):
        ts = T0 + timedelta(milliseconds=ms)
        assert parse_timestamp(format_timestamp(ts)) == ts


class TestParseEventLine:
    def test_example_record(self):
        event = parse_event_line(EXAMPLE)
        assert event.state is EventState.POSTED
        assert event.volume is RingerMode.NORMAL
        assert event.user_id == "u07"
        assert event.event_name == "whatsapp : William @ Friendship-Group"
        assert event.message == "hi \U0001F600"
        assert event.timestamp == at(minutes=30)

    def test_empty_message(self):
        assert parse_event_line(event_line(msg="")).message == ""

    def test_unknown_state_is_an_error(self):
        with pytest.raises(BadState) as info:
            parse_event_line(event_line(state="Snoozed"), line_no=4)
        assert info.value.value == "Snoozed"
        assert info.value.field == "state"
        assert info.value.line_no == 4
        assert "line 4" in str(info.value)

    def test_unknown_volume_maps_to_unknown(self):
        assert parse_event_line(event_line(vol="Loud")).volume is RingerMode.UNKNOWN
        assert parse_event_line(event_line(vol=None)).volume is RingerMode.UNKNOWN

    @pytest.mark.parametrize("field", ["ts", "user", "name", "state"])
    def test_missing_required_field(self, field):
        with pytest.raises(MissingField) as info:
            parse_event_line(event_line(**{field: ...}))
        assert info.value.field == field

    def test_empty_user_rejected(self):
        with pytest.raises(MissingField):
            parse_event_line(event_line(user=""))

    def test_bad_timestamp(self):
        with pytest.raises(BadTimestamp):
            parse_event_line(event_line(ts="12/04/2016"))

    @pytest.mark.parametrize("line", ["not json", "[1, 2]", '"text"', event_line(msg=5)])
    def test_malformed(self, line):
        with pytest.raises(MalformedRecord):
            parse_event_line(line)

    @pytest.mark.parametrize("state", list(EventState))
    def test_every_state_accepted(self, state):
        assert parse_event_line(event_line(state=state.value)).state is state


def _sorted_by_hand(events):
    # Insertion sort on (user, timestamp) written without the package's key.
    out = []
    for event in events:
        i = len(out)
        while i > 0 and (out[i - 1].user_id, out[i - 1].timestamp) > (event.user_id, event.timestamp):
            i -= 1
        out.insert(i, event)
    return out


class TestParseEventLog:
    def test_three_valid_lines(self):
        lines = [event_line(ts=format_timestamp(at(minutes=m))) for m in range(3)]
        events, errors = parse_event_log(lines)
        assert len(events) == 3 and errors == []

    def test_malformed_line_is_collected(self):
        lines = [event_line(), event_line(user="u08"), "{broken"]
        events, errors = parse_event_log(lines)
        assert len(events) == 2
        assert len(errors) == 1 and errors[0].line_no == 3

    def test_blank_lines_ignored(self):
        events, errors = parse_event_log([event_line(), "", "   \n", event_line(user="u02")])
        assert len(events) == 2 and errors == []

    def test_out_of_order_input_is_sorted(self):
        rng = random.Random(3)
        lines = [
            event_line(user=f"u{rng.randint(0, 3)}", ts=format_timestamp(at(seconds=rng.randint(0, 10**6))))
            for _ in range(50)
        ]
        events, _ = parse_event_log(lines)
        keyed = [(e.user_id, e.timestamp) for e in events]
        assert keyed == [(e.user_id, e.timestamp) for e in _sorted_by_hand(events[::-1])]
        assert keyed == sorted(keyed)

    @given(st.lists(st.sampled_from([
        event_line(), event_line(user="u02"), event_line(state="ScreenOn", msg=""),
        event_line(ts="2016-04-12T08:00:00.000Z"), event_line(state="Snoozed"), "garbage", "",
    ]), max_size=20), st.randoms())
    def test_total_and_order_independent(self, lines, rnd):
        events, errors = parse_event_log(lines)
        assert len(events) + len(errors) == sum(1 for line in lines if line.strip())
        shuffled = list(lines)
        rnd.shuffle(shuffled)
        again, _ = parse_event_log(shuffled)
        assert again == events


class TestParsePanas:
    def test_all_threes(self):
        entry = parse_panas_line(panas_line())
        assert entry.items == (3,) * 10
        assert entry.item("Upset") == 3

    @pytest.mark.parametrize("value", [0, 6, 2.5, "3", True])
    def test_item_out_of_range(self, value):
        with pytest.raises(BadItemRange) as info:
            parse_panas_line(panas_line(Upset=value))
        assert info.value.field == "Upset"

    def test_missing_item(self):
        record = json.loads(panas_line())
        del record["Hostile"]
        with pytest.raises(MissingField) as info:
            parse_panas_line(json.dumps(record))
        assert info.value.field == "Hostile"

    def test_duplicate_rejected_first_kept(self):
        lines = [panas_line(Alert=5), panas_line(user="u02"), panas_line(Alert=1)]
        entries, errors = parse_panas_log(lines)
        assert len(entries) == 2
        assert [type(e) for e in errors] == [DuplicateEntry]
        assert errors[0].line_no == 3
        kept = next(e for e in entries if e.user_id == "u01")
        assert kept.item("Alert") == 5

    def test_sorted_by_user_then_time(self):
        lines = [
            panas_line(user="b", ts="2016-04-12T12:00:00.000Z"),
            panas_line(user="a", ts="2016-04-13T12:00:00.000Z"),
            panas_line(user="a", ts="2016-04-12T12:00:00.000Z"),
        ]
        entries, _ = parse_panas_log(lines)
        assert [(e.user_id, e.timestamp.day) for e in entries] == [("a", 12), ("a", 13), ("b", 12)]

    def test_entry_constructor_validates(self):
        with pytest.raises(BadItemRange):
            PanasEntry(T0, "u", (3,) * 9 + (7,))
        with pytest.raises(ValueError):
            PanasEntry(T0, "u", (3,) * 9)


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30)


class TestRoundTrip:
    @given(
        st.integers(min_value=0, max_value=10**12),
        texts.filter(bool), texts, st.sampled_from(list(EventState)), texts,
        st.sampled_from(list(RingerMode)),
    )
    def test_event(self, ms, user, name, state, message, volume):
        event = NotificationEvent(T0 + timedelta(milliseconds=ms), user, name, state, message, volume)
        assert parse_event_line(serialize_event(event)) == event

    @given(st.integers(min_value=0, max_value=10**12), texts.filter(bool),
           st.lists(st.integers(1, 5), min_size=10, max_size=10))
    def test_panas(self, ms, user, items):
        entry = PanasEntry(T0 + timedelta(milliseconds=ms), user, tuple(items))
        assert parse_panas_line(serialize_panas(entry)) == entry
