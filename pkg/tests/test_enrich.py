import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from notimind.enrich import (
    CAMERA,
    MOVIE_CAMERA,
    VIDEO_CAMERA,
    DetectorConfig,
    EmojiTable,
    count_emojis,
    default_emoji_table,
    detect_group,
    detect_media,
    detect_multi,
    detect_system,
    detect_work,
    enrich,
    enrich_all,
)
from notimind.ingest import EventState, NotificationEvent

from _oracles import duration_seconds, is_multi_message, scan_emoji_ranges
from conftest import T0

TABLE_PATH = Path(__file__).parents[1] / "src" / "notimind" / "data" / "emoji.tsv"
TABLE_LINES = TABLE_PATH.read_text(encoding="utf-8").splitlines()
CORPUS = [
    json.loads(line)
    for line in (Path(__file__).parent / "fixtures" / "labeled_messages.jsonl").read_text("utf-8").splitlines()
]


def ev(name="whatsapp : Mum", msg="", state=EventState.POSTED):
    return NotificationEvent(T0, "u1", name, state, msg)


class TestDetectGroup:
    @pytest.mark.parametrize("name, expected", [
        ("whatsapp : William @ Friendship-Group", True),
        ("whatsapp : William", False),
        ("", False),
    ])
    def test_examples(self, name, expected):
        assert detect_group(ev(name)) is expected


class TestDetectWork:
    def test_gmail_package_alias(self):
        assert "gm" in DetectorConfig().work_originators
        assert detect_work(ev("com.google.android.gm : boss"))

    def test_linkedin(self):
        assert detect_work(ev("linkedin : recruiter"))

    def test_personal_message(self):
        assert not detect_work(ev("whatsapp : Mum", "dinner?"))

    @pytest.mark.parametrize("msg", ["Re: budget", "fwd: slides", "write to a.b@corp.example.com"])
    def test_message_tags(self, msg):
        assert detect_work(ev("sms : x", msg))

    @pytest.mark.parametrize("msg", ["Here: budget", "meet @ noon", "pre: x"])
    def test_tag_lookalikes(self, msg):
        assert not detect_work(ev("sms : x", msg))

    def test_originator_is_only_left_of_separator(self):
        assert not detect_work(ev("whatsapp : Gmail Fan", "hello"))

    def test_configurable(self):
        config = DetectorConfig(work_originators=("slack",), work_tags=(), work_email_addresses=False)
        assert detect_work(ev("slack : team"), config)
        assert not detect_work(ev("gmail : boss", "Re: x"), config)


class TestDetectSystem:
    def test_systemui_originator(self):
        assert detect_system(ev("com.android.systemui : Cable charging"))

    @pytest.mark.parametrize("msg", ["WIFI networks available", "usb debugging connected", "Updating apps"])
    def test_keywords(self, msg):
        assert detect_system(ev("android : x", msg))

    def test_keyword_in_name(self):
        assert detect_system(ev("android : USB settings"))

    def test_plain_message(self):
        assert not detect_system(ev("sms : Tom", "see you at 5"))

    def test_word_boundary(self):
        assert not detect_system(ev("sms : Tom", "usbekistan trip"))


class TestDetectMulti:
    @pytest.mark.parametrize("msg, expected", [
        ("5 new messages", True),
        ("2 messages", True),
        ("12 New Messages", True),
        ("1 message", False),
        ("1 new messages", False),
        ("I sent you 5 messages yesterday", False),
        ("5 new messages from Anna", False),
        ("", False),
    ])
    def test_examples(self, msg, expected):
        assert detect_multi(ev(msg=msg)) is expected
        assert is_multi_message(msg) is expected

    @given(st.one_of(
        st.text(max_size=25),
        st.builds(lambda n, mid, tail: f"{n} {mid}{tail}", st.integers(0, 999),
                  st.sampled_from(["", "new "]), st.sampled_from(["message", "messages", "messages!"])),
    ))
    def test_matches_pattern_oracle(self, msg):
        assert detect_multi(ev(msg=msg)) == is_multi_message(msg)

    def test_can_be_disabled(self):
        assert not detect_multi(ev(msg="5 new messages"), DetectorConfig(multi_pattern=False))


class TestCountEmojis:
    def test_two_grinning_faces(self):
        assert count_emojis("hi \U0001F600\U0001F600") == (2, ["GRINNING FACE", "GRINNING FACE"])

    def test_plain_text(self):
        assert count_emojis("plain text") == (0, [])

    def test_video_markers(self):
        assert count_emojis(f"{MOVIE_CAMERA} 0:42") == (1, ["MOVIE CAMERA"])
        assert count_emojis(f"{VIDEO_CAMERA} 0:42") == (1, ["VIDEO CAMERA"])

    def test_unknown_codepoint_in_range(self):
        table = EmojiTable.parse(["1F600..1F64F\tEMOTICONS", "1F600\tGRINNING FACE"])
        assert count_emojis("\U0001F601\U0001F600", table) == (2, ["UNKNOWN", "GRINNING FACE"])

    def test_modifiers_not_counted(self):
        # Thumbs up with a skin tone and a variation selector counts once.
        assert count_emojis("\U0001F44D\U0001F3FD️")[0] == 1

    @given(st.text(alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x1FAFF,
                                          blacklist_categories=("Cs",)), max_size=40))
    def test_count_matches_range_scan(self, message):
        count, names = count_emojis(message)
        assert count == len(names) == scan_emoji_ranges(message, TABLE_LINES)

    @given(st.text(max_size=30), st.text(max_size=30))
    def test_additive_over_concatenation(self, a, b):
        assert count_emojis(a + b)[0] == count_emojis(a)[0] + count_emojis(b)[0]

    def test_table_rejects_bad_lines(self):
        with pytest.raises(ValueError, match="line 1"):
            EmojiTable.parse(["1F64F..1F600\tBACKWARDS"])
        with pytest.raises(ValueError):
            EmojiTable.parse(["no tab here"])

    def test_default_table_loads(self):
        table = default_emoji_table()
        assert table.is_emoji(0x1F600) and not table.is_emoji(ord("a"))


class TestDetectMedia:
    def test_video_with_length(self):
        assert detect_media(f"{MOVIE_CAMERA} 0:42") == (True, duration_seconds("0:42"), False)

    def test_hours(self):
        assert detect_media(f"{VIDEO_CAMERA} 1:02:03") == (True, duration_seconds("1:02:03"), False)

    def test_image(self):
        assert detect_media(CAMERA) == (False, None, True)

    def test_nothing(self):
        assert detect_media("no media") == (False, None, False)

    @pytest.mark.parametrize("msg", [f"{MOVIE_CAMERA} 0:75", f"{MOVIE_CAMERA} later", f"0:42 {MOVIE_CAMERA}"])
    def test_unparseable_length_is_absent(self, msg):
        assert detect_media(msg) == (True, None, False)

    def test_first_token_after_marker(self):
        assert detect_media(f"at 9:15 {MOVIE_CAMERA} 2:05 then 3:00")[1] == 125

    @given(st.integers(0, 59), st.integers(0, 59), st.integers(0, 30))
    def test_duration_matches_oracle(self, m, s, h):
        token = f"{h}:{m:02d}:{s:02d}" if h else f"{m}:{s:02d}"
        assert detect_media(f"{MOVIE_CAMERA} {token}")[1] == duration_seconds(token)


class TestEnrich:
    def test_group_with_emoji(self):
        out = enrich(ev("whatsapp : W @ G", "\U0001F600"))
        assert out.is_group and out.emoji_count == 1

    @pytest.mark.parametrize("state", [EventState.SCREEN_ON, EventState.SCREEN_OFF,
                                       EventState.UNLOCK, EventState.KEYBOARD_OUT])
    def test_screen_event_is_blank(self, state):
        out = enrich(ev("com.android.systemui : USB", "WIFI \U0001F600", state))
        assert not (out.is_group or out.is_work or out.is_system or out.is_multi)
        assert out.emoji_count == 0 and out.message_length == 0 and out.emoji_descriptions == ()

    def test_multi_forces_zero_emojis(self):
        out = enrich(ev(msg="3 new messages"))
        assert out.is_multi and out.emoji_count == 0

    def test_removed_events_are_enriched(self):
        assert enrich(ev("a : b @ c", "x", EventState.REMOVED)).is_group

    @given(st.text(max_size=30), st.text(max_size=30), st.sampled_from(list(EventState)))
    def test_invariants(self, name, msg, state):
        out = enrich(ev(name, msg, state))
        assert out == enrich(ev(name, msg, state))
        assert out.emoji_count == len(out.emoji_descriptions)
        assert out.message_length >= 0
        if out.is_multi:
            assert out.emoji_count == 0
        if out.has_video:
            assert MOVIE_CAMERA in msg or VIDEO_CAMERA in msg
        if out.has_image:
            assert CAMERA in msg
        if out.video_length_seconds is not None:
            assert out.has_video and out.video_length_seconds >= 0

    def test_enrich_all_preserves_order(self):
        events = [ev(msg=str(i)) for i in range(5)]
        assert [e.base for e in enrich_all(events)] == events


class TestLabeledCorpus:
    @pytest.mark.parametrize("row", CORPUS, ids=[f"msg{i:02d}" for i in range(len(CORPUS))])
    def test_flags(self, row):
        out = enrich(ev(row["name"], row["msg"], EventState(row["state"])))
        got = {
            "group": out.is_group, "work": out.is_work, "system": out.is_system, "multi": out.is_multi,
            "video": out.has_video, "image": out.has_image, "emoji": out.emoji_count,
            "length": out.video_length_seconds,
        }
        assert got == {key: row[key] for key in got}

    def test_corpus_size(self):
        assert len(CORPUS) == 20


class TestDetectorConfigFile:
    def test_overrides(self, tmp_path):
        path = tmp_path / "detectors.conf"
        path.write_text("work_originators = slack, teams\nmulti_pattern = false\nimage_markers = U+1F5BC\n")
        config = DetectorConfig.from_file(path)
        assert config.work_originators == ("slack", "teams")
        assert config.multi_pattern is False
        assert config.image_markers == ("\U0001F5BC",)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "detectors.conf"
        path.write_text("colour = blue\n")
        with pytest.raises(ValueError, match="colour"):
            DetectorConfig.from_file(path)
