from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualtrace.errors import IntegrityError, ParseError, SchemaError
from dualtrace.trace_model import (
    DualTraceEvent,
    ImeAnnotation,
    KeyEvent,
    KeyKind,
    Source,
    Status,
    TextSnapshot,
    parse_keystroke_log,
    parse_text_log,
    read_dual_trace,
    typed_text,
    write_dual_trace,
    write_keystroke_log,
    write_text_log,
)


def test_empty_keystroke_log():
    assert parse_keystroke_log(b"") == []


def test_dianretan_keys_parse(fixtures_dir):
    events = parse_keystroke_log((fixtures_dir / "dianretan_keys.jsonl").read_bytes())
    assert [e.id for e in events] == list(range(266, 276))
    assert [e.key for e in events] == ["d", "i", "a", "n", "r", "e", "t", "a", "n", "SPACEBAR"]


def test_orphan_keyup_is_integrity_error():
    data = b'{"id":0,"kind":"up","key":"a","position":0,"t_ms":5}\n'
    with pytest.raises(IntegrityError, match="no preceding open keydown"):
        parse_keystroke_log(data)


def test_backwards_time_names_ids():
    data = (
        b'{"id":0,"kind":"down","key":"a","position":0,"t_ms":50}\n'
        b'{"id":1,"kind":"down","key":"b","position":1,"t_ms":40}\n'
    )
    with pytest.raises(IntegrityError, match="events 0 .* and 1"):
        parse_keystroke_log(data)


def test_non_dense_ids():
    data = (
        b'{"id":0,"kind":"down","key":"a","position":0,"t_ms":0}\n'
        b'{"id":2,"kind":"down","key":"b","position":1,"t_ms":9}\n'
    )
    with pytest.raises(IntegrityError, match="not dense"):
        parse_keystroke_log(data)


def test_malformed_record_reports_line_and_source():
    data = b'{"id":0,"kind":"down","key":"a","position":0,"t_ms":0}\n{"id": 1,\n'
    with pytest.raises(ParseError) as info:
        parse_keystroke_log(data, source="keys.jsonl")
    assert "keys.jsonl:line 2" in str(info.value)


def test_negative_position_is_schema_error():
    with pytest.raises(SchemaError):
        parse_keystroke_log(b'{"id":0,"kind":"down","key":"a","position":-1,"t_ms":0}')


def test_single_initial_snapshot():
    (snap,) = parse_text_log('{"pass":0,"text":"A joirney o","dsw":[0,11],"offset":0,"t_ms":0}')
    assert snap == TextSnapshot(0, "A joirney o", 0, 11, 0, 0, Source.EDITOR)


def test_empty_text_log_lacks_initial_snapshot():
    with pytest.raises(IntegrityError, match="pass-0"):
        parse_text_log(b"")


def test_reversed_window_is_schema_error():
    data = '{"pass":0,"text":"","dsw":[5,3],"offset":0,"t_ms":0}'
    with pytest.raises(SchemaError, match="not ordered"):
        parse_text_log(data)


def test_window_text_length_checked():
    data = '{"pass":0,"text":"abc","dsw":[0,2],"offset":0,"t_ms":0}'
    with pytest.raises(SchemaError, match="spans 2"):
        parse_text_log(data)


def test_typed_text():
    assert typed_text("a") == "a"
    assert typed_text("SPACEBAR") == " "
    assert typed_text("nd") == "nd"
    assert typed_text("BACKSPACE") is None
    assert typed_text("OTHER:shift") is None


def test_ime_annotation_required_for_confirmation():
    base = KeyEvent(275, KeyKind.DOWN, "SPACEBAR", 11, 0)
    with pytest.raises(ValueError):
        DualTraceEvent(base, Status.RESOLVED, "ime_confirmation")
    with pytest.raises(ValueError):
        DualTraceEvent(base, Status.RESOLVED, "ime_confirmation", ImeAnnotation("电热毯", "dian're'tan", 0, 2))


def test_empty_dual_trace():
    assert write_dual_trace([]) == b""
    assert read_dual_trace(b"") == []


def test_ime_event_record_carries_pinyin_and_range():
    base = KeyEvent(275, KeyKind.DOWN, "SPACEBAR", 11, 3375)
    ev = DualTraceEvent(base, Status.RESOLVED, "ime_confirmation", ImeAnnotation("电热毯", "dian're'tan", 0, 3))
    data = write_dual_trace([ev])
    assert '"pinyin":"dian\'re\'tan"' in data.decode()
    assert '"start":0,"end":3' in data.decode()
    assert read_dual_trace(data) == [ev]


# --------------------------------------------------------------------------
# round trips over random traces

_keys = st.sampled_from(["a", "z", "SPACEBAR", "BACKSPACE", "CANC", ",", "1", "OTHER:tab", "电"])


@st.composite
def dual_traces(draw):
    n = draw(st.integers(0, 25))
    t = draw(st.integers(0, 10_000))
    events = []
    for i in range(n):
        t += draw(st.integers(0, 500))
        key = draw(_keys)
        base = KeyEvent(i, KeyKind.DOWN, key, draw(st.integers(0, 100)), t)
        choice = draw(st.integers(0, 5))
        if choice == 0:
            text = draw(st.text(alphabet="电热毯千里", min_size=1, max_size=4))
            start = draw(st.integers(0, 50))
            ev = DualTraceEvent(base, Status.RESOLVED, "ime_confirmation", ImeAnnotation(text, "dian're", start, start + len(text)))
        elif choice == 1:
            ev = DualTraceEvent(base, Status.RESOLVED, "chinese_punctuation", rendered="，")
        elif choice == 2:
            ev = DualTraceEvent(base, Status.RESOLVED, "separator_deletion", removed=2)
        elif choice == 3:
            ev = DualTraceEvent(base, Status.UNRESOLVED)
        else:
            ev = DualTraceEvent(base)
        events.append(ev)
        if draw(st.booleans()):
            events.append(DualTraceEvent(KeyEvent(i, KeyKind.UP, key, base.position, t + draw(st.integers(0, 50)))))
    events.sort(key=lambda e: e.t)
    return events


@given(dual_traces())
def test_dual_trace_round_trip(events):
    assert read_dual_trace(write_dual_trace(events)) == events


@given(st.lists(st.tuples(st.text(max_size=12), st.integers(-20, 20)), max_size=10), st.text(max_size=12))
def test_text_log_round_trip(items, initial):
    snaps = [TextSnapshot(0, initial, 0, len(initial), 0, 0)]
    for i, (text, offset) in enumerate(items, start=1):
        snaps.append(TextSnapshot(i, text, 3, 3 + len(text), offset, 10 * i))
    assert parse_text_log(write_text_log(snaps)) == snaps


@given(st.lists(st.tuples(_keys, st.integers(0, 300), st.integers(0, 80)), max_size=20))
def test_keystroke_log_round_trip(items):
    events, t = [], 0
    for i, (key, pos, dt) in enumerate(items):
        t += dt
        events.append(KeyEvent(i, KeyKind.DOWN, key, pos, t))
    assert parse_keystroke_log(write_keystroke_log(events)) == events
