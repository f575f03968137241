from __future__ import annotations

import json
import random

import pytest

from dualtrace import fixtures
from dualtrace.errors import ScriptError
from dualtrace.simulator import (
    ImeConfirm,
    ImeState,
    MoveCursor,
    Pass,
    Select,
    SessionConfig,
    TypeKey,
    ime_feed,
    parse_script,
    random_edit_script,
    random_ime_session,
    run_session,
    script_to_records,
)
from dualtrace.snapshot_logger import reconstruct
from dualtrace.trace_model import BACKSPACE, SPACEBAR, KeyKind


def _feed(lexicon, keys):
    state = ImeState(lexicon=lexicon)
    edits = []
    for k in keys:
        state, edit = ime_feed(state, k)
        edits.append(edit)
    return state, edits


def test_ime_renders_separators(lexicon):
    state, edits = _feed(lexicon, "dianre")
    assert state.rendered == "dian're"
    assert [e.cause for e in edits] == [None, None, None, None, "syllabic_division", None]


def test_ime_backspace_drops_letter_and_separator(lexicon):
    state, edits = _feed(lexicon, [*"dianr", BACKSPACE])
    assert state.rendered == "dian"
    assert edits[-1].cause == "separator_deletion"
    assert (edits[-1].old, edits[-1].new) == ("dian'r", "dian")


def test_ime_confirmation(lexicon):
    state, edits = _feed(lexicon, [*"dianretan", SPACEBAR])
    assert not state.composing
    assert edits[-1].confirmed == ("电热毯", "dian're'tan")
    assert edits[-1].cause == "ime_confirmation" and edits[-1].commit


def test_ime_digit_beyond_candidates_warns(lexicon):
    state, edits = _feed(lexicon, [*"dianretan", "9"])
    assert state.composing and edits[-1].warning and edits[-1].old == edits[-1].new


def test_ime_punctuation_outside_composition(lexicon):
    _, edit = ime_feed(ImeState(lexicon=lexicon), ",")
    assert edit.new == "，" and edit.cause == "chinese_punctuation"


def test_ime_passes_editing_keys_through(lexicon):
    assert ime_feed(ImeState(lexicon=lexicon), BACKSPACE)[1] is None


def test_ime_rejects_punctuation_while_composing(lexicon):
    with pytest.raises(ValueError):
        _feed(lexicon, ["d", "a", ","])


def test_punctuation_while_composing_is_script_error(lexicon):
    script = [TypeKey("d"), TypeKey(",")]
    with pytest.raises(ScriptError, match="action 1"):
        run_session(script, lexicon, SessionConfig(ime=True))


def test_empty_script():
    session = run_session([], None, SessionConfig(initial_text="abc"))
    assert session.keys == []
    assert session.truth.pass_states == [(0, "abc")]
    assert [s.pass_id for s in session.snapshots] == [0]


def test_script_errors_name_action_index():
    with pytest.raises(ScriptError, match="action 1: index outside"):
        run_session([TypeKey("a"), MoveCursor(9)])
    with pytest.raises(ScriptError, match="action 0: dwell"):
        run_session([TypeKey("a", dwell=0)])
    with pytest.raises(ScriptError, match="action 0: selection start"):
        run_session([Select(2, 1)], None, SessionConfig(initial_text="abc"))
    with pytest.raises(ScriptError, match="action 0: confirmation key"):
        run_session([ImeConfirm("x")], None, SessionConfig(ime=True))


def test_initial_cursor_outside_text():
    with pytest.raises(ScriptError):
        run_session([], None, SessionConfig(initial_text="ab", cursor=5))


def test_move_while_composing_is_rejected(lexicon):
    with pytest.raises(ScriptError, match="composition"):
        run_session([TypeKey("d"), MoveCursor(0)], lexicon, SessionConfig(ime=True))


def test_digit_warning_reaches_ground_truth(lexicon):
    script = [TypeKey(c) for c in "dian"] + [ImeConfirm("9"), ImeConfirm()]
    session = run_session(script, lexicon, SessionConfig(ime=True, auto_pass=True))
    assert len(session.truth.warnings) == 1
    assert session.truth.final_text == "电"


def test_selection_replacement():
    script = [Select(2, 9), *(TypeKey(c) for c in "travel")]
    session = run_session(script, None, SessionConfig(initial_text="A journey of"))
    assert session.truth.final_text == "A travel of"


def test_pass_action_and_closing_pass():
    session = run_session([TypeKey("a"), Pass(), TypeKey("b")])
    assert [p for p, _ in session.truth.pass_states] == [0, 1, 2]
    assert session.truth.final_text == "ab"


@pytest.mark.parametrize(
    "name, final",
    [("six_pass", "A travel of a t"), ("dianretan", "电热毯"), ("laozi", "千里之行，始于足下"), ("zhechanpin", "这产品")],
)
def test_bundled_scripts(lexicon, name, final):
    config, actions = fixtures.load_script(name)
    session = run_session(actions, lexicon, config)
    assert session.truth.final_text == final
    assert not session.truth.warnings


def test_script_round_trip(lexicon):
    for seed in range(50):
        rng = random.Random(seed)
        config, actions = random_ime_session(rng, lexicon) if seed % 2 else random_edit_script(rng)
        text = "\n".join(json.dumps(r, ensure_ascii=False) for r in script_to_records(config, actions))
        config2, actions2 = parse_script(text)
        assert config2 == config
        a = run_session(actions, lexicon, config)
        b = run_session(actions2, lexicon, config2)
        assert a.keys == b.keys and a.snapshots == b.snapshots


def test_parse_script_errors():
    with pytest.raises(ScriptError, match="line 1: invalid JSON"):
        parse_script("{nope")
    with pytest.raises(ScriptError, match="line 2: unknown action type"):
        parse_script('{"type": "key", "key": "a"}\n{"type": "jump"}')
    with pytest.raises(ScriptError, match="line 1: record is not an object"):
        parse_script("[1]")


def test_ground_truth_is_consistent(lexicon):
    for seed in range(100):
        config, actions = random_ime_session(random.Random(seed), lexicon)
        session = run_session(actions, lexicon, config)
        downs = [k for k in session.keys if k.kind is KeyKind.DOWN]
        # ids are contiguous and times strictly increase across keydowns
        assert [k.id for k in downs] == list(range(config.first_id, config.first_id + len(downs)))
        assert all(a.t < b.t for a, b in zip(downs, downs[1:]))
        assert all(a.t <= b.t for a, b in zip(session.keys, session.keys[1:]))
        assert set(session.truth.causes) <= {k.id for k in downs}
        assert {"separator_deletion", "ime_confirmation"} <= set(session.truth.causes.values())
        # the text log rebuilds every true pass state that it recorded
        rebuilt = dict(reconstruct(session.snapshots))
        for pass_id, text in session.truth.pass_states:
            if pass_id in rebuilt:
                assert rebuilt[pass_id] == text
        for c in session.truth.confirmations:
            assert session.truth.final_text[c.start : c.end] == c.text or c.text in session.truth.final_text


def test_parse_script_gap_count_mismatch():
    with pytest.raises(ScriptError, match="'gaps' has 2 entries for 3 characters"):
        parse_script('{"type": "text", "text": "abc", "gaps": [1, 2]}')
