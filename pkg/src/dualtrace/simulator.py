"""Deterministic editing-session simulator.

A scripted sequence of :data:`EditorAction` values is replayed against an
in-memory document, optionally through a simulated pinyin IME. The run emits
what the two real loggers would have recorded (a keystroke log and a text
snapshot log) together with the ground truth needed to check the rest of the
pipeline.

The IME composes inline: the rendered pinyin, separators included, sits in
the document at the caret until it is confirmed. While a composition is open
the editor reports its start as the selection start, which keeps the whole
composition inside the snapshot window.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

from .errors import ScriptError
from .lexicon import Lexicon
from .pinyin import CHINESE_PUNCTUATION, render, syllabify
from .snapshot_logger import DiffLogger, DswLogger
from .trace_model import (
    BACKSPACE,
    CANC,
    SEPARATOR,
    SPACEBAR,
    KeyEvent,
    KeyKind,
    Source,
    TextSnapshot,
    is_digit_key,
    is_letter_key,
    typed_text,
)

DEFAULT_DWELL = 80
DEFAULT_GAP = 120


# --------------------------------------------------------------------------
# actions


@dataclass(frozen=True, slots=True)
class TypeKey:
    key: str
    dwell: int = DEFAULT_DWELL
    gap: int = DEFAULT_GAP


@dataclass(frozen=True, slots=True)
class ImeConfirm:
    choice: str = SPACEBAR
    dwell: int = DEFAULT_DWELL
    gap: int = DEFAULT_GAP

    @property
    def key(self) -> str:
        return self.choice


@dataclass(frozen=True, slots=True)
class MoveCursor:
    index: int


@dataclass(frozen=True, slots=True)
class Select:
    start: int
    end: int


@dataclass(frozen=True, slots=True)
class Pass:
    pass


EditorAction = Union[TypeKey, ImeConfirm, MoveCursor, Select, Pass]


@dataclass(frozen=True, slots=True)
class SessionConfig:
    initial_text: str = ""
    cursor: int | None = None
    first_id: int = 0
    t0: int = 0
    ime: bool = False
    source: Source = Source.EDITOR
    auto_pass: bool = False
    keyups: bool = True


# --------------------------------------------------------------------------
# IME


@dataclass(frozen=True, slots=True)
class ImeEdit:
    """Document change requested by the IME for one key.

    The composition text ``old`` (possibly empty) is replaced by ``new``.
    ``commit`` closes the composition; ``cause`` names the pattern a text
    logger would see as an incoherence.
    """

    old: str
    new: str
    commit: bool = False
    cause: str | None = None
    confirmed: tuple[str, str] | None = None
    warning: str | None = None


@dataclass(frozen=True)
class ImeState:
    buffer: str = ""
    lexicon: Lexicon = field(default_factory=Lexicon)

    @property
    def rendered(self) -> str:
        return render(self.buffer)

    @property
    def candidates(self) -> list[str]:
        return self.lexicon.candidates(self.buffer)

    @property
    def composing(self) -> bool:
        return bool(self.buffer)


def ime_feed(state: ImeState, key: str) -> tuple[ImeState, ImeEdit | None]:
    """Feed one key to the IME.

    Returns ``None`` as the edit when the IME lets the key through to the
    editor unchanged (editing keys, digits and spaces outside a composition).
    Raises ``ValueError`` for keys the IME cannot take mid-composition.
    """
    old = state.rendered
    if is_letter_key(key):
        nxt = replace(state, buffer=state.buffer + key)
        new = nxt.rendered
        cause = "syllabic_division" if state.buffer and new.endswith(SEPARATOR + key) else None
        return nxt, ImeEdit(old, new, cause=cause)

    if not state.composing:
        if key in CHINESE_PUNCTUATION:
            return state, ImeEdit("", CHINESE_PUNCTUATION[key], commit=True, cause="chinese_punctuation")
        return state, None

    if key == BACKSPACE:
        nxt = replace(state, buffer=state.buffer[:-1])
        new = nxt.rendered
        cause = "separator_deletion" if len(old) - len(new) == 2 else None
        return nxt, ImeEdit(old, new, commit=not nxt.composing, cause=cause)

    if key == SPACEBAR or is_digit_key(key):
        cands = state.candidates
        index = 0 if key == SPACEBAR else (int(key) - 1) % 10
        if index >= len(cands):
            warning = f"no candidate {index + 1} for {state.buffer!r} ({len(cands)} available)"
            return state, ImeEdit(old, old, warning=warning)
        chosen = cands[index]
        return ImeState("", state.lexicon), ImeEdit(
            old, chosen, commit=True, cause="ime_confirmation", confirmed=(chosen, old)
        )

    raise ValueError(f"key {key!r} is not accepted while composing {old!r}")


# --------------------------------------------------------------------------
# ground truth


@dataclass(frozen=True, slots=True)
class TrueConfirmation:
    id: int
    text: str
    pinyin: str
    start: int
    end: int


@dataclass(frozen=True, slots=True)
class KeyTiming:
    id: int
    key: str
    down: int
    dwell: int
    gap: int | None


@dataclass
class GroundTruth:
    pass_states: list[tuple[int, str]] = field(default_factory=list)
    confirmations: list[TrueConfirmation] = field(default_factory=list)
    causes: dict[int, str] = field(default_factory=dict)
    timings: list[KeyTiming] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def final_text(self) -> str:
        return self.pass_states[-1][1]

    def to_json(self) -> dict:
        return {
            "pass_states": [[p, s] for p, s in self.pass_states],
            "confirmations": [
                {"id": c.id, "text": c.text, "pinyin": c.pinyin, "start": c.start, "end": c.end}
                for c in self.confirmations
            ],
            "causes": {str(k): v for k, v in sorted(self.causes.items())},
            "timings": [
                {"id": k.id, "key": k.key, "down": k.down, "dwell": k.dwell, "gap": k.gap} for k in self.timings
            ],
            "warnings": list(self.warnings),
        }


@dataclass
class Session:
    keys: list[KeyEvent]
    snapshots: list[TextSnapshot]
    truth: GroundTruth


# --------------------------------------------------------------------------
# replay


class _Editor:
    def __init__(self, config: SessionConfig, lexicon: Lexicon):
        self.config = config
        self.doc = config.initial_text
        self.caret = len(self.doc) if config.cursor is None else config.cursor
        if not 0 <= self.caret <= len(self.doc):
            raise ScriptError(f"initial cursor {self.caret} outside initial text")
        self.anchor: int | None = None
        self.comp_start: int | None = None
        self.ime = ImeState("", lexicon) if config.ime else None
        self.next_id = config.first_id
        self.last_down: int | None = None
        self.last_up: int | None = None
        self.clock = config.t0
        if config.source is Source.BROWSER:
            self.logger: DswLogger | DiffLogger = DiffLogger(self.doc, t=config.t0)
        else:
            self.logger = DswLogger(self.doc, self.caret, t=config.t0)
        self.events: list[KeyEvent] = []
        self.truth = GroundTruth(pass_states=[(0, self.doc)])
        self.dirty = False
        self.needs_pass = False

    # -- selection helpers
    @property
    def selection(self) -> tuple[int, int] | None:
        if self.anchor is None or self.anchor == self.caret:
            return None
        return min(self.anchor, self.caret), max(self.anchor, self.caret)

    def _delete_selection(self) -> bool:
        sel = self.selection
        if sel is None:
            return False
        a, b = sel
        self.doc = self.doc[:a] + self.doc[b:]
        self.caret = a
        self.anchor = None
        return True

    def _insert(self, text: str) -> None:
        self._delete_selection()
        self.doc = self.doc[: self.caret] + text + self.doc[self.caret :]
        self.caret += len(text)

    # -- passes
    def take_pass(self) -> None:
        sel = self.selection
        if sel is not None:
            sel_start = sel[0]
        elif self.comp_start is not None:
            sel_start = self.comp_start
        else:
            sel_start = self.caret
        self.logger.take_pass(self.doc, self.caret, sel_start, self.clock)
        self.truth.pass_states.append((self.logger.pass_id, self.doc))
        self.dirty = False
        self.needs_pass = False

    # -- actions
    def move(self, index: int, anchor: int | None, idx: int) -> None:
        if self.comp_start is not None:
            raise ScriptError(f"action {idx}: cannot move the cursor while a pinyin composition is open")
        if not (0 <= index <= len(self.doc)) or (anchor is not None and not 0 <= anchor <= len(self.doc)):
            raise ScriptError(f"action {idx}: index outside document of length {len(self.doc)}")
        if self.dirty:
            self.take_pass()
        self.caret = index
        self.anchor = anchor
        self.needs_pass = True

    def press(self, key: str, dwell: int, gap: int, idx: int) -> None:
        if dwell <= 0:
            raise ScriptError(f"action {idx}: dwell must be positive, got {dwell}")
        if self.needs_pass:
            self.take_pass()
        down = (self.config.t0 if self.last_up is None else self.last_up) + gap
        if down < self.config.t0 or (self.last_down is not None and down <= self.last_down):
            raise ScriptError(
                f"action {idx}: gap {gap} puts keydown at {down} ms, not after the previous keydown"
            )
        key_id = self.next_id
        self.next_id += 1
        sel = self.selection
        position = sel[0] if sel is not None else self.caret

        try:
            self._apply(key, key_id)
        except ValueError as exc:
            raise ScriptError(f"action {idx}: {exc}") from None

        up = down + dwell
        self.events.append(KeyEvent(key_id, KeyKind.DOWN, key, position, down))
        if self.config.keyups:
            self.events.append(KeyEvent(key_id, KeyKind.UP, key, position, up))
        prev_gap = None if self.last_up is None else gap
        self.truth.timings.append(KeyTiming(key_id, key, down, dwell, prev_gap))
        self.last_down, self.last_up = down, up
        self.clock = down
        self.dirty = True
        if self.config.auto_pass:
            self.take_pass()

    def _apply(self, key: str, key_id: int) -> None:
        if key == BACKSPACE:
            self.logger.on_backspace()
        elif key == CANC:
            self.logger.on_canc()

        edit = None
        if self.ime is not None:
            self.ime, edit = ime_feed(self.ime, key)
        if edit is not None:
            if edit.warning:
                self.truth.warnings.append(f"key {key_id}: {edit.warning}")
            if self.comp_start is None:
                self._delete_selection()
                self.comp_start = self.caret
            start = self.comp_start
            assert self.doc[start : start + len(edit.old)] == edit.old
            self.doc = self.doc[:start] + edit.new + self.doc[start + len(edit.old) :]
            self.caret = start + len(edit.new)
            if edit.commit:
                self.comp_start = None
            if edit.cause:
                self.truth.causes[key_id] = edit.cause
            if edit.confirmed:
                text, pinyin = edit.confirmed
                self.truth.confirmations.append(TrueConfirmation(key_id, text, pinyin, start, start + len(text)))
            return

        if key == BACKSPACE:
            if not self._delete_selection() and self.caret > 0:
                self.doc = self.doc[: self.caret - 1] + self.doc[self.caret :]
                self.caret -= 1
        elif key == CANC:
            if not self._delete_selection() and self.caret < len(self.doc):
                self.doc = self.doc[: self.caret] + self.doc[self.caret + 1 :]
        else:
            text = typed_text(key)
            if text is not None:
                self._insert(text)


def run_session(
    script: Iterable[EditorAction],
    lexicon: Lexicon | None = None,
    config: SessionConfig | None = None,
) -> Session:
    """Replay ``script`` and return both logs plus the ground truth.

    A pass is forced before a cursor move or selection whenever edits are
    pending, and one is guaranteed between a move or selection and the next
    keystroke. A closing pass captures trailing edits.
    """
    config = config or SessionConfig()
    ed = _Editor(config, lexicon or Lexicon())
    for idx, action in enumerate(script):
        if isinstance(action, (TypeKey, ImeConfirm)):
            if isinstance(action, ImeConfirm) and not (action.choice == SPACEBAR or is_digit_key(action.choice)):
                raise ScriptError(f"action {idx}: confirmation key must be SPACEBAR or a digit")
            ed.press(action.key, action.dwell, action.gap, idx)
        elif isinstance(action, MoveCursor):
            ed.move(action.index, None, idx)
        elif isinstance(action, Select):
            if action.start > action.end:
                raise ScriptError(f"action {idx}: selection start after end")
            ed.move(action.end, action.start if action.start < action.end else None, idx)
        elif isinstance(action, Pass):
            ed.take_pass()
        else:
            raise ScriptError(f"action {idx}: unknown action {action!r}")
    if ed.dirty or ed.needs_pass:
        ed.take_pass()
    # keyups can trail the next keydown (rollover); logs are in time order
    events = sorted(ed.events, key=lambda ev: ev.t)
    return Session(events, ed.logger.snapshots, ed.truth)


# --------------------------------------------------------------------------
# script files


def _action_from_record(rec: dict, lineno: int) -> list[EditorAction]:
    kind = rec.get("type")
    dwell = rec.get("dwell", DEFAULT_DWELL)
    gap = rec.get("gap", DEFAULT_GAP)
    try:
        if kind == "key":
            return [TypeKey(rec["key"], dwell, gap)]
        if kind == "confirm":
            return [ImeConfirm(rec.get("key", SPACEBAR), dwell, gap)]
        if kind == "text":
            out: list[EditorAction] = []
            gaps = rec.get("gaps")
            if gaps is not None and len(gaps) != len(rec["text"]):
                raise ScriptError(
                    f"script line {lineno}: 'gaps' has {len(gaps)} entries for {len(rec['text'])} characters"
                )
            for i, ch in enumerate(rec["text"]):
                g = gaps[i] if gaps is not None else gap
                out.append(TypeKey(SPACEBAR if ch == " " else ch, dwell, g))
            return out
        if kind == "move":
            return [MoveCursor(rec["index"])]
        if kind == "select":
            return [Select(rec["start"], rec["end"])]
        if kind == "pass":
            return [Pass()]
    except (KeyError, IndexError, TypeError) as exc:
        raise ScriptError(f"script line {lineno}: malformed {kind!r} record ({exc})") from None
    raise ScriptError(f"script line {lineno}: unknown action type {kind!r}")


def parse_script(text: str, *, source: str | None = None) -> tuple[SessionConfig, list[EditorAction]]:
    """Read a line-delimited script; an optional ``{"session": {...}}`` line sets the config."""
    config = SessionConfig()
    actions: list[EditorAction] = []
    where = f"{source}: " if source else ""
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"{where}script line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise ScriptError(f"{where}script line {lineno}: record is not an object")
        if "session" in rec:
            opts = dict(rec["session"])
            if "source" in opts:
                opts["source"] = Source(opts["source"])
            try:
                config = SessionConfig(**opts)
            except TypeError as exc:
                raise ScriptError(f"{where}script line {lineno}: {exc}") from None
            continue
        try:
            actions.extend(_action_from_record(rec, lineno))
        except ScriptError as exc:
            raise ScriptError(f"{where}{exc}") from None
    return config, actions


# --------------------------------------------------------------------------
# seeded random scripts


_PLAIN_ALPHABET = "abcdefghij ,.电热毯千里之行"


def random_edit_script(rng: random.Random, n_actions: int = 40) -> tuple[SessionConfig, list[EditorAction]]:
    """Plain-editor session mixing typing, deletions, moves, selections and passes."""
    initial = "".join(rng.choice(_PLAIN_ALPHABET) for _ in range(rng.randint(0, 20)))
    length = len(initial)
    caret = length
    sel: tuple[int, int] | None = None
    actions: list[EditorAction] = []
    prev_dwell = 0

    def press(key: str) -> None:
        nonlocal prev_dwell
        dwell, gap = _dwell_gap(rng, prev_dwell)
        prev_dwell = dwell
        actions.append(TypeKey(key, dwell, gap))

    for _ in range(n_actions):
        r = rng.random()
        if r < 0.65:
            if r < 0.40:
                ch = rng.choice(_PLAIN_ALPHABET)
                press(SPACEBAR if ch == " " else ch)
            else:
                press(BACKSPACE if r < 0.55 else CANC)
            if sel is not None:
                length -= sel[1] - sel[0]
                caret = sel[0]
                sel = None
                if r < 0.40:
                    length, caret = length + 1, caret + 1
            elif r < 0.40:
                length, caret = length + 1, caret + 1
            elif r < 0.55:
                if caret > 0:
                    length, caret = length - 1, caret - 1
            elif caret < length:
                length -= 1
        elif r < 0.75:
            caret = rng.randint(0, length)
            sel = None
            actions.append(MoveCursor(caret))
        elif r < 0.83:
            a = rng.randint(0, length)
            b = rng.randint(a, length)
            actions.append(Select(a, b))
            caret = b
            sel = (a, b) if a < b else None
        else:
            actions.append(Pass())
    return SessionConfig(initial_text=initial), actions


def _dwell_gap(rng: random.Random, prev_dwell: int) -> tuple[int, int]:
    dwell = rng.randint(40, 160)
    if prev_dwell > 1 and rng.random() < 0.25:
        gap = rng.randint(-prev_dwell + 1, -1)
    else:
        gap = rng.randint(0, 700)
    return dwell, gap


def random_ime_session(
    rng: random.Random, lexicon: Lexicon, n_words: int = 6
) -> tuple[SessionConfig, list[EditorAction]]:
    """Pinyin session exercising separators, separator deletion, punctuation and confirmation.

    Every keystroke is followed by a pass so the text log pairs one snapshot
    with each key, as high-frequency sampling would.
    """
    keys = sorted(k for k in lexicon.entries if len(render(k).split(SEPARATOR)) > 1) or sorted(lexicon.entries)
    singles = sorted(lexicon.entries)
    actions: list[EditorAction] = []
    prev_dwell = 0
    forced_deletion = False

    def press(key: str, confirm: bool = False) -> None:
        nonlocal prev_dwell
        dwell, gap = _dwell_gap(rng, prev_dwell)
        prev_dwell = dwell
        actions.append(ImeConfirm(key, dwell, gap) if confirm else TypeKey(key, dwell, gap))

    for w in range(n_words):
        while True:
            chosen = [rng.choice(keys)] + [rng.choice(singles) for _ in range(rng.randint(0, 2))]
            # keep only compositions that split back into the chosen entries
            whole = "".join(chosen)
            if syllabify(whole) == [x for c in chosen for x in syllabify(c)] and lexicon.candidates(whole):
                break
        buffer = ""
        for entry in chosen:
            for ch in entry:
                divides = bool(buffer) and render(buffer + ch).endswith(SEPARATOR + ch)
                press(ch)
                if divides and (not forced_deletion or rng.random() < 0.3):
                    press(BACKSPACE)
                    press(ch)
                    forced_deletion = True
                elif rng.random() < 0.08:
                    press(BACKSPACE)
                    press(ch)
                buffer += ch
        n_cands = len(lexicon.candidates(buffer))
        if rng.random() < 0.5:
            press(SPACEBAR, confirm=True)
        else:
            press(str(rng.randint(1, min(n_cands, 9))), confirm=True)
        if w == 0 or rng.random() < 0.4:
            press(rng.choice(sorted(CHINESE_PUNCTUATION)))

    config = SessionConfig(initial_text=rng.choice(["", "我想", "今天"]), ime=True, auto_pass=True)
    return config, actions


def script_to_records(config: SessionConfig, actions: Sequence[EditorAction]) -> list[dict]:
    """Inverse of :func:`parse_script`, used to write generated scripts to disk."""
    cfg = {
        "initial_text": config.initial_text,
        "cursor": config.cursor,
        "first_id": config.first_id,
        "t0": config.t0,
        "ime": config.ime,
        "source": config.source.value,
        "auto_pass": config.auto_pass,
        "keyups": config.keyups,
    }
    out: list[dict] = [{"session": cfg}]
    for a in actions:
        if isinstance(a, TypeKey):
            out.append({"type": "key", "key": a.key, "dwell": a.dwell, "gap": a.gap})
        elif isinstance(a, ImeConfirm):
            out.append({"type": "confirm", "key": a.choice, "dwell": a.dwell, "gap": a.gap})
        elif isinstance(a, MoveCursor):
            out.append({"type": "move", "index": a.index})
        elif isinstance(a, Select):
            out.append({"type": "select", "start": a.start, "end": a.end})
        else:
            out.append({"type": "pass"})
    return out
