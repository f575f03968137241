"""Shared record types and the line-delimited JSON log formats.

Three streams exist on disk, one JSON object per line:

* keystroke log: ``{"id", "kind", "key", "position", "t_ms"}``
* text log: ``{"pass", "text", "dsw", "offset", "t_ms", "source"}`` with an
  optional ``"delta"`` edit script on browser snapshots
* dual trace: the keystroke record plus ``{"status", "rule", "ime",
  "rendered", "removed"}`` where the last four are optional

Positions and lengths count Unicode code points, so one Chinese character
occupies exactly one position. Timestamps are integer milliseconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .errors import IntegrityError, ParseError, SchemaError

SPACEBAR = "SPACEBAR"
BACKSPACE = "BACKSPACE"
CANC = "CANC"
ENTER = "ENTER"
NAMED_KEYS = frozenset({SPACEBAR, BACKSPACE, CANC, ENTER})
OTHER_PREFIX = "OTHER:"

SEPARATOR = "'"


class KeyKind(str, Enum):
    DOWN = "down"
    UP = "up"


class Status(str, Enum):
    COHERENT = "coherent"
    RESOLVED = "resolved"
    UNRESOLVED = "unresolved"


class Source(str, Enum):
    EDITOR = "editor"
    BROWSER = "browser"


def typed_text(key: str) -> str | None:
    """Text a key inserts when no input method intervenes, else ``None``.

    Single characters type themselves, ``SPACEBAR`` types a space and
    ``ENTER`` a newline. Lower-case multi-letter labels are treated as a
    literal chunk (used by fixtures that group fast letters into one event).
    Editing keys and ``OTHER:*`` labels type nothing.
    """
    if key == SPACEBAR:
        return " "
    if key == ENTER:
        return "\n"
    if key in NAMED_KEYS or key.startswith(OTHER_PREFIX) or not key:
        return None
    if len(key) == 1 or not key.isupper():
        return key
    return None


def is_letter_key(key: str) -> bool:
    return len(key) == 1 and "a" <= key <= "z"


def is_digit_key(key: str) -> bool:
    return len(key) == 1 and key.isdigit()


@dataclass(frozen=True, slots=True)
class KeyEvent:
    id: int
    kind: KeyKind
    key: str
    position: int
    t: int

    @property
    def is_down(self) -> bool:
        return self.kind is KeyKind.DOWN


@dataclass(frozen=True, slots=True)
class Dsw:
    left: int
    right: int

    def __post_init__(self) -> None:
        if not 0 <= self.left <= self.right:
            raise ValueError(f"invalid snapshot window [{self.left}, {self.right})")

    @property
    def empty(self) -> bool:
        return self.left == self.right


@dataclass(frozen=True, slots=True)
class EditOp:
    """One span of an edit script: keep or delete ``n`` symbols, or insert text."""

    kind: str
    value: int | str

    def __post_init__(self) -> None:
        if self.kind in ("keep", "delete"):
            if not isinstance(self.value, int) or isinstance(self.value, bool) or self.value < 0:
                raise ValueError(f"{self.kind} needs a non-negative count, got {self.value!r}")
        elif self.kind == "insert":
            if not isinstance(self.value, str):
                raise ValueError(f"insert needs a string, got {self.value!r}")
        else:
            raise ValueError(f"unknown edit op {self.kind!r}")

    @classmethod
    def keep(cls, n: int) -> "EditOp":
        return cls("keep", n)

    @classmethod
    def delete(cls, n: int) -> "EditOp":
        return cls("delete", n)

    @classmethod
    def insert(cls, text: str) -> "EditOp":
        return cls("insert", text)


_OP_TAGS = {"keep": "=", "delete": "-", "insert": "+"}
_TAG_OPS = {v: k for k, v in _OP_TAGS.items()}


@dataclass(frozen=True, slots=True)
class DiffDelta:
    ops: tuple[EditOp, ...] = ()

    def __iter__(self) -> Iterator[EditOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def edit_length(self) -> int:
        """Symbols deleted plus symbols inserted."""
        total = 0
        for op in self.ops:
            if op.kind == "delete":
                total += op.value  # type: ignore[operator]
            elif op.kind == "insert":
                total += len(op.value)  # type: ignore[arg-type]
        return total

    def to_json(self) -> list[list]:
        return [[_OP_TAGS[op.kind], op.value] for op in self.ops]

    @classmethod
    def from_json(cls, raw) -> "DiffDelta":
        if not isinstance(raw, list):
            raise ValueError("delta must be a list of [tag, value] pairs")
        ops = []
        for item in raw:
            if not isinstance(item, list) or len(item) != 2 or item[0] not in _TAG_OPS:
                raise ValueError(f"bad delta entry {item!r}")
            ops.append(EditOp(_TAG_OPS[item[0]], item[1]))
        return cls(tuple(ops))


@dataclass(frozen=True, slots=True)
class TextSnapshot:
    pass_id: int
    text: str
    dsw_left: int
    dsw_right: int
    offset: int
    t: int
    source: Source = Source.EDITOR
    delta: DiffDelta | None = None

    @property
    def dsw(self) -> Dsw:
        return Dsw(self.dsw_left, self.dsw_right)


@dataclass(frozen=True, slots=True)
class ImeAnnotation:
    text: str
    pinyin: str
    start: int
    end: int


@dataclass(frozen=True, slots=True)
class DualTraceEvent:
    """A keystroke with its alignment verdict.

    ``rule`` names the pattern that explained an incoherence. ``ime`` is set
    exactly for IME confirmations, ``rendered`` carries the mark actually
    shown for converted punctuation and ``removed`` the number of symbols a
    BACKSPACE took out when the IME dropped a separator along with a letter.
    """

    base: KeyEvent
    status: Status = Status.COHERENT
    rule: str | None = None
    ime: ImeAnnotation | None = None
    rendered: str | None = None
    removed: int | None = None

    def __post_init__(self) -> None:
        is_conf = self.status is Status.RESOLVED and self.rule == "ime_confirmation"
        if (self.ime is not None) != is_conf:
            raise ValueError(f"event {self.base.id}: ime annotation iff resolved ime_confirmation")
        if self.status is Status.RESOLVED and not self.rule:
            raise ValueError(f"event {self.base.id}: resolved events need a rule")
        if self.ime is not None:
            width = self.ime.end - self.ime.start
            if not (self.ime.start < self.ime.end and width == len(self.ime.text)):
                raise ValueError(f"event {self.base.id}: ime range does not match confirmed text")

    @property
    def id(self) -> int:
        return self.base.id

    @property
    def t(self) -> int:
        return self.base.t


# --------------------------------------------------------------------------
# decoding helpers


def _lines(data: bytes | str | Iterable[str]) -> Iterator[tuple[int, str]]:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8 ({exc.reason} at byte {exc.start})") from None
    if isinstance(data, str):
        data = data.split("\n")  # JSON strings may hold other line breaks
    for lineno, line in enumerate(data, start=1):
        line = line.strip()
        if line:
            yield lineno, line


def _load(lineno: int, line: str) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at column {exc.colno}: {exc.msg}", line=lineno) from None
    if not isinstance(rec, dict):
        raise ParseError("record is not a JSON object", line=lineno)
    return rec


def _int(rec: dict, name: str, lineno: int, *, minimum: int | None = 0) -> int:
    if name not in rec:
        raise ParseError(f"missing field {name!r}", line=lineno)
    value = rec[name]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"field {name!r} must be an integer, got {value!r}", line=lineno)
    if minimum is not None and value < minimum:
        raise SchemaError(f"field {name!r} must be >= {minimum}, got {value}", line=lineno)
    return value


def _str(rec: dict, name: str, lineno: int) -> str:
    if name not in rec:
        raise ParseError(f"missing field {name!r}", line=lineno)
    value = rec[name]
    if not isinstance(value, str):
        raise ParseError(f"field {name!r} must be a string, got {value!r}", line=lineno)
    return value


def _key_event(rec: dict, lineno: int) -> KeyEvent:
    kind = _str(rec, "kind", lineno)
    try:
        kind_enum = KeyKind(kind)
    except ValueError:
        raise SchemaError(f"kind must be 'down' or 'up', got {kind!r}", line=lineno) from None
    key = _str(rec, "key", lineno)
    if not key:
        raise SchemaError("empty key identity", line=lineno)
    return KeyEvent(
        id=_int(rec, "id", lineno),
        kind=kind_enum,
        key=key,
        position=_int(rec, "position", lineno),
        t=_int(rec, "t_ms", lineno),
    )


def _key_record(ev: KeyEvent) -> dict:
    return {"id": ev.id, "kind": ev.kind.value, "key": ev.key, "position": ev.position, "t_ms": ev.t}


def _dump(records: Iterable[dict]) -> bytes:
    out = [json.dumps(r, ensure_ascii=False, separators=(",", ":")) for r in records]
    return ("\n".join(out) + "\n").encode("utf-8") if out else b""


def validate_key_stream(events: Sequence[KeyEvent]) -> None:
    """Check stream-level invariants of a time-ordered keystroke log.

    Keydown ids must be dense and ascending, timestamps non-decreasing, and
    every keyup must close an open keydown carrying the same id and key.
    """
    prev: KeyEvent | None = None
    next_id: int | None = None
    open_downs: dict[int, KeyEvent] = {}
    for ev in events:
        if prev is not None and ev.t < prev.t:
            raise IntegrityError(
                f"timestamps go backwards between events {prev.id} ({prev.t} ms) and {ev.id} ({ev.t} ms)"
            )
        if ev.is_down:
            if next_id is not None and ev.id != next_id:
                raise IntegrityError(f"keydown ids not dense: expected {next_id}, found {ev.id}")
            next_id = ev.id + 1
            open_downs[ev.id] = ev
        else:
            down = open_downs.pop(ev.id, None)
            if down is None:
                raise IntegrityError(f"keyup {ev.id} ({ev.key}) has no preceding open keydown")
            if down.key != ev.key:
                raise IntegrityError(f"keyup {ev.id} is for {ev.key!r} but keydown {ev.id} was {down.key!r}")
            if ev.t < down.t:
                raise IntegrityError(f"keyup {ev.id} precedes its keydown")
        prev = ev


# --------------------------------------------------------------------------
# keystroke log


def parse_keystroke_log(data: bytes | str | Iterable[str], *, source: str | None = None) -> list[KeyEvent]:
    """Decode a keystroke log into time-ordered :class:`KeyEvent` records."""
    try:
        events = [_key_event(_load(n, line), n) for n, line in _lines(data)]
    except ParseError as exc:
        raise exc.with_source(source) if source else exc
    try:
        validate_key_stream(events)
    except IntegrityError as exc:
        if source:
            raise IntegrityError(f"{source}: {exc}") from None
        raise
    return events


def write_keystroke_log(events: Iterable[KeyEvent]) -> bytes:
    return _dump(_key_record(ev) for ev in events)


# --------------------------------------------------------------------------
# text log


def _snapshot(rec: dict, lineno: int) -> TextSnapshot:
    source_raw = rec.get("source", "editor")
    try:
        source = Source(source_raw)
    except ValueError:
        raise SchemaError(f"source must be 'editor' or 'browser', got {source_raw!r}", line=lineno) from None
    dsw = rec.get("dsw")
    if not (isinstance(dsw, list) and len(dsw) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in dsw)):
        raise ParseError(f"field 'dsw' must be a [left, right] integer pair, got {dsw!r}", line=lineno)
    left, right = dsw
    if left < 0 or left > right:
        raise SchemaError(f"snapshot window [{left}, {right}) is not ordered", line=lineno)
    delta = None
    if "delta" in rec and rec["delta"] is not None:
        try:
            delta = DiffDelta.from_json(rec["delta"])
        except ValueError as exc:
            raise SchemaError(str(exc), line=lineno) from None
    text = _str(rec, "text", lineno)
    snap = TextSnapshot(
        pass_id=_int(rec, "pass", lineno),
        text=text,
        dsw_left=left,
        dsw_right=right,
        offset=_int(rec, "offset", lineno, minimum=None),
        t=_int(rec, "t_ms", lineno),
        source=source,
        delta=delta,
    )
    if delta is None and len(text) != right - left:
        raise SchemaError(
            f"pass {snap.pass_id}: text has {len(text)} symbols but window [{left}, {right}) spans {right - left}",
            line=lineno,
        )
    return snap


def validate_text_stream(snaps: Sequence[TextSnapshot]) -> None:
    if not snaps or snaps[0].pass_id != 0:
        raise IntegrityError("text log lacks the initial pass-0 snapshot")
    first = snaps[0]
    if first.delta is not None or (first.dsw_left, first.dsw_right) != (0, len(first.text)):
        raise IntegrityError("pass 0 must carry the full initial text with window [0, len)")
    for prev, cur in zip(snaps, snaps[1:]):
        if cur.pass_id <= prev.pass_id:
            raise IntegrityError(f"pass ids not ascending: {prev.pass_id} then {cur.pass_id}")
        if cur.t < prev.t:
            raise IntegrityError(f"timestamps go backwards between passes {prev.pass_id} and {cur.pass_id}")


def parse_text_log(data: bytes | str | Iterable[str], *, source: str | None = None) -> list[TextSnapshot]:
    """Decode a text-snapshot log; pass 0 is mandatory."""
    try:
        snaps = [_snapshot(_load(n, line), n) for n, line in _lines(data)]
    except ParseError as exc:
        raise exc.with_source(source) if source else exc
    try:
        validate_text_stream(snaps)
    except IntegrityError as exc:
        if source:
            raise IntegrityError(f"{source}: {exc}") from None
        raise
    return snaps


def _snapshot_record(s: TextSnapshot) -> dict:
    rec = {
        "pass": s.pass_id,
        "text": s.text,
        "dsw": [s.dsw_left, s.dsw_right],
        "offset": s.offset,
        "t_ms": s.t,
        "source": s.source.value,
    }
    if s.delta is not None:
        rec["delta"] = s.delta.to_json()
    return rec


def write_text_log(snaps: Iterable[TextSnapshot]) -> bytes:
    return _dump(_snapshot_record(s) for s in snaps)


# --------------------------------------------------------------------------
# dual trace


def _dual_record(ev: DualTraceEvent) -> dict:
    rec = _key_record(ev.base)
    rec["status"] = ev.status.value
    if ev.rule is not None:
        rec["rule"] = ev.rule
    if ev.ime is not None:
        rec["ime"] = {"text": ev.ime.text, "pinyin": ev.ime.pinyin, "start": ev.ime.start, "end": ev.ime.end}
    if ev.rendered is not None:
        rec["rendered"] = ev.rendered
    if ev.removed is not None:
        rec["removed"] = ev.removed
    return rec


def write_dual_trace(events: Iterable[DualTraceEvent]) -> bytes:
    return _dump(_dual_record(ev) for ev in events)


def _dual_event(rec: dict, lineno: int) -> DualTraceEvent:
    base = _key_event(rec, lineno)
    status_raw = _str(rec, "status", lineno)
    try:
        status = Status(status_raw)
    except ValueError:
        raise SchemaError(f"unknown status {status_raw!r}", line=lineno) from None
    ime = None
    if rec.get("ime") is not None:
        raw = rec["ime"]
        if not isinstance(raw, dict):
            raise ParseError("field 'ime' must be an object", line=lineno)
        ime = ImeAnnotation(
            text=_str(raw, "text", lineno),
            pinyin=_str(raw, "pinyin", lineno),
            start=_int(raw, "start", lineno),
            end=_int(raw, "end", lineno),
        )
    rule = rec.get("rule")
    rendered = rec.get("rendered")
    removed = rec.get("removed")
    if rule is not None and not isinstance(rule, str):
        raise ParseError("field 'rule' must be a string", line=lineno)
    if rendered is not None and not isinstance(rendered, str):
        raise ParseError("field 'rendered' must be a string", line=lineno)
    if removed is not None:
        removed = _int(rec, "removed", lineno)
    try:
        return DualTraceEvent(base, status, rule, ime, rendered, removed)
    except ValueError as exc:
        raise SchemaError(str(exc), line=lineno) from None


def read_dual_trace(data: bytes | str | Iterable[str], *, source: str | None = None) -> list[DualTraceEvent]:
    try:
        events = [_dual_event(_load(n, line), n) for n, line in _lines(data)]
    except ParseError as exc:
        raise exc.with_source(source) if source else exc
    try:
        validate_key_stream([ev.base for ev in events])
    except IntegrityError as exc:
        if source:
            raise IntegrityError(f"{source}: {exc}") from None
        raise
    return events
