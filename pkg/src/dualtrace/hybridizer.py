"""Align a keystroke log with the text states rebuilt from a snapshot log.

Three stages run in sequence. The coherence checker pairs every keydown with
the first text state captured at or after it and decides whether the key's
effect is visible there; maximal runs of equal verdicts form windows. The
solution finder tests each incoherent keystroke against an ordered list of
rules and keeps the first match. The solver turns matches into annotations
and corrected positions, producing the dual trace.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import HybridizationError, IntegrityError
from .pinyin import CHINESE_PUNCTUATION
from .snapshot_logger import reconstruct
from .trace_model import (
    BACKSPACE,
    CANC,
    SEPARATOR,
    SPACEBAR,
    DualTraceEvent,
    ImeAnnotation,
    KeyEvent,
    Status,
    TextSnapshot,
    is_digit_key,
    is_letter_key,
    typed_text,
)

NO_TEXT_WINDOW = "no_text_window"
MISMATCH = "mismatch"


@dataclass(frozen=True, slots=True)
class TextState:
    pass_id: int
    t: int
    text: str


@dataclass(frozen=True, slots=True)
class KeyVerdict:
    id: int
    coherent: bool
    state: int | None  # index into the state list, None when unpaired
    cause: str | None = None


@dataclass(frozen=True, slots=True)
class CoherenceWindow:
    start_id: int
    end_id: int
    coherent: bool

    def __post_init__(self) -> None:
        if self.start_id > self.end_id:
            raise ValueError(f"window [{self.start_id}, {self.end_id}] is reversed")

    def __contains__(self, key_id: int) -> bool:
        return self.start_id <= key_id <= self.end_id


@dataclass(frozen=True, slots=True)
class Alignment:
    """Coherence-checker output shared by the later stages."""

    downs: dict[int, KeyEvent]
    states: list[TextState]
    verdicts: dict[int, KeyVerdict]
    windows: list[CoherenceWindow]

    def state_after(self, key_id: int) -> str | None:
        v = self.verdicts[key_id]
        return None if v.state is None else self.states[v.state].text

    def state_before(self, key_id: int) -> str | None:
        v = self.verdicts[key_id]
        return None if v.state is None else self.states[v.state - 1].text


@dataclass(frozen=True, slots=True)
class TripleContext:
    """An incoherent window with its coherent neighbours and the keystroke under test."""

    before: CoherenceWindow | None
    window: CoherenceWindow
    after: CoherenceWindow | None
    focus: int
    alignment: Alignment

    @property
    def event(self) -> KeyEvent:
        return self.alignment.downs[self.focus]

    @property
    def text(self) -> str | None:
        return self.alignment.state_after(self.focus)

    @property
    def previous_text(self) -> str | None:
        return self.alignment.state_before(self.focus)


@dataclass(frozen=True, slots=True)
class PositionShift:
    shift: int
    position: int


@dataclass(frozen=True, slots=True)
class SeparatorDeletion:
    separator_index: int
    removed: int = 2


@dataclass(frozen=True, slots=True)
class PunctuationPair:
    latin: str
    rendered: str


Payload = PositionShift | SeparatorDeletion | PunctuationPair | ImeAnnotation


@dataclass(frozen=True, slots=True)
class RuleMatch:
    window: CoherenceWindow
    rule: str
    event_id: int
    payload: Payload


@dataclass(frozen=True, slots=True)
class Rule:
    name: str
    match: Callable[[TripleContext], Payload | None]


# --------------------------------------------------------------------------
# coherence checker


def _states(snapshots: Sequence[TextSnapshot]) -> list[TextState]:
    rebuilt = reconstruct(snapshots)
    return [TextState(pid, snap.t, text) for (pid, text), snap in zip(rebuilt, snapshots)]


def _replay(text: str, keys: Sequence[KeyEvent]) -> str:
    """Apply keystrokes at their logged positions, as a plain editor would."""
    for ev in keys:
        p = ev.position
        if p > len(text):
            return text + "\0"  # cannot be reproduced
        if ev.key == BACKSPACE:
            if p > 0:
                text = text[: p - 1] + text[p:]
        elif ev.key == CANC:
            text = text[:p] + text[p + 1 :]
        else:
            typed = typed_text(ev.key)
            if typed is not None:
                text = text[:p] + typed + text[p:]
    return text


def _windows(downs: Sequence[KeyEvent], verdicts: dict[int, KeyVerdict]) -> list[CoherenceWindow]:
    windows: list[CoherenceWindow] = []
    for ev in downs:
        ok = verdicts[ev.id].coherent
        if windows and windows[-1].coherent == ok:
            windows[-1] = CoherenceWindow(windows[-1].start_id, ev.id, ok)
        else:
            windows.append(CoherenceWindow(ev.id, ev.id, ok))
    return windows


def align(keys: Sequence[KeyEvent], snapshots: Sequence[TextSnapshot]) -> Alignment:
    """Pair keydowns with text states and judge each one."""
    states = _states(snapshots) if snapshots else []
    downs = [ev for ev in keys if ev.is_down]
    times = [s.t for s in states[1:]]

    paired: dict[int, int | None] = {}
    groups: dict[int, list[KeyEvent]] = {}
    for ev in downs:
        i = bisect.bisect_left(times, ev.t)
        idx = i + 1 if i < len(times) else None
        paired[ev.id] = idx
        if idx is not None:
            groups.setdefault(idx, []).append(ev)

    replay_ok = {idx: _replay(states[idx - 1].text, grp) == states[idx].text for idx, grp in groups.items()}

    verdicts: dict[int, KeyVerdict] = {}
    for ev in downs:
        idx = paired[ev.id]
        if idx is None:
            verdicts[ev.id] = KeyVerdict(ev.id, False, None, NO_TEXT_WINDOW)
            continue
        text = states[idx].text
        # a group that plain editing reproduces is coherent as a whole, even
        # when a later key in it overwrites an earlier key's text
        if replay_ok[idx] or ev.key in (BACKSPACE, CANC):
            ok = replay_ok[idx]
        else:
            typed = typed_text(ev.key)
            ok = typed is None or text[ev.position : ev.position + len(typed)] == typed
        verdicts[ev.id] = KeyVerdict(ev.id, ok, idx, None if ok else MISMATCH)
    return Alignment({ev.id: ev for ev in downs}, states, verdicts, _windows(downs, verdicts))


def check_coherence(keys: Sequence[KeyEvent], snapshots: Sequence[TextSnapshot]) -> list[CoherenceWindow]:
    return align(keys, snapshots).windows


# --------------------------------------------------------------------------
# rules


def _syllabic_division(ctx: TripleContext) -> Payload | None:
    ev, text = ctx.event, ctx.text
    if text is None or not is_letter_key(ev.key):
        return None
    p = ev.position
    if text[p : p + 2] == SEPARATOR + ev.key:
        return PositionShift(1, p + 1)
    return None


def _separator_deletion(ctx: TripleContext) -> Payload | None:
    ev, text, prev = ctx.event, ctx.text, ctx.previous_text
    if text is None or prev is None or ev.key != BACKSPACE:
        return None
    p = ev.position
    if p >= 2 and prev[p - 2] == SEPARATOR and text == prev[: p - 2] + prev[p:]:
        return SeparatorDeletion(p - 2)
    return None


def _chinese_punctuation(ctx: TripleContext) -> Payload | None:
    ev, text = ctx.event, ctx.text
    mark = CHINESE_PUNCTUATION.get(ev.key)
    if text is None or mark is None:
        return None
    if text[ev.position : ev.position + 1] == mark:
        return PunctuationPair(ev.key, mark)
    return None


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return 0x3400 <= cp <= 0x9FFF or 0xF900 <= cp <= 0xFAFF or 0x20000 <= cp <= 0x2FFFF


def _ime_confirmation(ctx: TripleContext) -> Payload | None:
    ev, text, prev = ctx.event, ctx.text, ctx.previous_text
    if text is None or prev is None or not (ev.key == SPACEBAR or is_digit_key(ev.key)):
        return None
    a = 0
    limit = min(len(prev), len(text))
    while a < limit and prev[a] == text[a]:
        a += 1
    b = 0
    while b < limit - a and prev[-1 - b] == text[-1 - b]:
        b += 1
    removed = prev[a : len(prev) - b]
    inserted = text[a : len(text) - b]
    if not removed or not inserted or a + len(removed) != ev.position:
        return None
    if removed[0] == SEPARATOR or removed[-1] == SEPARATOR:
        return None
    if not all(is_letter_key(c) or c == SEPARATOR for c in removed):
        return None
    if not all(_is_cjk(c) for c in inserted):
        return None
    return ImeAnnotation(inserted, removed, a, a + len(inserted))


RULES: list[Rule] = [
    Rule("syllabic_division", _syllabic_division),
    Rule("separator_deletion", _separator_deletion),
    Rule("chinese_punctuation", _chinese_punctuation),
    Rule("ime_confirmation", _ime_confirmation),
]


def register_rule(rule: Rule, *, before: str | None = None) -> None:
    """Add a rule to the default list, at the end or ahead of ``before``."""
    if any(r.name == rule.name for r in RULES):
        raise ValueError(f"rule {rule.name!r} already registered")
    if before is None:
        RULES.append(rule)
    else:
        names = [r.name for r in RULES]
        RULES.insert(names.index(before), rule)


# --------------------------------------------------------------------------
# solution finder and solver


def triples(alignment: Alignment) -> list[tuple[CoherenceWindow | None, CoherenceWindow, CoherenceWindow | None]]:
    ws = alignment.windows
    return [
        (ws[i - 1] if i > 0 else None, w, ws[i + 1] if i + 1 < len(ws) else None)
        for i, w in enumerate(ws)
        if not w.coherent
    ]


def find_solutions(alignment: Alignment, rules: Sequence[Rule] | None = None) -> list[RuleMatch]:
    """First matching rule for every incoherent keystroke, in rule order."""
    rules = RULES if rules is None else rules
    ids = sorted(alignment.downs)
    matches: list[RuleMatch] = []
    for before, window, after in triples(alignment):
        lo = bisect.bisect_left(ids, window.start_id)
        hi = bisect.bisect_right(ids, window.end_id)
        for key_id in ids[lo:hi]:
            ctx = TripleContext(before, window, after, key_id, alignment)
            for rule in rules:
                payload = rule.match(ctx)
                if payload is not None:
                    matches.append(RuleMatch(window, rule.name, key_id, payload))
                    break
    return matches


def solve(
    keys: Sequence[KeyEvent], matches: Sequence[RuleMatch], incoherent: Iterable[int] = ()
) -> list[DualTraceEvent]:
    """Annotate keystrokes with their matches.

    Ids listed in ``incoherent`` that no match explains become unresolved.
    Keyups and all other keydowns pass through as coherent.
    """
    by_id: dict[int, RuleMatch] = {}
    for m in matches:
        if m.event_id in by_id:
            raise HybridizationError(
                f"conflicting corrections for event {m.event_id}: "
                f"{by_id[m.event_id].rule} in window [{by_id[m.event_id].window.start_id}, "
                f"{by_id[m.event_id].window.end_id}] and {m.rule} in window [{m.window.start_id}, {m.window.end_id}]"
            )
        by_id[m.event_id] = m
    unexplained = set(incoherent) - by_id.keys()

    out: list[DualTraceEvent] = []
    for ev in keys:
        m = by_id.get(ev.id) if ev.is_down else None
        if m is None:
            unresolved = ev.is_down and ev.id in unexplained
            out.append(DualTraceEvent(ev, Status.UNRESOLVED if unresolved else Status.COHERENT))
            continue
        payload = m.payload
        if isinstance(payload, PositionShift):
            base = KeyEvent(ev.id, ev.kind, ev.key, payload.position, ev.t)
            out.append(DualTraceEvent(base, Status.RESOLVED, m.rule))
        elif isinstance(payload, SeparatorDeletion):
            out.append(DualTraceEvent(ev, Status.RESOLVED, m.rule, removed=payload.removed))
        elif isinstance(payload, PunctuationPair):
            out.append(DualTraceEvent(ev, Status.RESOLVED, m.rule, rendered=payload.rendered))
        elif isinstance(payload, ImeAnnotation):
            out.append(DualTraceEvent(ev, Status.RESOLVED, m.rule, ime=payload))
        else:
            out.append(DualTraceEvent(ev, Status.RESOLVED, m.rule))
    return out


@dataclass
class HybridizationResult:
    events: list[DualTraceEvent]
    windows: list[CoherenceWindow]
    matches: list[RuleMatch]
    verdicts: dict[int, KeyVerdict] = field(default_factory=dict)

    def diagnostics(self) -> dict:
        status = Counter(e.status.value for e in self.events if e.base.is_down)
        rules = Counter(e.rule for e in self.events if e.status is Status.RESOLVED)
        unresolved = [e.id for e in self.events if e.base.is_down and e.status is Status.UNRESOLVED]
        return {
            "keydowns": sum(status.values()),
            "coherent": status.get("coherent", 0),
            "resolved": status.get("resolved", 0),
            "unresolved": status.get("unresolved", 0),
            "resolved_by_rule": dict(sorted(rules.items())),
            "unresolved_ids": unresolved,
            "unresolved_causes": {str(i): self.verdicts[i].cause for i in unresolved if i in self.verdicts},
            "coherent_windows": [[w.start_id, w.end_id] for w in self.windows if w.coherent],
            "incoherent_windows": [[w.start_id, w.end_id] for w in self.windows if not w.coherent],
        }


def hybridize(
    keys: Sequence[KeyEvent],
    snapshots: Sequence[TextSnapshot],
    *,
    rules: Sequence[Rule] | None = None,
    strict: bool = False,
) -> HybridizationResult:
    """Merge a keystroke log and a text log into a dual trace.

    With ``strict`` a keydown that has no text state at or after it raises
    :class:`IntegrityError` instead of being left unresolved.
    """
    if not keys:
        return HybridizationResult([], [], [])
    if not snapshots:
        raise IntegrityError("text log is empty; the initial snapshot is missing")
    alignment = align(keys, snapshots)
    if strict:
        late = [i for i, v in alignment.verdicts.items() if v.cause == NO_TEXT_WINDOW]
        if late:
            last_t = alignment.states[-1].t
            raise IntegrityError(
                f"keydowns {late[0]}..{late[-1]} occur after the last text snapshot ({last_t} ms); "
                "the logs do not cover the same session"
            )
    matches = find_solutions(alignment, rules)
    incoherent = [i for i, v in alignment.verdicts.items() if not v.coherent]
    events = solve(keys, matches, incoherent)
    return HybridizationResult(events, alignment.windows, matches, alignment.verdicts)
