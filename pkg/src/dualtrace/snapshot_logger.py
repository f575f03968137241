"""Text logging: whole-text diff snapshots and the dynamic snapshot window.

Two strategies produce :class:`~dualtrace.trace_model.TextSnapshot` records.
Browser-style logging stores an edit script between consecutive texts;
editor-style logging stores only the text inside a moving window (DSW) plus
the net length change of the document. :func:`reconstruct` replays either
kind back into full document states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import ReconstructionError
from .trace_model import DiffDelta, Dsw, EditOp, Source, TextSnapshot


# --------------------------------------------------------------------------
# diff / apply


MYERS_MAX_D = 16


def _myers_moves(a: str, b: str, max_d: int | None = None) -> list[str] | None:
    """Shortest edit path from ``a`` to ``b`` as a list of '=', '-', '+' moves.

    Returns ``None`` once the edit distance is known to exceed ``max_d``.
    """
    n, m = len(a), len(b)
    if n == 0:
        return ["+"] * m
    if m == 0:
        return ["-"] * n
    limit = n + m if max_d is None else min(max_d, n + m)
    max_d = n + m
    offset = max_d + 1
    v = [0] * (2 * max_d + 3)
    trace: list[list[int]] = []
    for d in range(limit + 1):
        # V before step d, for k in [-d-1, d+1]
        trace.append(v[offset - d - 1 : offset + d + 2])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
                x = v[offset + k + 1]
            else:
                x = v[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[offset + k] = x
            if x >= n and y >= m:
                return _backtrack(trace, n, m)
    return None


def _backtrack(trace: list[list[int]], n: int, m: int) -> list[str]:
    moves: list[str] = []
    x, y = n, m
    for d in range(len(trace) - 1, -1, -1):
        v = trace[d]
        k = x - y
        if k == -d or (k != d and v[k - 1 + d + 1] < v[k + 1 + d + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v[prev_k + d + 1]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
            moves.append("=")
        if d > 0:
            moves.append("+" if x == prev_x else "-")
        x, y = prev_x, prev_y
    moves.reverse()
    return moves


def _lcs_moves(a: str, b: str) -> list[str]:
    """Edit path through a longest common subsequence, bit-parallel over ``b``.

    Row ``i`` of the LCS table is kept as an integer whose zero bits mark the
    columns where the LCS length grows, so ``L[i][j]`` is the number of zero
    bits among the low ``j`` bits of ``rows[i]``.
    """
    n, m = len(a), len(b)
    full = (1 << m) - 1
    masks: dict[str, int] = {}
    for j, ch in enumerate(b):
        masks[ch] = masks.get(ch, 0) | (1 << j)
    rows = [full]
    v = full
    for ch in a:
        u = v & masks.get(ch, 0)
        v = ((v + u) | (v - u)) & full
        rows.append(v)

    def lcs(i: int, j: int) -> int:
        return j - (rows[i] & ((1 << j) - 1)).bit_count()

    moves: list[str] = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            moves.append("=")
            i -= 1
            j -= 1
        elif lcs(i - 1, j) == lcs(i, j):
            moves.append("-")
            i -= 1
        else:
            moves.append("+")
            j -= 1
    moves.extend("-" * i)
    moves.extend("+" * j)
    moves.reverse()
    return moves


def diff(new_text: str, old_text: str) -> DiffDelta:
    """Minimal edit script turning ``old_text`` into ``new_text``.

    Runs of changes are normalised to a single delete followed by a single
    insert, so ``diff("hello", "hallo")`` reads keep 1, delete 1, insert "e",
    keep 3.
    """
    old, new = old_text, new_text
    head = 0
    limit = min(len(old), len(new))
    while head < limit and old[head] == new[head]:
        head += 1
    tail = 0
    while tail < limit - head and old[len(old) - 1 - tail] == new[len(new) - 1 - tail]:
        tail += 1
    a = old[head : len(old) - tail]
    b = new[head : len(new) - tail]
    core = _myers_moves(a, b, MYERS_MAX_D)
    if core is None:
        # far-apart texts: O(n*m/w) beats O((n+m)*d) once d is large
        core = _lcs_moves(a, b)
    moves = ["="] * head + core + ["="] * tail

    ops: list[EditOp] = []
    i = j = 0
    idx = 0
    while idx < len(moves):
        if moves[idx] == "=":
            run = 0
            while idx < len(moves) and moves[idx] == "=":
                run += 1
                idx += 1
            ops.append(EditOp.keep(run))
            i += run
            j += run
            continue
        dels = 0
        ins: list[str] = []
        while idx < len(moves) and moves[idx] != "=":
            if moves[idx] == "-":
                dels += 1
                i += 1
            else:
                ins.append(new[j])
                j += 1
            idx += 1
        if dels:
            ops.append(EditOp.delete(dels))
        if ins:
            ops.append(EditOp.insert("".join(ins)))
    return DiffDelta(tuple(ops))


def apply_delta(old_text: str, delta: DiffDelta | Iterable[EditOp]) -> str:
    """Apply an edit script; every symbol of ``old_text`` must be kept or deleted."""
    out: list[str] = []
    pos = 0
    for op in delta:
        if op.kind == "insert":
            out.append(op.value)  # type: ignore[arg-type]
            continue
        end = pos + op.value  # type: ignore[operator]
        if end > len(old_text):
            raise ReconstructionError(
                f"{op.kind} {op.value} at {pos} overruns source text of length {len(old_text)}"
            )
        if op.kind == "keep":
            out.append(old_text[pos:end])
        pos = end
    if pos != len(old_text):
        raise ReconstructionError(f"edit script covers {pos} of {len(old_text)} source symbols")
    return "".join(out)


# --------------------------------------------------------------------------
# dynamic snapshot window


@dataclass(frozen=True, slots=True)
class DswStepInput:
    dsw: Dsw
    cursor: int
    selection_start: int
    back_counter: int
    canc_counter: int
    doc_length: int
    prev_doc_length: int | None = None

    def __post_init__(self) -> None:
        if self.back_counter < 0 or self.canc_counter < 0:
            raise ValueError("deletion counters must be non-negative")
        if not 0 <= self.cursor <= self.doc_length:
            raise ValueError(f"cursor {self.cursor} outside document of length {self.doc_length}")
        if not 0 <= self.selection_start <= self.doc_length:
            raise ValueError(f"selection start {self.selection_start} outside document")


def compute_offset(canc_counter: int, doc_length: int, prev_doc_length: int) -> int:
    """Net signed shift of the text that follows the window.

    Only the length change matters for reconstruction; deletions to the right
    of the cursor are already reflected in ``doc_length``, so ``canc_counter``
    does not enter the result.
    """
    return doc_length - prev_doc_length


def tune_window(inp: DswStepInput) -> Dsw:
    left = min(inp.dsw.left, inp.selection_start)
    left = min(left - inp.back_counter, inp.cursor)
    left = max(0, left)
    right = max(inp.dsw.right, inp.cursor)
    # a window kept from before a shrinking edit may reach past the new end
    right = min(right, inp.doc_length)
    return Dsw(left, max(left, right))


def dsw_step(
    inp: DswStepInput,
    doc: str | Callable[[int, int], str],
    *,
    t: int = 0,
    pass_id: int = 0,
) -> tuple[TextSnapshot | None, Dsw]:
    """One logging pass: tune the window, maybe snapshot, then reset the window.

    ``doc`` is either the document text or a ``get_text(left, right)``
    accessor. Nothing is mutated; the caller keeps the returned window.
    """
    window = tune_window(inp)
    snapshot = None
    if not (window.empty and inp.back_counter == 0 and inp.canc_counter == 0):
        text = doc[window.left : window.right] if isinstance(doc, str) else doc(window.left, window.right)
        if len(text) != window.right - window.left:
            raise ReconstructionError(
                f"pass {pass_id}: document returned {len(text)} symbols for window [{window.left}, {window.right})"
            )
        prev_len = inp.doc_length if inp.prev_doc_length is None else inp.prev_doc_length
        snapshot = TextSnapshot(
            pass_id=pass_id,
            text=text,
            dsw_left=window.left,
            dsw_right=window.right,
            offset=compute_offset(inp.canc_counter, inp.doc_length, prev_len),
            t=t,
            source=Source.EDITOR,
        )
    nxt = Dsw(min(inp.cursor, inp.selection_start), inp.cursor)
    return snapshot, nxt


class DswLogger:
    """Stateful editor-side logger driving :func:`dsw_step` once per pass."""

    def __init__(self, initial_text: str, cursor: int | None = None, *, t: int = 0):
        cursor = len(initial_text) if cursor is None else cursor
        self.dsw = Dsw(cursor, cursor)
        self.prev_length = len(initial_text)
        self.back_counter = 0
        self.canc_counter = 0
        self.pass_id = 0
        self.snapshots: list[TextSnapshot] = [
            TextSnapshot(0, initial_text, 0, len(initial_text), 0, t, Source.EDITOR)
        ]

    def on_backspace(self) -> None:
        self.back_counter += 1

    def on_canc(self) -> None:
        self.canc_counter += 1

    def take_pass(self, doc: str, cursor: int, selection_start: int, t: int) -> TextSnapshot | None:
        self.pass_id += 1
        inp = DswStepInput(
            dsw=self.dsw,
            cursor=cursor,
            selection_start=selection_start,
            back_counter=self.back_counter,
            canc_counter=self.canc_counter,
            doc_length=len(doc),
            prev_doc_length=self.prev_length,
        )
        snap, self.dsw = dsw_step(inp, doc, t=t, pass_id=self.pass_id)
        self.back_counter = self.canc_counter = 0
        self.prev_length = len(doc)
        if snap is not None:
            self.snapshots.append(snap)
        return snap


class DiffLogger:
    """Browser-side logger: one edit-script snapshot whenever the text changed."""

    def __init__(self, initial_text: str, *, t: int = 0):
        self.text = initial_text
        self.pass_id = 0
        self.snapshots: list[TextSnapshot] = [
            TextSnapshot(0, initial_text, 0, len(initial_text), 0, t, Source.BROWSER)
        ]

    def on_backspace(self) -> None:
        pass

    def on_canc(self) -> None:
        pass

    def take_pass(self, doc: str, cursor: int, selection_start: int, t: int) -> TextSnapshot | None:
        self.pass_id += 1
        if doc == self.text:
            return None
        snap = TextSnapshot(
            pass_id=self.pass_id,
            text="",
            dsw_left=0,
            dsw_right=len(doc),
            offset=len(doc) - len(self.text),
            t=t,
            source=Source.BROWSER,
            delta=diff(doc, self.text),
        )
        self.text = doc
        self.snapshots.append(snap)
        return snap


# --------------------------------------------------------------------------
# reconstruction


def splice_snapshot(prev: str, snap: TextSnapshot) -> str:
    """Document state after one snapshot, given the state before it."""
    if snap.delta is not None:
        try:
            return apply_delta(prev, snap.delta)
        except ReconstructionError as exc:
            raise ReconstructionError(f"pass {snap.pass_id}: {exc}") from None
    width = snap.dsw_right - snap.dsw_left
    old_end = snap.dsw_left + width - snap.offset
    if old_end < snap.dsw_left or old_end > len(prev):
        raise ReconstructionError(
            f"pass {snap.pass_id}: window [{snap.dsw_left}, {snap.dsw_right}) with offset {snap.offset} "
            f"replaces [{snap.dsw_left}, {old_end}) outside a document of length {len(prev)}"
        )
    return prev[: snap.dsw_left] + snap.text + prev[old_end:]


def reconstruct(snapshots: Sequence[TextSnapshot]) -> list[tuple[int, str]]:
    """Full document text after every logged pass, starting with pass 0."""
    if not snapshots or snapshots[0].pass_id != 0:
        raise ReconstructionError("reconstruction needs the pass-0 snapshot first")
    state = snapshots[0].text
    out = [(0, state)]
    for snap in snapshots[1:]:
        state = splice_snapshot(state, snap)
        out.append((snap.pass_id, state))
    return out
