"""Segmentation trees and interkeystroke-interval metrics.

Every IME confirmation in a dual trace is expanded into a tree of words,
syllables and letters whose timestamps come from the letter keydowns. The
tree yields three nested interval categories (between letters of a
syllable, between syllables of a word, between words); two behavioural
categories surround each confirmation key. Plain alphabetic typing is
split into within-word and between-word intervals instead.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import PropagationError, TreeError
from .segmentation import Segmenter, segment_words, split_syllables
from .trace_model import (
    BACKSPACE,
    SEPARATOR,
    SPACEBAR,
    DualTraceEvent,
    KeyEvent,
    Status,
    is_letter_key,
    typed_text,
)


class Level(str, Enum):
    TEXT = "text"
    WORD = "word"
    SYLLABLE = "syllable"
    LETTER = "letter"


class Category(str, Enum):
    LATIN_LETTER = "latin_letter"
    PINYIN_SYLLABLE = "pinyin_syllable"
    WORD = "word"
    IME_BEFORE = "ime_before"
    IME_AFTER = "ime_after"
    # the same two intervals measured as written in the tree formulas
    IME_BEFORE_FORMULA = "ime_before_formula"
    IME_AFTER_FORMULA = "ime_after_formula"
    # and as flight times, from the neighbouring key's release
    IME_BEFORE_FLIGHT = "ime_before_flight"
    IME_AFTER_FLIGHT = "ime_after_flight"
    WITHIN_WORD = "within_word"
    BETWEEN_WORD = "between_word"


PINYIN_CATEGORIES = (
    Category.LATIN_LETTER,
    Category.PINYIN_SYLLABLE,
    Category.WORD,
    Category.IME_BEFORE,
    Category.IME_AFTER,
)

MARKERS = {
    Category.LATIN_LETTER: "●",
    Category.PINYIN_SYLLABLE: "◆",
    Category.WORD: "■",
    Category.IME_BEFORE: "▲",
    Category.IME_AFTER: "▼",
}


@dataclass(frozen=True, slots=True)
class SegmentationNode:
    level: Level
    content: str
    start_t: int
    end_t: int
    children: tuple["SegmentationNode", ...] = ()
    key_id: int | None = None  # letters only
    character: str | None = None  # syllables only

    @classmethod
    def parent(cls, level: Level, content: str, children: Sequence["SegmentationNode"], **kw) -> "SegmentationNode":
        if not children:
            raise TreeError(f"{level.value} node {content!r} has no children")
        return cls(
            level,
            content,
            min(c.start_t for c in children),
            max(c.end_t for c in children),
            tuple(children),
            **kw,
        )

    def walk(self) -> Iterable["SegmentationNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list["SegmentationNode"]:
        return [n for n in self.walk() if not n.children]


@dataclass(frozen=True, slots=True)
class IkiSample:
    category: Category
    value: int
    first_id: int
    second_id: int


# --------------------------------------------------------------------------
# trees


def propagate_timestamps(confirmation: DualTraceEvent, letters: Sequence[KeyEvent]) -> list[SegmentationNode]:
    """Syllable nodes with letter leaves timed by their keydowns.

    When the confirmed text has one character per syllable, each syllable
    records the character it became.
    """
    if confirmation.ime is None:
        raise PropagationError(f"event {confirmation.id} is not an IME confirmation")
    sylls = split_syllables(confirmation.ime.pinyin)
    wanted = "".join(sylls)
    got = "".join(ev.key for ev in letters)
    if got != wanted:
        raise PropagationError(
            f"confirmation {confirmation.id}: pinyin {confirmation.ime.pinyin!r} needs letters {wanted!r}, "
            f"trace has {got!r}"
        )
    chars = confirmation.ime.text if len(confirmation.ime.text) == len(sylls) else None
    nodes: list[SegmentationNode] = []
    i = 0
    for n, syl in enumerate(sylls):
        leaves = [SegmentationNode(Level.LETTER, ev.key, ev.t, ev.t, key_id=ev.id) for ev in letters[i : i + len(syl)]]
        i += len(syl)
        nodes.append(SegmentationNode.parent(Level.SYLLABLE, syl, leaves, character=chars[n] if chars else None))
    return nodes


def build_tree(confirmation: DualTraceEvent, letters: Sequence[KeyEvent], seg: Segmenter) -> SegmentationNode:
    """Root (confirmed text) → words → syllables → letters."""
    syllables = propagate_timestamps(confirmation, letters)
    text = confirmation.ime.text  # type: ignore[union-attr]
    if len(syllables) != len(text):
        raise TreeError(
            f"confirmation {confirmation.id}: {len(text)} characters but {len(syllables)} syllables"
        )
    words = segment_words(text, seg)
    word_nodes = []
    i = 0
    for w in words:
        word_nodes.append(SegmentationNode.parent(Level.WORD, w, syllables[i : i + len(w)]))
        i += len(w)
    return SegmentationNode.parent(Level.TEXT, text, word_nodes)


@dataclass(frozen=True, slots=True)
class ConfirmedSpan:
    """One confirmation with the keydowns that composed it (first letter through confirmation key)."""

    event: DualTraceEvent
    letters: tuple[KeyEvent, ...]
    first_id: int

    @property
    def ids(self) -> range:
        return range(self.first_id, self.event.id + 1)


def locate_confirmations(events: Sequence[DualTraceEvent]) -> list[ConfirmedSpan]:
    """Find the surviving letters of every confirmation by replaying the composition.

    Letters push onto a stack, BACKSPACE pops, and a confirmation consumes
    the stack. Any other coherent or resolved keystroke closes the
    composition.
    """
    spans: list[ConfirmedSpan] = []
    stack: list[KeyEvent] = []
    first: int | None = None
    for e in events:
        ev = e.base
        if not ev.is_down:
            continue
        if e.ime is not None:
            wanted = e.ime.pinyin.replace(SEPARATOR, "")
            got = "".join(k.key for k in stack)
            if not got.endswith(wanted) or not wanted:
                raise PropagationError(
                    f"confirmation {ev.id}: pinyin {e.ime.pinyin!r} but composed letters are {got!r}"
                )
            letters = tuple(stack[len(stack) - len(wanted) :])
            spans.append(ConfirmedSpan(e, letters, letters[0].id if first is None else first))
            stack, first = [], None
        elif is_letter_key(ev.key):
            stack.append(ev)
            if first is None:
                first = ev.id
        elif ev.key == BACKSPACE and stack:
            stack.pop()
        elif e.status is not Status.UNRESOLVED:
            stack, first = [], None
    return spans


# --------------------------------------------------------------------------
# interval computation


def _interval_pairs(children: Sequence[SegmentationNode], category: Category, gap: bool) -> list[IkiSample]:
    ordered = sorted(children, key=lambda n: n.start_t)
    out = []
    for prev, cur in zip(ordered, ordered[1:]):
        value = cur.start_t - (prev.end_t if gap else prev.start_t)
        out.append(IkiSample(category, value, _last_id(prev), _first_id(cur)))
    return out


def _first_id(node: SegmentationNode) -> int:
    return min(leaf.key_id for leaf in node.leaves())  # type: ignore[type-var]


def _last_id(node: SegmentationNode) -> int:
    return max(leaf.key_id for leaf in node.leaves())  # type: ignore[type-var]


def compute_ikis(
    spans: Sequence[ConfirmedSpan],
    trees: Sequence[SegmentationNode],
    events: Sequence[DualTraceEvent],
    excluded_ids: Iterable[int] = (),
) -> dict[Category, list[IkiSample]]:
    """All pinyin-typing interval samples, by category.

    Tree intervals cover letters inside each confirmation: letter to letter
    inside a syllable, syllable to syllable inside a word, and word to word
    across the whole ordered word list. Every other adjacent keydown pair is
    assigned once: before a confirmation key, after one, or to the letter
    level. Pairs touching ``excluded_ids`` are skipped.
    """
    out: dict[Category, list[IkiSample]] = {c: [] for c in Category if c not in (Category.WITHIN_WORD, Category.BETWEEN_WORD)}
    words: list[SegmentationNode] = []
    for tree in trees:
        for word in tree.children:
            words.append(word)
            for syl in word.children:
                out[Category.LATIN_LETTER] += _interval_pairs(syl.children, Category.LATIN_LETTER, gap=False)
            out[Category.PINYIN_SYLLABLE] += _interval_pairs(word.children, Category.PINYIN_SYLLABLE, gap=True)
    out[Category.WORD] += _interval_pairs(words, Category.WORD, gap=True)

    excluded = set(excluded_ids)
    downs = [e.base for e in events if e.base.is_down]
    ups = {e.base.id: e.base.t for e in events if not e.base.is_down}
    conf_ids = {s.event.id for s in spans}
    owner = {i: s.event.id for s in spans for i in s.ids}

    for a, b in zip(downs, downs[1:]):
        if a.id in excluded or b.id in excluded:
            continue
        if b.id in conf_ids:
            out[Category.IME_BEFORE].append(IkiSample(Category.IME_BEFORE, b.t - a.t, a.id, b.id))
            if a.id in ups:
                out[Category.IME_BEFORE_FLIGHT].append(IkiSample(Category.IME_BEFORE_FLIGHT, b.t - ups[a.id], a.id, b.id))
        elif a.id in conf_ids:
            out[Category.IME_AFTER].append(IkiSample(Category.IME_AFTER, b.t - a.t, a.id, b.id))
            if a.id in ups:
                out[Category.IME_AFTER_FLIGHT].append(IkiSample(Category.IME_AFTER_FLIGHT, b.t - ups[a.id], a.id, b.id))
        elif a.id in owner and owner.get(b.id) == owner[a.id]:
            continue  # covered by the tree
        else:
            out[Category.LATIN_LETTER].append(IkiSample(Category.LATIN_LETTER, b.t - a.t, a.id, b.id))

    prev: ConfirmedSpan | None = None
    for span, tree in zip(spans, trees):
        conf = span.event
        out[Category.IME_AFTER_FORMULA].append(
            IkiSample(Category.IME_AFTER_FORMULA, conf.t - tree.start_t, span.first_id, conf.id)
        )
        if prev is not None:
            first_word = min(tree.children, key=lambda n: n.start_t)
            out[Category.IME_BEFORE_FORMULA].append(
                IkiSample(Category.IME_BEFORE_FORMULA, first_word.start_t - prev.event.t, prev.event.id, _first_id(first_word))
            )
        prev = span

    for samples in out.values():
        samples.sort(key=lambda s: (s.second_id, s.first_id))
    return out


def classify_alphabetic(keys: Sequence[KeyEvent], text: str | None = None) -> dict[Category, list[IkiSample]]:
    """Split press latencies of Latin typing into within-word and between-word intervals.

    Space keys are not interval anchors; an interval is between words when a
    space key was pressed between its two keys or, given the typed ``text``,
    whitespace separates their positions. Multi-letter key labels count as a
    single event.
    """
    downs = [k for k in keys if k.is_down]
    out: dict[Category, list[IkiSample]] = {Category.WITHIN_WORD: [], Category.BETWEEN_WORD: []}
    prev: KeyEvent | None = None
    spaced = False
    for ev in downs:
        typed = typed_text(ev.key)
        if ev.key == SPACEBAR or (typed is not None and typed.isspace()):
            spaced = True
            continue
        if prev is not None:
            between = spaced
            if not between and text is not None:
                start = prev.position + len(typed_text(prev.key) or "")
                between = any(c.isspace() for c in text[start : ev.position])
            cat = Category.BETWEEN_WORD if between else Category.WITHIN_WORD
            out[cat].append(IkiSample(cat, ev.t - prev.t, prev.id, ev.id))
        prev, spaced = ev, False
    return out


# --------------------------------------------------------------------------
# timing decomposition and statistics


@dataclass
class TimingDecomposition:
    dwell: list[int] = field(default_factory=list)
    positive_iki: list[int] = field(default_factory=list)
    rollover: list[int] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def decompose_timing(keys: Sequence[KeyEvent]) -> TimingDecomposition:
    """Dwell per paired key; flight gap (next press minus previous release) per adjacent pair.

    A gap of zero counts as a positive interval. A keydown without a keyup
    has no dwell and breaks the two gaps around it.
    """
    downs = [k for k in keys if k.is_down]
    ups = {k.id: k for k in keys if not k.is_down}
    out = TimingDecomposition()
    for ev in downs:
        up = ups.get(ev.id)
        if up is None:
            out.diagnostics.append(f"keydown {ev.id} ({ev.key}) has no keyup; dwell omitted")
        else:
            out.dwell.append(up.t - ev.t)
    for a, b in zip(downs, downs[1:]):
        up = ups.get(a.id)
        if up is None:
            continue
        gap = b.t - up.t
        (out.positive_iki if gap >= 0 else out.rollover).append(gap)
    return out


def _mean_sd(values: Sequence[float], ddof: int) -> tuple[float, float]:
    mu = statistics.fmean(values)
    if len(values) <= ddof:
        return mu, 0.0
    return mu, math.sqrt(sum((x - mu) ** 2 for x in values) / (len(values) - ddof))


def filter_outliers(samples: Sequence[float], k: float = 2.0, *, ddof: int = 0) -> tuple[list[float], list[float]]:
    """Drop values farther than ``k`` standard deviations from the mean, in one pass.

    Mean and deviation come from the full input; the kept values are not
    re-examined.
    """
    if k <= 0:
        raise ValueError("outlier multiplier must be positive")
    values = list(samples)
    if len(values) < 2:
        return values, []
    mu, sd = _mean_sd(values, ddof)
    limit = k * sd
    kept = [x for x in values if abs(x - mu) <= limit]
    removed = [x for x in values if abs(x - mu) > limit]
    return kept, removed


@dataclass(frozen=True, slots=True)
class SummaryStats:
    count: int
    mean: float | None
    median: float | None
    sd: float | None
    outlier_count: int
    outlier_pct: float | None
    filtered_count: int
    filtered_mean: float | None
    filtered_median: float | None
    filtered_sd: float | None


def _basic(values: Sequence[float], ddof: int) -> tuple[float | None, float | None, float | None]:
    if not values:
        return None, None, None
    mu, sd = _mean_sd(values, ddof)
    return mu, float(statistics.median(values)), sd


def summarize(samples: Sequence[float], k: float = 2.0, *, ddof: int = 0) -> SummaryStats:
    """Count, mean, median and SD before and after the single-pass outlier filter.

    ``ddof=0`` gives the population deviation and ``ddof=1`` the sample
    deviation. Even-length medians average the two middle values.
    """
    values = list(samples)
    mean, median, sd = _basic(values, ddof)
    kept, removed = filter_outliers(values, k, ddof=ddof) if values else ([], [])
    fmean, fmedian, fsd = _basic(kept, ddof)
    return SummaryStats(
        count=len(values),
        mean=mean,
        median=median,
        sd=sd,
        outlier_count=len(removed),
        outlier_pct=100.0 * len(removed) / len(values) if values else None,
        filtered_count=len(kept),
        filtered_mean=fmean,
        filtered_median=fmedian,
        filtered_sd=fsd,
    )


# --------------------------------------------------------------------------
# whole-trace analysis


@dataclass
class MetricsReport:
    samples: dict[str, list[IkiSample]]
    stats: dict[str, SummaryStats]
    timing: TimingDecomposition
    timing_stats: dict[str, SummaryStats]
    trees: list[SegmentationNode]
    diagnostics: dict

    def counts(self) -> dict[str, int]:
        return {name: len(s) for name, s in self.samples.items()}


def analyze(
    events: Sequence[DualTraceEvent],
    seg: Segmenter,
    *,
    k: float = 2.0,
    ddof: int = 0,
) -> MetricsReport:
    """Trees and metrics for a dual trace.

    Confirmations whose composition contains an unresolved keystroke are
    left out of every category and reported in the diagnostics.
    """
    unresolved = {e.id for e in events if e.base.is_down and e.status is Status.UNRESOLVED}
    spans = locate_confirmations(events)
    kept_spans: list[ConfirmedSpan] = []
    trees: list[SegmentationNode] = []
    excluded = set(unresolved)
    dropped: list[int] = []
    for span in spans:
        if any(i in unresolved for i in span.ids):
            dropped.append(span.event.id)
            excluded.update(span.ids)
            continue
        kept_spans.append(span)
        trees.append(build_tree(span.event, span.letters, seg))

    by_cat = compute_ikis(kept_spans, trees, events, excluded)
    samples = {c.value: v for c, v in by_cat.items()}
    stats = {name: summarize([s.value for s in v], k, ddof=ddof) for name, v in samples.items()}

    keys = [e.base for e in events]
    timing = decompose_timing(keys)
    timing_stats = {
        "dwell": summarize(timing.dwell, k, ddof=ddof),
        "positive_iki": summarize(timing.positive_iki, k, ddof=ddof),
        "rollover": summarize(timing.rollover, k, ddof=ddof),
    }
    diagnostics = {
        "keydowns": sum(1 for e in events if e.base.is_down),
        "confirmations": len(spans),
        "confirmations_analyzed": len(kept_spans),
        "confirmations_excluded": dropped,
        "unresolved_events": sorted(unresolved),
        "resolved_by_rule": _rule_counts(events),
        "timing": list(timing.diagnostics),
    }
    return MetricsReport(samples, stats, timing, timing_stats, trees, diagnostics)


def _rule_counts(events: Sequence[DualTraceEvent]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for e in events:
        if e.status is Status.RESOLVED and e.rule:
            counts[e.rule] = counts.get(e.rule, 0) + 1
    return dict(sorted(counts.items()))
