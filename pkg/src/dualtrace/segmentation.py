"""Pinyin syllable splitting and pluggable Chinese word segmenters."""

from __future__ import annotations

from typing import Callable, Iterable, Protocol

from .errors import SegmentationError
from .lexicon import Lexicon
from .trace_model import SEPARATOR


def split_syllables(pinyin: str) -> list[str]:
    """Split separator-delimited pinyin, e.g. ``zhe'chan'pin`` into three syllables."""
    if not pinyin:
        raise SegmentationError("empty pinyin string")
    parts = pinyin.split(SEPARATOR)
    if any(not p for p in parts):
        raise SegmentationError(f"misplaced syllable separator in {pinyin!r}")
    return parts


class Segmenter(Protocol):
    def segment(self, text: str) -> list[str]: ...


class ForwardMaxMatch:
    """Greedy longest-prefix segmentation against a word list.

    Characters that start no known word become single-character words.
    """

    def __init__(self, words: Iterable[str]):
        self.words = frozenset(w for w in words if w)
        self.max_len = max((len(w) for w in self.words), default=1)

    def segment(self, text: str) -> list[str]:
        out: list[str] = []
        i = 0
        while i < len(text):
            for n in range(min(self.max_len, len(text) - i), 0, -1):
                piece = text[i : i + n]
                if n == 1 or piece in self.words:
                    out.append(piece)
                    i += n
                    break
        return out


class CharSegmenter:
    """One word per character; a baseline that needs no dictionary."""

    def segment(self, text: str) -> list[str]:
        return list(text)


SEGMENTERS: dict[str, Callable[[Lexicon], Segmenter]] = {
    "fmm": lambda lex: ForwardMaxMatch(lex.words),
    "char": lambda lex: CharSegmenter(),
}


def make_segmenter(name: str, lexicon: Lexicon) -> Segmenter:
    try:
        factory = SEGMENTERS[name]
    except KeyError:
        raise SegmentationError(f"unknown segmenter {name!r}; choose from {', '.join(sorted(SEGMENTERS))}") from None
    return factory(lexicon)


def segment_words(text: str, seg: Segmenter) -> list[str]:
    """Run ``seg`` and enforce its contract: nonempty words that concatenate to ``text``."""
    if not text:
        raise SegmentationError("cannot segment empty text")
    words = list(seg.segment(text))
    if any(not w for w in words) or "".join(words) != text:
        raise SegmentationError(f"segmenter returned {words!r}, which does not rebuild {text!r}")
    return words
