"""Pinyin-to-candidate lexicon shared by the IME simulator and the word segmenter.

File format, one entry per line::

    # comment
    qian'li   千里
    zhi       之 知 只

The first column is pinyin (separators optional and ignored), the rest are
candidates in IME order. Every candidate is also a dictionary word for
segmentation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError
from .pinyin import syllabify
from .trace_model import SEPARATOR

LEXICON_ENV = "DUALTRACE_LEXICON"


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def words(self) -> frozenset[str]:
        return frozenset(w for cands in self.entries.values() for w in cands)

    def candidates(self, buffer: str) -> list[str]:
        """Candidate list the IME would show for a separator-free ``buffer``.

        Whole-buffer entries come first; otherwise (and additionally) the
        buffer is covered left to right by the longest run of syllables that
        has an entry, concatenating each run's first candidate.
        """
        buffer = buffer.replace(SEPARATOR, "")
        if not buffer:
            return []
        out = list(self.entries.get(buffer, ()))
        sylls = syllabify(buffer)
        pieces: list[str] = []
        i = 0
        while i < len(sylls):
            for j in range(len(sylls), i, -1):
                key = "".join(sylls[i:j])
                if key in self.entries:
                    pieces.append(self.entries[key][0])
                    i = j
                    break
            else:
                pieces = []
                break
        composed = "".join(pieces)
        if composed and composed not in out:
            out.append(composed)
        return out

    @classmethod
    def parse(cls, text: str, *, source: str | None = None) -> "Lexicon":
        entries: dict[str, tuple[str, ...]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError("lexicon entry needs pinyin and at least one candidate", line=lineno, source=source)
            key = parts[0].replace(SEPARATOR, "").lower()
            if not key.isalpha() or not key.isascii():
                raise ParseError(f"pinyin {parts[0]!r} must be Latin letters", line=lineno, source=source)
            merged = list(entries.get(key, ()))
            merged.extend(c for c in parts[1:] if c not in merged)
            entries[key] = tuple(merged)
        return cls(entries)


def load_lexicon(path: str | os.PathLike | None = None) -> Lexicon:
    """Load a lexicon from ``path``, ``$DUALTRACE_LEXICON`` or the bundled default."""
    if path is None:
        path = os.environ.get(LEXICON_ENV) or None
    if path is None:
        text = resources.files("dualtrace.data").joinpath("lexicon.txt").read_text(encoding="utf-8")
        return Lexicon.parse(text, source="<bundled lexicon.txt>")
    p = Path(path)
    return Lexicon.parse(p.read_text(encoding="utf-8"), source=str(p))
