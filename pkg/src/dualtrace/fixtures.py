"""Bundled example sessions.

``FIGURE1_*`` is a recorded English sentence given as key chunks with the
press latency before each chunk; fast letter pairs that the recorder merged
("nd", "le", ...) stay merged as one key event. The ``*.script`` files are
simulator scripts, loadable by name.
"""

from __future__ import annotations

from importlib import resources

from .simulator import EditorAction, SessionConfig, parse_script
from .trace_model import KeyEvent, KeyKind

FIGURE1_TEXT = "A journey of a thousand miles begins with a single step"

# (chunk, press latency from the previous chunk in ms)
FIGURE1_CHUNKS: tuple[tuple[str, int], ...] = (
    ("A", 0),
    ("j", 1206), ("o", 368), ("u", 278), ("r", 284), ("n", 301), ("e", 243), ("y", 234),
    ("o", 421), ("f", 291),
    ("a", 505),
    ("t", 562), ("h", 310), ("o", 251), ("u", 236), ("s", 278), ("a", 266), ("nd", 350),
    ("m", 465), ("i", 208), ("le", 201), ("s", 231),
    ("be", 420), ("gins", 224),
    ("wi", 448), ("t", 265), ("h", 219),
    ("a", 409),
    ("s", 422), ("i", 238), ("n", 210), ("g", 287), ("l", 257), ("e", 211),
    ("s", 704), ("t", 231), ("e", 228), ("p", 204),
)


def figure1_keys(t0: int = 0, first_id: int = 1) -> list[KeyEvent]:
    """Keydowns for the English sentence, positioned in :data:`FIGURE1_TEXT`."""
    events: list[KeyEvent] = []
    t = t0
    pos = 0
    for i, (chunk, latency) in enumerate(FIGURE1_CHUNKS):
        t += latency
        pos = FIGURE1_TEXT.index(chunk, pos)
        events.append(KeyEvent(first_id + i, KeyKind.DOWN, chunk, pos, t))
        pos += len(chunk)
    return events


SCRIPT_NAMES = ("six_pass", "dianretan", "laozi", "zhechanpin")


def script_text(name: str) -> str:
    if name not in SCRIPT_NAMES:
        raise KeyError(f"no bundled script {name!r}")
    return resources.files("dualtrace.data").joinpath("scripts", f"{name}.script").read_text(encoding="utf-8")


def load_script(name: str) -> tuple[SessionConfig, list[EditorAction]]:
    return parse_script(script_text(name), source=f"{name}.script")
