"""Keystroke-log and text-snapshot alignment with interval analysis for pinyin typing."""

from __future__ import annotations

from .analyzer import (
    Category,
    IkiSample,
    MetricsReport,
    SegmentationNode,
    SummaryStats,
    analyze,
    build_tree,
    classify_alphabetic,
    compute_ikis,
    decompose_timing,
    filter_outliers,
    propagate_timestamps,
    summarize,
)
from .errors import (
    AnalysisError,
    DualTraceError,
    HybridizationError,
    IntegrityError,
    ParseError,
    ReconstructionError,
    SchemaError,
    ScriptError,
)
from .hybridizer import CoherenceWindow, RuleMatch, TripleContext, check_coherence, find_solutions, hybridize, solve
from .lexicon import Lexicon, load_lexicon
from .segmentation import ForwardMaxMatch, segment_words, split_syllables
from .simulator import ImeConfirm, ImeState, MoveCursor, Pass, Select, SessionConfig, TypeKey, ime_feed, run_session
from .snapshot_logger import DswLogger, apply_delta, compute_offset, diff, dsw_step, reconstruct
from .trace_model import (
    DualTraceEvent,
    KeyEvent,
    TextSnapshot,
    parse_keystroke_log,
    parse_text_log,
    read_dual_trace,
    write_dual_trace,
)

__all__ = [
    "AnalysisError",
    "Category",
    "CoherenceWindow",
    "DswLogger",
    "DualTraceError",
    "DualTraceEvent",
    "ForwardMaxMatch",
    "HybridizationError",
    "IkiSample",
    "ImeConfirm",
    "ImeState",
    "IntegrityError",
    "KeyEvent",
    "Lexicon",
    "MetricsReport",
    "MoveCursor",
    "ParseError",
    "Pass",
    "ReconstructionError",
    "RuleMatch",
    "SchemaError",
    "ScriptError",
    "SegmentationNode",
    "Select",
    "SessionConfig",
    "SummaryStats",
    "TextSnapshot",
    "TripleContext",
    "TypeKey",
    "analyze",
    "apply_delta",
    "build_tree",
    "check_coherence",
    "classify_alphabetic",
    "compute_ikis",
    "compute_offset",
    "decompose_timing",
    "diff",
    "dsw_step",
    "filter_outliers",
    "find_solutions",
    "hybridize",
    "ime_feed",
    "load_lexicon",
    "parse_keystroke_log",
    "parse_text_log",
    "propagate_timestamps",
    "read_dual_trace",
    "reconstruct",
    "run_session",
    "segment_words",
    "solve",
    "split_syllables",
    "summarize",
    "write_dual_trace",
]
