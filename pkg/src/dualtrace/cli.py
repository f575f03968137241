"""Command-line front end: simulate, hybridize, analyze, report.

Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
4 integrity or reconstruction failure, 5 hybridization conflict,
6 analysis failure, 7 invalid simulator script.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import fixtures
from .analyzer import MetricsReport, analyze
from .errors import DualTraceError, ParseError
from .hybridizer import HybridizationResult, hybridize
from .lexicon import LEXICON_ENV, Lexicon, load_lexicon
from .report import diagnostics_text, render_metrics
from .segmentation import SEGMENTERS, make_segmenter
from .simulator import parse_script, run_session
from .trace_model import (
    parse_keystroke_log,
    parse_text_log,
    read_dual_trace,
    write_dual_trace,
    write_keystroke_log,
    write_text_log,
)

log = logging.getLogger("dualtrace")

EXIT_USAGE = 2


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)
    log.info("wrote %s", path)


def _json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _lexicon(args) -> Lexicon:
    try:
        return load_lexicon(args.lexicon)
    except OSError as exc:
        raise ParseError(f"cannot read lexicon {args.lexicon}: {exc.strerror}") from None


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    script_path = Path(args.script)
    if script_path.exists():
        config, actions = parse_script(_read(script_path).decode("utf-8"), source=str(script_path))
    elif args.script in fixtures.SCRIPT_NAMES:
        config, actions = fixtures.load_script(args.script)
    else:
        raise ParseError(f"cannot read {script_path}: no such file or bundled script")
    session = run_session(actions, _lexicon(args), config)
    out = Path(args.out)
    _write(out / "keys.jsonl", write_keystroke_log(session.keys))
    _write(out / "text.jsonl", write_text_log(session.snapshots))
    _write(out / "truth.json", _json(session.truth.to_json()))
    for w in session.truth.warnings:
        log.warning(w)
    return 0


def _hybridize(args) -> HybridizationResult:
    keys_path, text_path = Path(args.in_keys), Path(args.in_text)
    keys = parse_keystroke_log(_read(keys_path), source=str(keys_path))
    snaps = parse_text_log(_read(text_path), source=str(text_path))
    try:
        return hybridize(keys, snaps, strict=True)
    except DualTraceError as exc:
        exc.args = (f"{keys_path} + {text_path}: {exc}",)
        raise


def cmd_hybridize(args) -> int:
    result = _hybridize(args)
    out = Path(args.out)
    _write(out / "dual.jsonl", write_dual_trace(result.events))
    _write(out / "diagnostics.json", _json(result.diagnostics()))
    return 0


def _analyze(events, args) -> MetricsReport:
    lex = _lexicon(args)
    return analyze(events, make_segmenter(args.segmenter, lex), k=args.outlier_sd, ddof=args.ddof)


def _emit(args, text: str) -> None:
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    path = Path(args.in_dual)
    events = read_dual_trace(_read(path), source=str(path))
    report = _analyze(events, args)
    _emit(args, render_metrics(report, args.format))
    return 0


def cmd_report(args) -> int:
    result = _hybridize(args)
    report = _analyze(result.events, args)
    if args.format == "csv":
        _emit(args, render_metrics(report, "csv"))
        return 0
    parts = [
        "alignment",
        "---------",
        diagnostics_text(result.diagnostics()),
        "",
        "metrics",
        "-------",
        render_metrics(report, "table"),
    ]
    _emit(args, "\n".join(parts))
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualtrace", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr (repeat for debug)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, analysis: bool) -> None:
        sp.add_argument("--lexicon", help=f"pinyin lexicon file (default: ${LEXICON_ENV} or the bundled one)")
        if analysis:
            sp.add_argument("--outlier-sd", type=_positive, default=2.0, metavar="K", help="outlier cut-off in SDs (default 2)")
            sp.add_argument("--segmenter", choices=sorted(SEGMENTERS), default="fmm")
            sp.add_argument("--format", choices=("table", "csv"), default="table")
            sp.add_argument("--ddof", type=int, choices=(0, 1), default=0, help="0 population SD (default), 1 sample SD")

    s = sub.add_parser("simulate", help="replay a script into a keystroke log and a text log")
    s.add_argument("script", help="script file, or a bundled name: " + ", ".join(fixtures.SCRIPT_NAMES))
    s.add_argument("--out", required=True, help="output directory")
    common(s, analysis=False)
    s.set_defaults(func=cmd_simulate)

    h = sub.add_parser("hybridize", help="merge the two logs into a dual trace")
    h.add_argument("--in-keys", required=True)
    h.add_argument("--in-text", required=True)
    h.add_argument("--out", required=True, help="output directory")
    h.set_defaults(func=cmd_hybridize)

    a = sub.add_parser("analyze", help="interval metrics for a dual trace")
    a.add_argument("--in-dual", required=True)
    a.add_argument("--out", help="report file (default stdout)")
    common(a, analysis=True)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="hybridize and analyze in one step")
    r.add_argument("--in-keys", required=True)
    r.add_argument("--in-text", required=True)
    r.add_argument("--out", help="report file (default stdout)")
    common(r, analysis=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except DualTraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
