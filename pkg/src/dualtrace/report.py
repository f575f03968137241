"""Plain-text and CSV rendering of metrics and diagnostics."""

from __future__ import annotations

import csv
import io
import json

from .analyzer import MARKERS, Category, MetricsReport, SummaryStats

COLUMNS = (
    "count",
    "mean",
    "median",
    "sd",
    "outlier_count",
    "outlier_pct",
    "filtered_count",
    "filtered_mean",
    "filtered_median",
    "filtered_sd",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def _rows(report: MetricsReport) -> list[tuple[str, str, SummaryStats]]:
    rows = [("iki", name, stats) for name, stats in report.stats.items()]
    rows += [("timing", name, stats) for name, stats in report.timing_stats.items()]
    return rows


def metrics_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("section", "metric", *COLUMNS))
    for section, name, st in _rows(report):
        w.writerow((section, name, *(_fmt(getattr(st, c)) for c in COLUMNS)))
    for key, value in report.diagnostics.items():
        w.writerow(("diagnostics", key, json.dumps(value, ensure_ascii=False, sort_keys=True)))
    return buf.getvalue()


def metrics_table(report: MetricsReport) -> str:
    head = ("metric", "n", "mean", "median", "sd", "outl", "n'", "mean'", "median'", "sd'")
    body = []
    for _, name, st in _rows(report):
        try:
            marker = MARKERS.get(Category(name), " ")
        except ValueError:
            marker = " "
        label = f"{marker} {name}"
        body.append(
            (
                label,
                _fmt(st.count),
                _fmt(st.mean),
                _fmt(st.median),
                _fmt(st.sd),
                _fmt(st.outlier_count),
                _fmt(st.filtered_count),
                _fmt(st.filtered_mean),
                _fmt(st.filtered_median),
                _fmt(st.filtered_sd),
            )
        )
    widths = [max(len(r[i]) for r in (head, *body)) for i in range(len(head))]
    lines = []
    for row in (head, *body):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    lines.append("")
    lines.append("primed columns exclude outliers; times in ms")
    lines.append("")
    lines.append(diagnostics_text(report.diagnostics))
    return "\n".join(lines) + "\n"


def diagnostics_text(diag: dict) -> str:
    out = []
    for key, value in diag.items():
        if isinstance(value, dict):
            shown = " ".join(f"{k}={v}" for k, v in value.items()) or "none"
        elif isinstance(value, list):
            shown = ", ".join(str(v) for v in value) or "none"
        else:
            shown = str(value)
        out.append(f"{key}: {shown}")
    return "\n".join(out)


def render_metrics(report: MetricsReport, fmt: str) -> str:
    if fmt == "csv":
        return metrics_csv(report)
    if fmt == "table":
        return metrics_table(report)
    raise ValueError(f"unknown format {fmt!r}")
