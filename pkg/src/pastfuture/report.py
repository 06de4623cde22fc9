"""CSV/JSON writers and SVG histograms for quartile reports."""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .stats import CorrelationRecord, QuartileReport

logger = logging.getLogger(__name__)

NA = "NA"
CORRELATION_COLUMNS = ["author_id", "pair", "n_points", "r", "p", "class"]

_GRAY = "#9e9e9e"
_YELLOW = "#f2c12e"
_BLUE = "#2f6db5"
_RED = "#d62728"


def fmt_float(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NA
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def parse_float(text: str) -> float | None:
    return None if text == NA else float(text)


def fmt_q(q: float | None) -> str | float | None:
    if q is None:
        return None
    return "inf" if math.isinf(q) else q


def pair_slug(pair: str) -> str:
    return pair.replace("->", "_to_")


def write_correlations(records: Iterable[CorrelationRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CORRELATION_COLUMNS)
        for rec in records:
            writer.writerow([rec.author, rec.pair, rec.n_points, fmt_float(rec.r),
                             fmt_float(rec.p), rec.cls])


def read_correlations(path: str | Path) -> list[CorrelationRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            CorrelationRecord(row["author_id"], row["pair"], int(row["n_points"]),
                              parse_float(row["r"]), parse_float(row["p"]), row["class"])
            for row in csv.DictReader(fh)
        ]


def write_null_histograms(hists: Mapping[tuple[str, str], np.ndarray], n_surr: int,
                          path: str | Path) -> None:
    """Per-author surrogate histograms stored as integer counts out of ``n_surr``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        bins = len(next(iter(hists.values()))) if hists else 0
        writer.writerow(["author_id", "pair", "n_surrogates", *(f"bin_{i}" for i in range(bins))])
        for (author, pair), h in hists.items():
            counts = np.rint(np.asarray(h) * n_surr).astype(np.int64)
            writer.writerow([author, pair, n_surr, *counts.tolist()])


def read_null_histograms(path: str | Path) -> dict[tuple[str, str], np.ndarray]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            n = int(row[2])
            out[(row[0], row[1])] = np.array([int(v) for v in row[3:]], dtype=float) / n
    return out


def write_authors(classes, path: str | Path, corpus=None) -> None:
    """One row per author: paper count and productivity class."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["author_id", "n_papers", "quartile"])
        rows = []
        for cls in classes:
            for author in cls.authors:
                n = len(corpus.papers_of(author)) if corpus is not None else ""
                rows.append((author, n, cls.label))
        for row in sorted(rows):
            writer.writerow(row)


def read_authors(path: str | Path) -> dict[str, tuple[int, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["author_id"]: (int(row["n_papers"]), row["quartile"])
                for row in csv.DictReader(fh)}


def report_to_dict(report: QuartileReport) -> dict:
    return {
        "pair": report.pair,
        "quartile": report.label,
        "n_authors": report.n_authors,
        "n_defined": report.n_defined,
        "min_papers": report.min_papers,
        "max_papers": report.max_papers,
        "bin_edges": report.edges.tolist(),
        "counts": report.counts.tolist(),
        "counts_positive": report.counts_positive.tolist(),
        "counts_negative": report.counts_negative.tolist(),
        "null_average": report.null_counts.tolist(),
        "f_plus": report.f_plus,
        "f_minus": report.f_minus,
        "q": fmt_q(report.q),
    }


def write_reports_jsonl(reports: Iterable[QuartileReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(json.dumps(report_to_dict(rep), sort_keys=True))
            fh.write("\n")


def write_quartile_csv(report: QuartileReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count", "positive_significant",
                         "negative_significant", "null_average"])
        null = report.null_counts
        for i in range(len(report.counts)):
            writer.writerow([repr(float(report.edges[i])), repr(float(report.edges[i + 1])),
                             int(report.counts[i]), int(report.counts_positive[i]),
                             int(report.counts_negative[i]), repr(float(null[i]))])


def write_summary(reports: Sequence[QuartileReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair", "quartile", "min_papers", "max_papers", "n_authors",
                         "n_defined", "f_plus", "f_minus", "q"])
        for rep in reports:
            writer.writerow([rep.pair, rep.label, rep.min_papers, rep.max_papers, rep.n_authors,
                             rep.n_defined, repr(rep.f_plus), repr(rep.f_minus), fmt_float(rep.q)])


def _q_text(q: float | None) -> str:
    if q is None:
        return "undefined"
    return "inf" if math.isinf(q) else f"{q:.2f}"


def render_histogram(report: QuartileReport, out: str | Path,
                     title: str | None = None) -> Path | None:
    """Stacked histogram of author correlations with the null-model average.

    Significant positive bars are yellow, significant negative blue, the rest
    gray; the red line is the average surrogate distribution scaled to the
    number of authors. Returns None (and writes nothing) for an empty report.
    """
    if report.empty:
        logger.warning("skipping empty report %s (%s)", report.pair, report.label)
        return None
    w, h = 520, 360
    left, right, top, bottom = 56, 16, 56, 44
    pw, ph = w - left - right, h - top - bottom
    nbins = len(report.counts)
    null = report.null_counts
    ymax = max(float(report.counts.max()), float(null.max()), 1.0) * 1.1
    bw = pw / nbins

    def sx(v: float) -> float:
        return left + (v + 1.0) / 2.0 * pw

    def sy(v: float) -> float:
        return top + ph - v / ymax * ph

    title = title or f"{report.pair} | class ({report.label})"
    if report.min_papers is not None:
        title += f" | {report.min_papers}-{report.max_papers} papers"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{w / 2:.1f}" y="36" text-anchor="middle">'
        f'{escape(f"f+ = {report.f_plus:.3f}   f- = {report.f_minus:.3f}   q = {_q_text(report.q)}")}'
        f'</text>',
    ]
    for i in range(nbins):
        x = left + i * bw
        y0 = 0.0
        for count, color in ((report.counts_negative[i], _BLUE),
                             (report.counts_positive[i], _YELLOW),
                             (report.counts[i] - report.counts_negative[i]
                              - report.counts_positive[i], _GRAY)):
            if count <= 0:
                continue
            ya, yb = sy(y0 + count), sy(y0)
            parts.append(f'<rect x="{x:.2f}" y="{ya:.2f}" width="{bw:.2f}" '
                         f'height="{yb - ya:.2f}" fill="{color}" stroke="white" stroke-width="0.5"/>')
            y0 += count
    centers = (report.edges[:-1] + report.edges[1:]) / 2
    pts = " ".join(f"{sx(c):.2f},{sy(v):.2f}" for c, v in zip(centers, null))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="{_RED}" stroke-width="1.5"/>')
    parts.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for tick in (-1.0, -0.5, 0.0, 0.5, 1.0):
        parts.append(f'<text x="{sx(tick):.2f}" y="{top + ph + 14}" text-anchor="middle">{tick:g}</text>')
    for frac in (0.0, 0.5, 1.0):
        v = ymax / 1.1 * frac
        parts.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.0f}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{h - 8}" text-anchor="middle">'
                 f'Pearson correlation</text>')
    parts.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + ph / 2:.1f})">authors</text>')
    parts.append("</svg>")
    out = Path(out)
    out.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return out
