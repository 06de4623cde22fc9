"""Pearson correlation with shuffle-surrogate significance testing."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

POSITIVE = "positive-significant"
NEGATIVE = "negative-significant"
NONSIGNIFICANT = "nonsignificant"
UNDEFINED = "undefined"

# |r*| within this distance of |r| counts as a tie (summation order differs)
TIE_TOL = 1e-12

DEFAULT_PAIRS: tuple[tuple[str, str], ...] = (
    ("past_papers", "future_cits_per_paper"),
    ("past_ref_div", "future_cits_per_paper"),
    ("past_papers", "future_cit_div"),
    ("past_ref_div", "future_cit_div"),
    ("past_cit_div", "future_cits_per_paper"),
    ("past_cits_per_paper", "future_cit_div"),
)


def pair_label(pair: tuple[str, str]) -> str:
    past, future = pair
    short = {"past_papers": "papers"}
    return f"{short.get(past, past.removeprefix('past_'))}->{future.removeprefix('future_')}"


def parse_pair(label: str) -> tuple[str, str]:
    for pair in DEFAULT_PAIRS:
        if pair_label(pair) == label:
            return pair
    past, _, future = label.partition("->")
    if not future:
        raise ValueError(f"bad metric pair {label!r}; expected 'past->future'")
    past = "past_papers" if past == "papers" else f"past_{past}"
    return past, f"future_{future}"


def paired(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Drop positions where either series is undefined (NaN)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"series lengths differ: {x.shape} vs {y.shape}")
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep]


def pearson(x: Sequence[float], y: Sequence[float], min_points: int = 5) -> float | None:
    """Sample Pearson coefficient, or None when too few points or a series is constant."""
    x, y = paired(x, y)
    if len(x) < max(min_points, 2) or np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    r = np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    return float(min(1.0, max(-1.0, r)))


def _as_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def surrogates(series: Sequence[float], n: int = 10_000,
               seed: int | np.random.Generator | None = None) -> np.ndarray:
    """``n`` copies of ``series`` with the defined entries randomly permuted.

    Undefined (NaN) entries keep their positions. Returns an ``(n, len)`` array.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.asarray(series, dtype=float)
    defined = ~np.isnan(s)
    values = s[defined]
    if len(values) < 2:
        raise ValueError("need at least 2 defined entries to shuffle")
    out = np.tile(s, (n, 1))
    out[:, defined] = _as_rng(seed).permuted(np.tile(values, (n, 1)), axis=1)
    return out


@dataclass
class PValueResult:
    r: float | None
    p: float | None
    n_points: int
    null: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def correlation_pvalue(x: Sequence[float], y: Sequence[float], n_surr: int = 10_000,
                       seed: int | np.random.Generator | None = None, min_points: int = 5,
                       shuffle: str = "both", ties: str = "ge") -> PValueResult:
    """Pearson r and its empirical two-sided p-value against shuffled surrogates.

    ``p = (1 + #{|r*| >= |r|}) / (n_surr + 1)``. With ``shuffle="both"`` each
    surrogate pairs independent shuffles of x and y; ``"one"`` shuffles y only.
    ``ties="gt"`` counts strictly larger surrogates instead.
    """
    if shuffle not in ("both", "one"):
        raise ValueError("shuffle must be 'both' or 'one'")
    if ties not in ("ge", "gt"):
        raise ValueError("ties must be 'ge' or 'gt'")
    xp, yp = paired(x, y)
    r = pearson(xp, yp, min_points)
    if r is None:
        return PValueResult(None, None, len(xp))
    rng = _as_rng(seed)
    # shuffling preserves mean and variance: permute centered values and
    # reuse the fixed denominator
    dx, dy = xp - xp.mean(), yp - yp.mean()
    xs = surrogates(dx, n_surr, rng) if shuffle == "both" else dx[np.newaxis, :]
    ys = surrogates(dy, n_surr, rng)
    den = math.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    null = np.clip((xs * ys).sum(axis=1) / den, -1.0, 1.0)
    if ties == "ge":
        hits = np.count_nonzero(np.abs(null) >= abs(r) - TIE_TOL)
    else:
        hits = np.count_nonzero(np.abs(null) > abs(r) + TIE_TOL)
    return PValueResult(r, (1 + int(hits)) / (n_surr + 1), len(xp), null)


def classify(r: float | None, p: float | None, alpha: float = 0.05) -> str:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if r is None or p is None:
        return UNDEFINED
    if p < alpha and r > 0:
        return POSITIVE
    if p < alpha and r < 0:
        return NEGATIVE
    return NONSIGNIFICANT


def q_index(f_plus: float, f_minus: float) -> float | None:
    """Ratio f+/f-; ``inf`` when only f- is zero, None when both are."""
    if f_minus == 0:
        return None if f_plus == 0 else math.inf
    return f_plus / f_minus


def _digest(text: str) -> list[int]:
    raw = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return [int.from_bytes(raw[:4], "little"), int.from_bytes(raw[4:], "little")]


def author_rng(master_seed: int, author: str, pair: str) -> np.random.Generator:
    """RNG stream fixed by (seed, author, pair), independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, *_digest(author), *_digest(pair)]))


@dataclass(frozen=True)
class CorrelationRecord:
    author: str
    pair: str
    n_points: int
    r: float | None
    p: float | None
    cls: str


def histogram_edges(bins: int = 40) -> np.ndarray:
    if bins < 2:
        raise ValueError("bins must be >= 2")
    return np.linspace(-1.0, 1.0, bins + 1)


def correlate_series(author: str, values: Mapping[str, np.ndarray],
                     pairs: Iterable[tuple[str, str]], n_surr: int, seed: int,
                     alpha: float = 0.05, bins: int = 40, min_points: int = 5,
                     shuffle: str = "both", ties: str = "ge",
                     ) -> list[tuple[CorrelationRecord, np.ndarray | None]]:
    """Correlate each (past, future) pair for one author.

    Returns records alongside the author's normalized null histogram (None
    when the correlation is undefined).
    """
    edges = histogram_edges(bins)
    out = []
    for pair in pairs:
        label = pair_label(pair)
        res = correlation_pvalue(values[pair[0]], values[pair[1]], n_surr,
                                 author_rng(seed, author, label), min_points, shuffle, ties)
        hist = None
        if res.r is not None:
            hist = np.histogram(res.null, edges)[0] / n_surr
        rec = CorrelationRecord(author, label, res.n_points, res.r, res.p,
                                classify(res.r, res.p, alpha))
        out.append((rec, hist))
    return out


@dataclass
class QuartileReport:
    pair: str
    label: str
    n_authors: int
    n_defined: int
    edges: np.ndarray
    counts: np.ndarray
    counts_positive: np.ndarray
    counts_negative: np.ndarray
    null_density: np.ndarray
    f_plus: float
    f_minus: float
    q: float | None
    min_papers: int | None = None
    max_papers: int | None = None

    @property
    def empty(self) -> bool:
        return self.n_defined == 0

    @property
    def null_counts(self) -> np.ndarray:
        """Null-model density scaled to the number of defined authors."""
        return self.null_density * self.n_defined


def aggregate_quartile(records: Iterable[CorrelationRecord], class_authors: Iterable[str],
                       bins: int = 40, null_hists: Mapping[str, np.ndarray] | None = None,
                       label: str = "", pair: str | None = None,
                       papers_range: tuple[int, int] | None = None) -> QuartileReport:
    members = set(class_authors)
    chosen = [rec for rec in records if rec.author in members]
    if pair is None:
        pairs = {rec.pair for rec in chosen}
        if len(pairs) > 1:
            raise ValueError(f"records mix metric pairs {sorted(pairs)}")
        pair = pairs.pop() if pairs else ""
    chosen = sorted((rec for rec in chosen if rec.pair == pair), key=lambda rec: rec.author)
    defined = [rec for rec in chosen if rec.cls != UNDEFINED]
    edges = histogram_edges(bins)

    def hist(rs: list[CorrelationRecord]) -> np.ndarray:
        return np.histogram([rec.r for rec in rs], edges)[0]

    n = len(defined)
    n_pos = sum(rec.cls == POSITIVE for rec in defined)
    n_neg = sum(rec.cls == NEGATIVE for rec in defined)
    f_plus = n_pos / n if n else 0.0
    f_minus = n_neg / n if n else 0.0

    null_density = np.zeros(bins)
    if null_hists and defined:
        stack = [null_hists[rec.author] for rec in defined if rec.author in null_hists]
        if stack:
            null_density = np.mean(stack, axis=0)

    lo, hi = papers_range if papers_range else (None, None)
    return QuartileReport(
        pair=pair, label=label, n_authors=len(members), n_defined=n, edges=edges,
        counts=hist(defined),
        counts_positive=hist([rec for rec in defined if rec.cls == POSITIVE]),
        counts_negative=hist([rec for rec in defined if rec.cls == NEGATIVE]),
        null_density=null_density, f_plus=f_plus, f_minus=f_minus,
        q=q_index(f_plus, f_minus) if n else None, min_papers=lo, max_papers=hi,
    )
