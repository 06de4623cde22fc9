"""Synthetic corpora with planted communities and planted past->future coupling.

Layout of a generated corpus:

* Primary authors ``aNNNNN`` publish ``1 + Poisson(rate)`` single-author papers
  every year; rates have a long right tail so productivity classes differ.
* Each primary paper references library papers. A library paper lists codes
  from a single community block, and the number of blocks a paper draws
  references from varies by author-year, which drives reference diversity.
* Every citation arrives exactly one year after the cited paper. So the
  future window at pivot ``t`` sees only citations made in year ``t`` to
  papers from ``t - 1``, and those are independent across pivots.
* All citations an author receives in one year come from citing papers that
  share one code profile. Citation diversity is therefore set directly by
  the profile and does not depend on how many citations there are.

Under the ``independent`` model, citations per paper and citing profiles are
drawn i.i.d. per year. Under ``planted`` they are driven by the author's
standardized past paper count and past reference diversity, with weight ``rho``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .diversity import entropy_exponential
from .ingest import Corpus, PaperRecord, write_corpus

MODELS = ("independent", "planted")


@dataclass(frozen=True)
class SynthConfig:
    n_authors: int = 1000
    first_year: int = 1991
    n_years: int = 20
    n_communities: int = 6
    codes_per_community: int = 6
    productivity_base: float = 0.5
    productivity_scale: float = 0.5
    productivity_shape: float = 2.0
    max_rate: float = 8.0
    refs_per_paper: int = 4
    citations_per_paper: float = 1.0
    citation_spread: float = 0.35
    model: str = "independent"
    rho: float = 0.0
    max_profile_communities: int = 3
    past_len: int = 5
    pivot_first: int = 1995
    pivot_last: int = 2010
    library_pool: int = 20
    max_citer_refs: int = 200
    seed: int = 0

    @property
    def last_year(self) -> int:
        return self.first_year + self.n_years - 1

    def validate(self) -> None:
        counts = ("n_authors", "n_years", "n_communities", "codes_per_community",
                  "refs_per_paper", "max_profile_communities", "past_len",
                  "library_pool", "max_citer_refs")
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if self.n_communities > 99 or self.codes_per_community > 99:
            raise ValueError("at most 99 communities and 99 codes per community")
        if self.codes_per_community < 2:
            raise ValueError("each community needs at least 2 codes to co-occur")
        if self.max_profile_communities > self.n_communities:
            raise ValueError("max_profile_communities exceeds n_communities")
        if self.library_pool < self.refs_per_paper:
            raise ValueError("library_pool must be >= refs_per_paper")
        if self.pivot_first > self.pivot_last:
            raise ValueError("empty pivot range")
        if self.citations_per_paper < 0 or self.citation_spread < 0:
            raise ValueError("citation parameters must be non-negative")


def community_code(community: int, index: int) -> str:
    """Truncated (two-level) code of the ``index``-th code of a block."""
    return f"{community + 1:02d}.{index + 1:02d}"


def raw_code(community: int, index: int) -> str:
    return f"{community_code(community, index)}.{chr(65 + index % 26)}{chr(97 + community % 26)}"


def profile_catalog(max_parts: int, max_codes: int) -> list[tuple[int, ...]]:
    """Distinct code-count compositions, sorted by the diversity they produce."""
    seen: dict[tuple[float, ...], tuple[int, ...]] = {}
    sizes = range(1, min(2, max_codes) + 1)
    for n_parts in range(1, max_parts + 1):
        for comp in itertools.combinations_with_replacement(sorted(sizes, reverse=True), n_parts):
            key = tuple(round(c / sum(comp), 12) for c in comp)
            if key not in seen or sum(comp) < sum(seen[key]):
                seen[key] = comp
    comps = list(seen.values())
    comps.sort(key=lambda c: (profile_diversity(c), c))
    return comps


def profile_diversity(comp: tuple[int, ...]) -> float:
    total = sum(comp)
    return entropy_exponential(c / total for c in comp)[0]


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _zscores(values: np.ndarray, ref_mask: np.ndarray) -> np.ndarray:
    ref = values[ref_mask]
    sd = ref.std()
    if sd == 0 or not np.isfinite(sd):
        return np.zeros_like(values)
    return (values - ref.mean()) / sd


class _CiterPools:
    """Citing papers grouped by (year, profile); each cites a paper at most once."""

    def __init__(self, cap: int):
        self.cap = cap
        self.pools: dict[tuple, list[tuple[str, set[str]]]] = defaultdict(list)
        self.codes: dict[str, list[str]] = {}
        self.years: dict[str, int] = {}

    def cite(self, year: int, profile: tuple[tuple[int, int], ...], cited: str,
             rng: np.random.Generator, codes_per_community: int) -> None:
        pool = self.pools[(year, profile)]
        for _, refs in pool:
            if len(refs) < self.cap and cited not in refs:
                refs.add(cited)
                return
        cid = f"C{year}-{len(self.codes):07d}"
        codes = []
        for comm, count in profile:
            for idx in sorted(rng.choice(codes_per_community, size=count, replace=False)):
                codes.append(raw_code(comm, int(idx)))
        self.codes[cid] = codes
        self.years[cid] = year
        pool.append((cid, {cited}))

    def records(self) -> list[PaperRecord]:
        out = []
        for pool in self.pools.values():
            for cid, refs in pool:
                out.append(PaperRecord(cid, self.years[cid], (f"cit-{cid}",),
                                       frozenset(self.codes[cid]), frozenset(refs)))
        return out


def generate(config: SynthConfig) -> Corpus:
    config.validate()
    rng = np.random.default_rng(config.seed)
    K, P = config.n_communities, config.codes_per_community
    years = np.arange(config.first_year, config.last_year + 1)
    n_years = len(years)
    pivot_mask = (years >= config.pivot_first) & (years <= config.pivot_last)
    catalog = profile_catalog(config.max_profile_communities, P)
    records: list[PaperRecord] = []

    library: dict[tuple[int, int], list[str]] = {}
    for y in years:
        for c in range(K):
            ids = []
            for j in range(config.library_pool):
                pid = f"L{y}-{c:02d}-{j:03d}"
                picks = sorted(rng.choice(P, size=2, replace=False))
                records.append(PaperRecord(pid, int(y), (f"lib-{c:02d}-{j:03d}",),
                                           frozenset(raw_code(c, int(i)) for i in picks),
                                           frozenset()))
                ids.append(pid)
            library[(int(y), c)] = ids

    pools = _CiterPools(config.max_citer_refs)
    planted = config.model == "planted"
    rho = config.rho
    noise_w = math.sqrt(max(0.0, 1.0 - rho * rho))
    width = len(str(config.n_authors))

    for a in range(config.n_authors):
        author = f"a{a:0{width}d}"
        rate = min(config.max_rate, config.productivity_base
                   + config.productivity_scale * rng.pareto(config.productivity_shape))
        per_year = 1 + rng.poisson(rate, size=n_years)
        home = int(rng.integers(K))
        ref_counts = np.zeros((n_years, K))
        cohorts: list[list[str]] = []
        for yi, y in enumerate(years):
            breadth = int(rng.integers(1, min(K, config.refs_per_paper) + 1))
            ref_comms = rng.choice(K, size=breadth, replace=False)
            ids = []
            for j in range(per_year[yi]):
                pid = f"{author}-{y}-{j:02d}"
                n_codes = int(rng.integers(2, min(4, P) + 1))
                picks = sorted(rng.choice(P, size=n_codes, replace=False))
                refs = set()
                for r in range(config.refs_per_paper):
                    comm = int(ref_comms[r % breadth])
                    pool = library[(int(y), comm)]
                    choice = pool[int(rng.integers(len(pool)))]
                    while choice in refs:
                        choice = pool[int(rng.integers(len(pool)))]
                    refs.add(choice)
                    ref_counts[yi, comm] += 1
                records.append(PaperRecord(pid, int(y), (author,),
                                           frozenset(raw_code(home, int(i)) for i in picks),
                                           frozenset(refs)))
                ids.append(pid)
            cohorts.append(ids)

        # past-window aggregates as the analysis will see them at pivot year s
        past_n = np.zeros(n_years)
        past_refdiv = np.zeros(n_years)
        for si in range(n_years):
            lo = max(0, si - config.past_len)
            past_n[si] = per_year[lo:si].sum()
            window = ref_counts[lo:si].sum(axis=0)
            past_refdiv[si] = (entropy_exponential(window / window.sum())[0]
                               if window.sum() > 0 else 1.0)
        z_n = _zscores(past_n, pivot_mask)
        z_ref = _zscores(past_refdiv, pivot_mask)

        for si in range(1, n_years):
            eps_g, eps_p = rng.standard_normal(2)
            if planted:
                g_score = rho * z_n[si] + noise_w * eps_g
                p_score = rho * z_ref[si] + noise_w * eps_p
            else:
                g_score, p_score = eps_g, eps_p
            g = max(0.0, config.citations_per_paper + config.citation_spread * g_score)
            n_links = int(math.floor(g * past_n[si] + rng.random()))
            comp = catalog[min(len(catalog) - 1, int(_normal_cdf(p_score) * len(catalog)))]
            comms = sorted(int(c) for c in rng.choice(K, size=len(comp), replace=False))
            profile = tuple(zip(comms, comp))
            cohort = cohorts[si - 1]
            start = int(rng.integers(len(cohort)))
            for k in range(n_links):
                cited = cohort[(start + k) % len(cohort)]
                pools.cite(int(years[si]), profile, cited, rng, P)

    records.extend(pools.records())
    return Corpus(records)


def describe(config: SynthConfig) -> dict:
    """Ground-truth manifest for a generated corpus."""
    manifest = {
        "citation_model": "planted" if config.model == "planted" else "null",
        "rho": config.rho if config.model == "planted" else None,
        "sign": ("+" if config.rho >= 0 else "-") if config.model == "planted" else None,
        "planted_pairs": (["papers->cits_per_paper", "ref_div->cit_div"]
                          if config.model == "planted" else []),
        "seed": config.seed,
        "communities": {
            community_code(c, i): c
            for c in range(config.n_communities) for i in range(config.codes_per_community)
        },
        "config": asdict(config),
    }
    return manifest


def write_synthetic(config: SynthConfig, corpus_path: str | Path,
                    manifest_path: str | Path | None = None) -> Corpus:
    corpus = generate(config)
    write_corpus(corpus, corpus_path)
    if manifest_path is None:
        manifest_path = Path(str(corpus_path) + ".manifest.json")
    Path(manifest_path).write_text(json.dumps(describe(config), indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    return corpus
