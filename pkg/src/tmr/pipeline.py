"""Retrieval pipeline: domain selection, filtering, ranking and top-k selection."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .edit import LED, EditCosts, batch_similarity
from .index.inverted import InvertedIndex
from .index.suffix_array import SuffixArrayIndex
from .memory import TranslationMemory
from .text import Sentence


class ConfigError(ValueError):
    """Invalid retrieval configuration or unknown domain."""


class DomainPolicy(str, Enum):
    IN_DOMAIN = "in"
    ALL_DOMAINS = "all"
    OUT_OF_DOMAIN = "out"


@dataclass(frozen=True)
class NGMFilter:
    tau: float = 0.3
    min_length: int = 3

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.min_length < 1:
            raise ConfigError(f"min n-gram length must be >= 1, got {self.min_length}")

    def required_length(self, query_length: int) -> int:
        """Smallest n-gram length passing both the absolute and relative thresholds."""
        tau = Fraction(repr(self.tau)) if isinstance(self.tau, float) else Fraction(self.tau)
        return max(self.min_length, math.ceil(tau * query_length))


@dataclass(frozen=True)
class BM25Filter:
    limit: int = 100

    def __post_init__(self):
        if self.limit < 1:
            raise ConfigError(f"BM25 candidate cap must be >= 1, got {self.limit}")


@dataclass(frozen=True)
class EditRanker:
    costs: EditCosts = LED

    @property
    def name(self) -> str:
        return f"edit{self.costs}"


@dataclass(frozen=True)
class BM25Ranker:
    name = "bm25"


Filter = Union[NGMFilter, BM25Filter, None]
Ranker = Union[EditRanker, BM25Ranker]


@dataclass(frozen=True)
class RetrievalConfig:
    domain_policy: DomainPolicy = DomainPolicy.ALL_DOMAINS
    filter: Filter = None
    ranker: Ranker = field(default_factory=EditRanker)
    contrast: float | None = None
    k: int = 3
    exclude_self: bool = False

    def __post_init__(self):
        object.__setattr__(self, "domain_policy", DomainPolicy(self.domain_policy))
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.contrast is not None and self.contrast < 0:
            raise ConfigError(f"contrast factor must be >= 0, got {self.contrast}")

    @property
    def pool_size(self) -> int:
        return 2 * max(self.k, 20)


@dataclass(frozen=True)
class Candidate:
    uid: int
    base_score: float
    adjusted_score: float


@dataclass
class RetrievedSet:
    query: Sentence
    matches: list[Candidate]
    k: int

    @property
    def exhausted(self) -> bool:
        return len(self.matches) < self.k

    @property
    def uids(self) -> list[int]:
        return [c.uid for c in self.matches]


def select_domain(memory: TranslationMemory, policy: DomainPolicy | str, query_domain: str | None = None
                  ) -> np.ndarray:
    """Uids eligible under the domain policy."""
    mask = domain_mask(memory, policy, query_domain)
    return np.arange(len(memory)) if mask is None else np.flatnonzero(mask)


def domain_mask(memory: TranslationMemory, policy: DomainPolicy | str, query_domain: str | None
                ) -> np.ndarray | None:
    policy = DomainPolicy(policy)
    if policy is DomainPolicy.ALL_DOMAINS:
        return None
    if query_domain is None:
        raise ConfigError(f"domain policy {policy.value!r} needs a query domain")
    did = memory.domain_id(query_domain)
    if did is None:
        raise ConfigError(f"unknown domain {query_domain!r}; memory has {memory.domains}")
    mask = memory.domain_ids == did
    return mask if policy is DomainPolicy.IN_DOMAIN else ~mask


def ngm_filter(index: SuffixArrayIndex, query: Sequence[int], tau: float = 0.3, min_length: int = 3,
               universe: np.ndarray | None = None) -> np.ndarray:
    """Uids sharing an n-gram ``g`` with ``|g| >= min_length`` and ``|g| >= tau * |q|``."""
    if len(query) == 0:
        return np.zeros(0, dtype=np.int64)
    need = NGMFilter(tau, min_length).required_length(len(query))
    found = index.longest_common_ngram(query, need)
    uids = np.fromiter(sorted(found), dtype=np.int64, count=len(found))
    if universe is not None and len(uids):
        uids = uids[universe[uids]]
    return uids


def _sorted_candidates(uids: np.ndarray, scores: np.ndarray) -> list[Candidate]:
    order = np.lexsort((uids, -scores))
    return [Candidate(u, s, s) for u, s in zip(uids[order].tolist(), scores[order].tolist())]


def rank(candidates: np.ndarray, query: Sequence[int], ranker: Ranker, memory: TranslationMemory,
         inverted: InvertedIndex | None = None, bm25_scores: dict[int, float] | None = None) -> list[Candidate]:
    """Score candidates and sort them by (score desc, uid asc)."""
    uids = np.asarray(candidates, dtype=np.int64)
    if isinstance(ranker, EditRanker):
        scores = batch_similarity(query, memory.src_tokens, memory.src_offsets, uids, ranker.costs)
    elif bm25_scores is not None:
        scores = np.array([bm25_scores.get(u, 0.0) for u in uids.tolist()], dtype=np.float64)
    else:
        if inverted is None:
            raise ConfigError("BM25 ranking needs an inverted index")
        suids, sscores = inverted.score(query)
        pos = np.searchsorted(suids, uids)
        pos = np.minimum(pos, max(len(suids) - 1, 0))
        hit = (suids[pos] == uids) if len(suids) else np.zeros(len(uids), dtype=bool)
        scores = np.where(hit, sscores[pos] if len(suids) else 0.0, 0.0)
    return _sorted_candidates(uids, scores)


def top_k(ranked: Sequence[Candidate], k: int, query: Sentence = ()) -> RetrievedSet:
    return RetrievedSet(query=tuple(query), matches=list(ranked[:k]), k=k)


def contrastive_select(ranked: Sequence[Candidate], alpha: float, k: int, memory: TranslationMemory,
                       query: Sentence = (), penalty_scale: float = 1.0) -> RetrievedSet:
    """Greedy diversity-aware selection.

    After each pick, every remaining candidate's score becomes
    ``base - penalty_scale * alpha / |M| * sum(LED(candidate, m) for m in M)``
    and the best adjusted score is taken next (ties by ascending uid).
    ``penalty_scale`` expresses the penalty in the base score's units.
    """
    if alpha < 0:
        raise ConfigError("contrast factor must be >= 0")
    pool = list(ranked)
    base = np.array([c.base_score for c in pool], dtype=np.float64)
    pool_uids = np.array([c.uid for c in pool], dtype=np.int64)
    adjusted = base.copy()
    sim_sum = np.zeros(len(pool), dtype=np.float64)
    remaining = np.ones(len(pool), dtype=bool)
    selected: list[Candidate] = []
    while len(selected) < k and remaining.any():
        idx = np.flatnonzero(remaining)
        best = int(idx[np.lexsort((pool_uids[idx], -adjusted[idx]))[0]])
        selected.append(Candidate(int(pool_uids[best]), float(base[best]), float(adjusted[best])))
        remaining[best] = False
        idx = np.flatnonzero(remaining)
        if not len(idx):
            break
        sims = batch_similarity(memory.source(int(pool_uids[best])), memory.src_tokens, memory.src_offsets,
                                pool_uids[idx], LED)
        sim_sum[idx] += sims
        adjusted[idx] = base[idx] - penalty_scale * (alpha / len(selected) * sim_sum[idx])
    return RetrievedSet(query=tuple(query), matches=selected, k=k)


class Retriever:
    """Runs retrieval against one frozen memory.

    Indexes are built on first use unless supplied. All state is read-only
    after construction of the indexes, so ``retrieve`` may be called from
    several threads.
    """

    def __init__(self, memory: TranslationMemory, suffix_array: SuffixArrayIndex | None = None,
                 inverted: InvertedIndex | None = None, p: float = 2.0):
        self.memory = memory
        self._sa = suffix_array
        self._inv = inverted
        self.p = p
        self._masks: dict[tuple[DomainPolicy, str | None], np.ndarray | None] = {}

    @classmethod
    def from_bundle(cls, bundle) -> Retriever:
        return cls(bundle.memory, bundle.suffix_array, bundle.inverted, bundle.inverted.p)

    @property
    def suffix_array(self) -> SuffixArrayIndex:
        if self._sa is None:
            self._sa = SuffixArrayIndex.from_memory(self.memory)
        return self._sa

    @property
    def inverted(self) -> InvertedIndex:
        if self._inv is None:
            self._inv = InvertedIndex.from_memory(self.memory, self.p)
        return self._inv

    def prepare(self, config: RetrievalConfig) -> None:
        """Build whatever indexes ``config`` needs before concurrent use."""
        if isinstance(config.filter, NGMFilter):
            self.suffix_array
        if isinstance(config.filter, BM25Filter) or isinstance(config.ranker, BM25Ranker):
            self.inverted

    def universe(self, policy: DomainPolicy, domain: str | None) -> np.ndarray | None:
        key = (DomainPolicy(policy), domain if policy != DomainPolicy.ALL_DOMAINS else None)
        if key not in self._masks:
            self._masks[key] = domain_mask(self.memory, *key)
        return self._masks[key]

    def retrieve(self, query: Sequence[int], config: RetrievalConfig, domain: str | None = None,
                 query_uid: int | None = None, timings: dict[str, float] | None = None) -> RetrievedSet:
        query = tuple(int(t) for t in query)
        clock = time.perf_counter
        t0 = clock()
        universe = self.universe(config.domain_policy, domain)
        t1 = clock()

        bm25_scores = None
        flt = config.filter
        if isinstance(flt, NGMFilter):
            cands = ngm_filter(self.suffix_array, query, flt.tau, flt.min_length, universe)
        elif isinstance(flt, BM25Filter):
            top = self.inverted.candidates(query, flt.limit, universe)
            cands = np.array([u for u, _ in top], dtype=np.int64)
            bm25_scores = dict(top)
        elif isinstance(config.ranker, BM25Ranker):
            # documents without an indexed query term score 0 and would be dropped anyway
            uids, scores = self.inverted.score(query)
            if universe is not None:
                keep = universe[uids]
                uids, scores = uids[keep], scores[keep]
            cands = uids
            bm25_scores = dict(zip(uids.tolist(), scores.tolist()))
        else:
            cands = np.arange(len(self.memory)) if universe is None else np.flatnonzero(universe)
        if config.exclude_self and query_uid is not None:
            cands = cands[cands != query_uid]
        t2 = clock()

        inv = self.inverted if isinstance(config.ranker, BM25Ranker) else None
        ranked = rank(cands, query, config.ranker, self.memory, inv, bm25_scores)
        ranked = [c for c in ranked if c.base_score > 0]
        t3 = clock()

        if config.contrast is None:
            result = top_k(ranked, config.k, query)
        else:
            pool = ranked[: config.pool_size]
            scale = 1.0
            if isinstance(config.ranker, BM25Ranker) and pool:
                span = pool[0].base_score - min(c.base_score for c in pool)
                scale = span if span > 0 else 1.0
            result = contrastive_select(pool, config.contrast, config.k, self.memory, query, scale)
        t4 = clock()
        if timings is not None:
            for name, dt in (("domain", t1 - t0), ("filter", t2 - t1), ("rank", t3 - t2), ("select", t4 - t3)):
                timings[name] = timings.get(name, 0.0) + dt * 1e6
        return result


def retrieve(memory: TranslationMemory, query: Sequence[int], config: RetrievalConfig,
             domain: str | None = None, query_uid: int | None = None) -> RetrievedSet:
    """One-off retrieval; prefer :class:`Retriever` for repeated queries."""
    return Retriever(memory).retrieve(query, config, domain, query_uid)


# --- output formats ---------------------------------------------------------

def _score(x: float) -> str:
    return f"{x:.6f}"


def format_record(query_text: str, domain: str | None, result: RetrievedSet, memory: TranslationMemory) -> str:
    """One JSONL line; field order is fixed and scores carry 6 decimals."""
    dumps = lambda v: json.dumps(v, ensure_ascii=False)  # noqa: E731
    matches = ", ".join(
        "{"
        f'"uid": {c.uid}, "source": {dumps(memory.source_text(c.uid))}, '
        f'"target": {dumps(memory.target_text(c.uid))}, '
        f'"base_score": {_score(c.base_score)}, "adjusted_score": {_score(c.adjusted_score)}'
        "}"
        for c in result.matches
    )
    return (
        f'{{"query": {dumps(query_text)}, "domain": {dumps(domain)}, '
        f'"matches": [{matches}], "exhausted": {"true" if result.exhausted else "false"}}}'
    )


def format_tsv_rows(query_index: int, result: RetrievedSet, memory: TranslationMemory) -> list[str]:
    return [
        "\t".join([str(query_index), str(rank_), str(c.uid), _score(c.base_score), _score(c.adjusted_score),
                   memory.source_text(c.uid), memory.target_text(c.uid)])
        for rank_, c in enumerate(result.matches, start=1)
    ]


TSV_HEADER = "query\trank\tuid\tbase_score\tadjusted_score\tsource\ttarget"
