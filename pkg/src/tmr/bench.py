"""Synthetic corpora and strategy-comparison experiments."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .edit import LCS, LED, EditCosts, batch_similarity
from .index.inverted import InvertedIndex
from .index.suffix_array import SuffixArrayIndex
from .memory import TranslationMemory
from .metrics import format_table, quality_report
from .pipeline import (BM25Filter, BM25Ranker, EditRanker, NGMFilter, RetrievalConfig, Retriever,
                       ngm_filter)
from .text import Tokenizer, Vocabulary


@dataclass(frozen=True)
class SyntheticSpec:
    size: int = 2000
    vocab_size: int = 5000
    mean_length: float = 12.0
    repetition: float = 0.5
    mutation: float = 0.2
    domains: int = 1
    zipf: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.size < 1 or self.vocab_size < 1 or self.mean_length < 1 or self.domains < 1:
            raise ValueError(f"invalid synthetic corpus spec: {self}")
        if not 0 <= self.repetition <= 1 or not 0 <= self.mutation <= 1:
            raise ValueError("repetition and mutation must be in [0, 1]")


def _term(j: int) -> str:
    return f"w{j}"


def _token_probs(spec: SyntheticSpec) -> np.ndarray | None:
    if spec.zipf <= 0:
        return None
    w = 1.0 / np.arange(1, spec.vocab_size + 1, dtype=np.float64) ** spec.zipf
    return w / w.sum()


def generate_corpus(spec: SyntheticSpec) -> TranslationMemory:
    """Deterministic synthetic memory.

    Sentence 0 and a ``1 - repetition`` share of the others are drawn fresh;
    the rest are copies of a random fresh sentence with each token replaced
    with probability ``mutation``. Copies inherit the domain of their
    original. Targets are the sources with every word spelled backwards.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    probs = _token_probs(spec)
    draw = lambda k: rng.choice(spec.vocab_size, size=k, p=probs).astype(np.int32) + 1  # noqa: E731

    is_copy = rng.random(n) < spec.repetition
    is_copy[0] = False
    originals = np.flatnonzero(~is_copy)
    parent = np.arange(n)
    parent[is_copy] = originals[rng.integers(0, len(originals), size=int(is_copy.sum()))]
    lengths = 1 + rng.poisson(spec.mean_length - 1, size=n).astype(np.int64)
    lengths[is_copy] = lengths[parent[is_copy]]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])

    tokens = np.empty(int(offsets[-1]), dtype=np.int32)
    orig_pos = _spans(offsets, originals)
    tokens[orig_pos] = draw(len(orig_pos))
    copies = np.flatnonzero(is_copy)
    if len(copies):
        dst = _spans(offsets, copies)
        src = _spans(offsets, parent[copies])
        tokens[dst] = tokens[src]
        hit = rng.random(len(dst)) < spec.mutation
        tokens[dst[hit]] = draw(int(hit.sum()))

    dom = rng.integers(0, spec.domains, size=n).astype(np.int32)
    dom[is_copy] = dom[parent[is_copy]]

    terms = ["<unk>"] + [_term(j) for j in range(1, spec.vocab_size + 1)]
    freq = _segment_freq(tokens, offsets, spec.vocab_size + 1)
    src_vocab = Vocabulary(terms, freq)
    tgt_vocab = Vocabulary(["<unk>"] + [t[::-1] for t in terms[1:]], freq)
    src_vocab.n_segments = tgt_vocab.n_segments = n
    return TranslationMemory(src_vocab, tgt_vocab, tokens, offsets, tokens.copy(), offsets.copy(), dom,
                             [f"d{i}" for i in range(spec.domains)], Tokenizer())


def _spans(offsets: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Flat positions of the given CSR rows, row after row."""
    starts = offsets[rows]
    lens = offsets[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    row_start = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return row_start + np.arange(total)


def _segment_freq(tokens: np.ndarray, offsets: np.ndarray, vocab: int) -> list[int]:
    n = len(offsets) - 1
    doc = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    keys = np.unique(tokens.astype(np.int64) * max(n, 1) + doc)
    return np.bincount(keys // max(n, 1), minlength=vocab).tolist()


@dataclass
class Query:
    tokens: tuple[int, ...]
    domain: str | None = None
    uid: int | None = None


def generate_queries(memory: TranslationMemory, count: int, seed: int = 1, mutation: float = 0.3) -> list[Query]:
    """Mutated copies of random memory sentences, carrying their domain."""
    rng = np.random.default_rng(seed)
    vocab = len(memory.source_vocab) - 1
    out = []
    for uid in rng.integers(0, len(memory), size=count).tolist():
        toks = np.array(memory.source(uid), dtype=np.int64)
        hit = rng.random(len(toks)) < mutation
        toks[hit] = rng.integers(1, vocab + 1, size=int(hit.sum()))
        out.append(Query(tuple(toks.tolist()), memory.domain(uid), uid))
    return out


# --- strategy comparison ----------------------------------------------------

def parse_strategy(text: str, k: int = 3) -> RetrievalConfig:
    """Parse ``filter/ranker[/cALPHA][/policy]``.

    filter: ``none`` | ``ngm[TAU]`` | ``bm25[L]``; ranker: ``led`` | ``lcs`` |
    ``dlcs[DELTA]`` | ``bm25``; policy: ``in`` | ``all`` | ``out``.
    Example: ``ngm0.2/dlcs0.1/c0.3``.
    """
    parts = text.strip().split("/")
    if len(parts) < 2:
        raise ValueError(f"strategy {text!r} must look like filter/ranker[/cALPHA][/policy]")
    flt, rnk, *rest = parts
    if flt == "none":
        filt = None
    elif flt.startswith("ngm"):
        filt = NGMFilter(float(flt[3:]) if flt[3:] else 0.3)
    elif flt.startswith("bm25"):
        filt = BM25Filter(int(flt[4:]) if flt[4:] else 100)
    else:
        raise ValueError(f"unknown filter {flt!r}")
    if rnk == "led":
        ranker = EditRanker(LED)
    elif rnk == "lcs":
        ranker = EditRanker(LCS)
    elif rnk.startswith("dlcs"):
        ranker = EditRanker(EditCosts.delta_lcs(rnk[4:] if rnk[4:] else "0.1"))
    elif rnk == "bm25":
        ranker = BM25Ranker()
    else:
        raise ValueError(f"unknown ranker {rnk!r}")
    contrast, policy = None, "all"
    for r in rest:
        if r.startswith("c"):
            contrast = float(r[1:]) if r[1:] else 0.3
        elif r in ("in", "all", "out"):
            policy = r
        else:
            raise ValueError(f"unknown strategy modifier {r!r}")
    return RetrievalConfig(domain_policy=policy, filter=filt, ranker=ranker, contrast=contrast, k=k)


@dataclass
class Comparison:
    scores: dict[str, dict[str, float]]
    quartiles: dict[float, tuple[float, float, float]]
    survivors: dict[float, list[int]] = field(repr=False)

    def table(self) -> str:
        lines = [format_table(self.scores), "", "NGM survivors (Q1 / Q2 / Q3)"]
        for tau, (q1, q2, q3) in self.quartiles.items():
            lines.append(f"  tau={tau:<4}  {q1:8.1f} {q2:8.1f} {q3:8.1f}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({"scores": self.scores,
                           "ngm_quartiles": {str(t): list(q) for t, q in self.quartiles.items()}},
                          indent=2, sort_keys=True)


def ngm_survivors(index: SuffixArrayIndex, queries: Sequence[Query], tau: float, min_length: int = 3) -> list[int]:
    return [len(ngm_filter(index, q.tokens, tau, min_length)) for q in queries]


def compare_strategies(memory: TranslationMemory, queries: Sequence[Query], configs: dict[str, RetrievalConfig],
                       taus: Sequence[float] = (0.2, 0.3, 0.4, 0.5), min_length: int = 3,
                       retriever: Retriever | None = None) -> Comparison:
    """Coverage / relevance / length per strategy plus NGM survivor quartiles per tau."""
    ks = {c.k for c in configs.values()}
    if len(ks) > 1:
        raise ValueError(f"strategies must share k, got {sorted(ks)}")
    retriever = retriever or Retriever(memory)
    scores = {}
    for name, cfg in configs.items():
        batch = []
        for q in queries:
            res = retriever.retrieve(q.tokens, cfg, q.domain)
            batch.append((q.tokens, [memory.source(u) for u in res.uids], q.domain))
        rep = quality_report(batch)
        scores[name] = {"coverage": rep.coverage, "relevance": rep.relevance, "length": rep.mean_example_length}
    survivors = {t: ngm_survivors(retriever.suffix_array, queries, t, min_length) for t in taus}
    quartiles = {t: tuple(float(x) for x in np.percentile(v, [25, 50, 75])) if v else (0.0, 0.0, 0.0)
                 for t, v in survivors.items()}
    return Comparison(scores, quartiles, survivors)


# --- timing -----------------------------------------------------------------

@dataclass
class TimingResult:
    sizes: list[int]
    medians: dict[str, list[float]]
    exponents: dict[str, float]
    query_length_ratio: float
    build_seconds: dict[str, list[float]]

    def table(self) -> str:
        stages = list(self.medians)
        head = "size".rjust(10) + "".join(s.rjust(16) for s in stages)
        lines = [head]
        for i, n in enumerate(self.sizes):
            lines.append(f"{n:>10}" + "".join(f"{self.medians[s][i] * 1e3:>13.3f} ms" for s in stages))
        lines.append("exponent".rjust(10) + "".join(f"{self.exponents[s]:>16.3f}" for s in stages))
        lines.append(f"ED time ratio for doubled query length: {self.query_length_ratio:.2f}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def growth_exponent(sizes: Sequence[int], times: Sequence[float]) -> float:
    """Slope of the least-squares line through (log size, log time)."""
    return float(np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)[0])


def _median_time(fn, items, repeat: int = 1) -> float:
    samples = []
    for item in items:
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn(item)
            best = min(best, time.perf_counter() - t0)
        samples.append(best)
    return float(np.median(samples))


def timing_sweep(sizes: Sequence[int], spec: SyntheticSpec | None = None, n_queries: int = 5,
                 ed_queries: int = 3, costs: EditCosts = LED, seed: int = 7) -> TimingResult:
    """Median per-query latency of NGM filtering, BM25 filtering and filter-free ED ranking.

    A fresh corpus is generated per size from ``spec``; queries are mutated
    copies of corpus sentences. Exponents come from a log-log fit.
    """
    spec = spec or SyntheticSpec(vocab_size=50_000, mean_length=10, repetition=0.2, zipf=0.0)
    medians: dict[str, list[float]] = {"ngm": [], "bm25": [], "ed_full": []}
    builds: dict[str, list[float]] = {"suffix_array": [], "inverted": []}
    ratio = float("nan")
    for n in sizes:
        memory = generate_corpus(replace(spec, size=n))
        t0 = time.perf_counter()
        sa = SuffixArrayIndex.from_memory(memory)
        t1 = time.perf_counter()
        inv = InvertedIndex.from_memory(memory, 2.0)
        t2 = time.perf_counter()
        builds["suffix_array"].append(t1 - t0)
        builds["inverted"].append(t2 - t1)
        queries = [q.tokens for q in generate_queries(memory, n_queries, seed=seed)]
        all_uids = np.arange(n)
        medians["ngm"].append(_median_time(lambda q: ngm_filter(sa, q, 0.3, 3), queries, repeat=3))
        medians["bm25"].append(_median_time(lambda q: inv.candidates(q, 100), queries, repeat=3))
        ed = lambda q: batch_similarity(q, memory.src_tokens, memory.src_offsets, all_uids, costs)  # noqa: E731
        medians["ed_full"].append(_median_time(ed, queries[:ed_queries]))
        if n == sizes[-1]:
            short = [q[: max(1, len(q) // 2)] for q in queries[:ed_queries]]
            double = [s + s for s in short]
            ratio = _median_time(ed, double, repeat=3) / _median_time(ed, short, repeat=3)
        del memory, sa, inv
    exponents = {k: growth_exponent(sizes, v) for k, v in medians.items()}
    return TimingResult(list(sizes), medians, exponents, ratio, builds)


# --- experiment config files ------------------------------------------------

@dataclass
class Experiment:
    spec: SyntheticSpec
    strategies: list[str]
    queries: int = 100
    query_seed: int = 1
    query_mutation: float = 0.3
    k: int = 3
    taus: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5)
    timing_sizes: tuple[int, ...] = ()


_SPEC_KEYS = {f.name: f.type for f in SyntheticSpec.__dataclass_fields__.values()}


def load_experiment(path: str | Path) -> Experiment:
    """Read a ``key=value`` experiment file (``#`` starts a comment)."""
    spec_kw, exp_kw = {}, {}
    casts = {"int": int, "float": float}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _SPEC_KEYS:
            spec_kw[key] = casts[_SPEC_KEYS[key]](value)
        elif key == "strategies":
            exp_kw[key] = [s.strip() for s in value.split(",") if s.strip()]
        elif key in ("queries", "query_seed", "k"):
            exp_kw[key] = int(value)
        elif key == "query_mutation":
            exp_kw[key] = float(value)
        elif key == "taus":
            exp_kw[key] = tuple(float(s) for s in value.split(","))
        elif key == "timing_sizes":
            exp_kw[key] = tuple(int(s) for s in value.split(","))
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    exp_kw.setdefault("strategies", ["ngm0.3/led", "none/lcs", "none/dlcs0.1", "none/dlcs0.1/c0.3"])
    return Experiment(spec=SyntheticSpec(**spec_kw), **exp_kw)


def run_experiment(exp: Experiment) -> tuple[Comparison, TimingResult | None]:
    memory = generate_corpus(exp.spec)
    queries = generate_queries(memory, exp.queries, exp.query_seed, exp.query_mutation)
    configs = {s: parse_strategy(s, exp.k) for s in exp.strategies}
    comparison = compare_strategies(memory, queries, configs, exp.taus)
    timing = timing_sweep(exp.timing_sizes, exp.spec) if exp.timing_sizes else None
    return comparison, timing
