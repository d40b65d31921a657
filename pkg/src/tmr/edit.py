"""Weighted edit distance, its normalizer, and the LED / LCS / delta-LCS similarities.

Costs are kept as exact fractions and scaled to integers for the dynamic
programs, so ties are decided exactly and results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # 0.1 means one tenth, not the nearest binary double
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class EditCosts:
    """Delete / insert / replace costs; copies are free."""

    delete: Fraction
    insert: Fraction
    replace: Fraction

    def __init__(self, delete=1, insert=1, replace=1):
        object.__setattr__(self, "delete", _frac(delete))
        object.__setattr__(self, "insert", _frac(insert))
        object.__setattr__(self, "replace", _frac(replace))
        if min(self.delete, self.insert, self.replace) < 0:
            raise ValueError("edit costs must be non-negative")
        if self.insert == 0 and self.replace == 0:
            raise ValueError("insert and replace costs cannot both be zero")

    @classmethod
    def led(cls) -> EditCosts:
        return cls(1, 1, 1)

    @classmethod
    def lcs(cls) -> EditCosts:
        return cls(0, 1, 1)

    @classmethod
    def delta_lcs(cls, delta=Fraction(1, 10)) -> EditCosts:
        return cls(delta, 1, 1)

    @property
    def scale(self) -> int:
        return math.lcm(self.delete.denominator, self.insert.denominator, self.replace.denominator)

    def scaled(self) -> tuple[int, int, int]:
        """Integer (d, a, r) sharing the common denominator ``scale``."""
        s = self.scale
        return (int(self.delete * s), int(self.insert * s), int(self.replace * s))

    @property
    def copies_are_lcs(self) -> bool:
        """True when an optimal script never replaces (a + d <= r)."""
        return self.insert + self.delete <= self.replace

    def __str__(self) -> str:
        return f"({self.delete},{self.insert},{self.replace})"


LED = EditCosts.led()
LCS = EditCosts.lcs()
DELTA_LCS = EditCosts.delta_lcs()


@dataclass(frozen=True)
class EditResult:
    delta: Fraction
    normalizer: Fraction
    similarity: float
    ecs_length: int


def _norm_int(n_example: int, n_query: int, d: int, a: int, r: int) -> int:
    if a + d <= r:
        return a * n_query + d * n_example
    if n_query <= n_example:
        return (r - d) * n_query + d * n_example
    return (r - a) * n_example + a * n_query


def normalizer(n_example: int, n_query: int, costs: EditCosts) -> Fraction:
    """Upper bound of the edit cost for the given lengths."""
    d, a, r = costs.scaled()
    return Fraction(_norm_int(n_example, n_query, d, a, r), costs.scale)


def _similarity(delta: int, norm: int, n_example: int, n_query: int) -> float:
    if n_example == 0 and n_query == 0:
        return 1.0
    if norm == 0:
        return 0.0
    # one rounding step, so reductions such as |lcs| / |q| come out exact
    return (norm - delta) / norm


def edit_distance(example: Sequence, query: Sequence, costs: EditCosts = LED) -> EditResult:
    """Minimal cost of editing ``example`` into ``query``.

    ``ecs_length`` is the copy count of an optimal script; among equal-cost
    scripts the one with the most copies is reported.
    """
    d, a, r = costs.scaled()
    n, m = len(example), len(query)
    # cells hold cost * big - copies so one integer min picks (cost asc, copies desc)
    big = min(n, m) + 1
    prev = [j * a * big for j in range(m + 1)]
    for i in range(1, n + 1):
        xi = example[i - 1]
        cur = [i * d * big] + [0] * m
        for j in range(1, m + 1):
            if xi == query[j - 1]:
                diag = prev[j - 1] - 1
            else:
                diag = prev[j - 1] + r * big
            dele = prev[j] + d * big
            ins = cur[j - 1] + a * big
            cur[j] = min(diag, dele, ins)
        prev = cur
    key = prev[m]
    delta = -(-key // big)
    copies = delta * big - key
    norm = _norm_int(n, m, d, a, r)
    s = costs.scale
    return EditResult(
        delta=Fraction(delta, s),
        normalizer=Fraction(norm if (n or m) else 1, s),
        similarity=_similarity(delta, norm, n, m),
        ecs_length=copies,
    )


def similarity(example: Sequence, query: Sequence, costs: EditCosts = LED) -> float:
    return edit_distance(example, query, costs).similarity


def led_similarity(example: Sequence, query: Sequence) -> float:
    """Normalized Levenshtein similarity, ``1 - lev / max(len)``."""
    return edit_distance(example, query, LED).similarity


def lcs_length(s1: Sequence, s2: Sequence) -> int:
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    prev = [0] * (len(s2) + 1)
    for x in s1:
        cur = [0]
        for j, y in enumerate(s2, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


# --- batch kernel -----------------------------------------------------------

_CHUNK = 1 << 16
_PAD = -1


def _bucket_edges(max_len: int) -> list[int]:
    edges = [8]
    while edges[-1] < max_len:
        edges.append(edges[-1] * 2)
    return edges


def _batch_delta(query: np.ndarray, mat: np.ndarray, lengths: np.ndarray, d: int, a: int, r: int) -> np.ndarray:
    """Integer edit cost of each row of ``mat`` (padded with ``_PAD``) into ``query``.

    Rows are processed in lockstep, one example position at a time. The
    insertion recurrence along a row is a running minimum of
    ``cell - j*a`` so each step is a handful of array operations.
    """
    g, width = mat.shape
    m = len(query)
    # every cell is at most the cost of deleting everything and inserting the query
    bound = width * max(d, r) + m * a
    dtype = np.int32 if bound < 2**31 - 1 - m * a else np.int64
    out = np.empty(g, dtype=np.int64)
    out[lengths == 0] = m * a
    jcol = (np.arange(m + 1, dtype=dtype) * dtype(a))[:, None]
    prev = np.repeat(jcol, g, axis=1)
    cur = np.empty_like(prev)
    diag = np.empty((m, g), dtype=dtype)
    neq = np.empty((m, g), dtype=bool)
    q = query[:, None]
    ends = np.bincount(lengths, minlength=width + 1)
    for i in range(1, width + 1):
        np.not_equal(q, mat[None, :, i - 1], out=neq)
        np.multiply(neq, r, out=diag, casting="unsafe")
        diag += prev[:-1]
        body = cur[1:]
        np.add(prev[1:], d, out=body, casting="unsafe")
        np.minimum(body, diag, out=body)
        cur[0] = i * d
        cur -= jcol
        np.minimum.accumulate(cur, axis=0, out=cur)
        cur += jcol
        prev, cur = cur, prev
        if ends[i]:
            done = lengths == i
            out[done] = prev[m, done]
    return out


@dataclass(frozen=True)
class PaddedBatch:
    """Sentences cut into length buckets of padded rows, reusable across queries."""

    uids: np.ndarray
    lengths: np.ndarray
    blocks: tuple[tuple[np.ndarray, np.ndarray], ...]  # (row indices into uids, padded token matrix)

    @classmethod
    def build(cls, tokens: np.ndarray, offsets: np.ndarray, uids: np.ndarray) -> PaddedBatch:
        uids = np.asarray(uids, dtype=np.int64)
        starts = offsets[uids]
        lengths = offsets[uids + 1] - starts
        blocks = []
        if len(uids):
            lo = -1
            for hi in _bucket_edges(int(lengths.max())):
                sel = np.flatnonzero((lengths > lo) & (lengths <= hi))
                lo = hi
                for c in range(0, len(sel), _CHUNK):
                    idx = sel[c:c + _CHUNK]
                    ln = lengths[idx]
                    width = int(ln.max())
                    pos = starts[idx][:, None] + np.arange(width)[None, :]
                    valid = np.arange(width)[None, :] < ln[:, None]
                    mat = np.where(valid, tokens[np.minimum(pos, max(len(tokens) - 1, 0))], _PAD)
                    blocks.append((idx, mat.astype(np.int64)))
        return cls(uids, lengths, tuple(blocks))

    def edit_cost(self, query: Sequence[int], costs: EditCosts = LED) -> np.ndarray:
        """Scaled integer edit cost of every sentence into ``query``."""
        d, a, r = costs.scaled()
        q = np.asarray(query, dtype=np.int64)
        out = np.empty(len(self.uids), dtype=np.int64)
        for idx, mat in self.blocks:
            out[idx] = _batch_delta(q, mat, self.lengths[idx], d, a, r)
        return out

    def similarity(self, query: Sequence[int], costs: EditCosts = LED) -> np.ndarray:
        d, a, r = costs.scaled()
        return _vector_similarity(self.edit_cost(query, costs), self.lengths, len(query), d, a, r)


def batch_edit_cost(
    query: Sequence[int],
    tokens: np.ndarray,
    offsets: np.ndarray,
    uids: np.ndarray,
    costs: EditCosts = LED,
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled integer edit cost of each sentence ``uids`` into ``query``.

    Returns ``(delta, lengths)``; divide ``delta`` by ``costs.scale`` for the
    real-valued cost. Sentences are bucketed by length so padding stays small.
    """
    batch = PaddedBatch.build(tokens, offsets, uids)
    return batch.edit_cost(query, costs), batch.lengths


def batch_similarity(
    query: Sequence[int],
    tokens: np.ndarray,
    offsets: np.ndarray,
    uids: np.ndarray,
    costs: EditCosts = LED,
) -> np.ndarray:
    """Similarity of each sentence ``uids`` (CSR ``tokens``/``offsets``) against ``query``.

    Bit-identical to :func:`edit_distance` for every pair.
    """
    delta, lengths = batch_edit_cost(query, tokens, offsets, uids, costs)
    d, a, r = costs.scaled()
    return _vector_similarity(delta, lengths, len(query), d, a, r)


def _vector_similarity(delta: np.ndarray, n_example: np.ndarray, m: int, d: int, a: int, r: int) -> np.ndarray:
    if a + d <= r:
        norm = a * m + d * n_example
    else:
        norm = np.where(m <= n_example, (r - d) * m + d * n_example, (r - a) * n_example + a * m)
    sim = np.zeros(len(delta), dtype=np.float64)
    ok = norm > 0
    sim[ok] = (norm[ok] - delta[ok]) / norm[ok]
    if m == 0:
        sim[n_example == 0] = 1.0
    return sim


def pack(sentences: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    """CSR-pack Python sequences into ``(tokens, offsets)``."""
    lengths = np.fromiter((len(s) for s in sentences), dtype=np.int64, count=len(sentences))
    offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    tokens = np.fromiter((t for s in sentences for t in s), dtype=np.int64, count=int(offsets[-1]))
    return tokens, offsets


def pairwise_batch_similarity(query: Sequence[int], sentences: Sequence[Sequence[int]], costs: EditCosts = LED) -> np.ndarray:
    """Convenience wrapper of :func:`batch_similarity` over Python sequences."""
    tokens, offsets = pack(sentences)
    return batch_similarity(query, tokens, offsets, np.arange(len(sentences)), costs)
