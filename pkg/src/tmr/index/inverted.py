"""Inverted index with common-term pruning, and Okapi BM25 over it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..text import UNK_ID

K1 = 1.2
B = 0.75


def bm25_idf(n_docs: int, df: int) -> float:
    return math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)


@dataclass
class InvertedIndex:
    """Term -> sorted (uid, tf) postings in CSR form.

    A term is pruned (kept out of the postings) when it occurs in more than
    ``p`` percent of the segments.
    """

    term_ptr: np.ndarray
    post_uid: np.ndarray
    post_tf: np.ndarray
    df: np.ndarray
    doc_len: np.ndarray
    pruned: np.ndarray
    p: float
    k1: float = K1
    b: float = B

    def __post_init__(self):
        self.n_docs = len(self.doc_len)
        self.avgdl = float(self.doc_len.sum()) / self.n_docs if self.n_docs else 0.0
        # per-document length normalization, computed as in the scalar formula
        self._doc_norm = self.k1 * (1.0 - self.b + self.b * self.doc_len.astype(np.float64) / self.avgdl) \
            if self.n_docs else np.zeros(0)
        self._idf_cache: dict[int, float] = {}

    @classmethod
    def build(cls, tokens: np.ndarray, offsets: np.ndarray, vocab_size: int, p: float = 2.0,
              k1: float = K1, b: float = B) -> InvertedIndex:
        if not 0 < p <= 100:
            raise ValueError(f"pruning percentage must be in (0, 100], got {p}")
        n = len(offsets) - 1
        lengths = np.diff(offsets)
        doc = np.repeat(np.arange(n, dtype=np.int64), lengths)
        pair = tokens.astype(np.int64) * max(n, 1) + doc
        keys, tf = np.unique(pair, return_counts=True)
        terms = keys // max(n, 1)
        uids = keys % max(n, 1)
        df = np.bincount(terms, minlength=vocab_size).astype(np.int64)
        pfrac = Fraction(repr(p)) if isinstance(p, float) else Fraction(p)
        # df / n > p / 100, compared exactly
        pruned = df * 100 * pfrac.denominator > pfrac.numerator * n
        pruned[UNK_ID] = False
        keep = ~pruned[terms]
        terms, uids, tf = terms[keep], uids[keep], tf[keep]
        counts = np.bincount(terms, minlength=vocab_size)
        term_ptr = np.zeros(vocab_size + 1, dtype=np.int64)
        np.cumsum(counts, out=term_ptr[1:])
        return cls(term_ptr=term_ptr, post_uid=uids.astype(np.int32), post_tf=tf.astype(np.int32),
                   df=df, doc_len=lengths.astype(np.int64), pruned=pruned, p=float(p), k1=k1, b=b)

    @classmethod
    def from_memory(cls, memory, p: float = 2.0) -> InvertedIndex:
        return cls.build(memory.src_tokens, memory.src_offsets, len(memory.source_vocab), p)

    @property
    def pruned_terms(self) -> set[int]:
        return set(np.flatnonzero(self.pruned).tolist())

    def is_indexed(self, term: int) -> bool:
        return 0 < term < len(self.df) and self.df[term] > 0 and not self.pruned[term]

    def postings(self, term: int) -> np.ndarray:
        if not 0 <= term < len(self.df):
            return self.post_uid[:0]
        return self.post_uid[self.term_ptr[term]:self.term_ptr[term + 1]]

    def idf(self, term: int) -> float:
        v = self._idf_cache.get(term)
        if v is None:
            v = self._idf_cache[term] = bm25_idf(self.n_docs, int(self.df[term]))
        return v

    def indexed_terms(self, query: Sequence[int]) -> list[int]:
        """Distinct indexed query terms in ascending id order."""
        return sorted(t for t in set(int(x) for x in query) if self.is_indexed(t))

    def score(self, query: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """BM25 over the union of postings of the query's indexed terms.

        Returns ``(uids, scores)`` with uids ascending. Repeated query terms
        count once.
        """
        terms = self.indexed_terms(query)
        if not terms:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        uid_parts, val_parts = [], []
        for t in terms:
            lo, hi = self.term_ptr[t], self.term_ptr[t + 1]
            uids = self.post_uid[lo:hi].astype(np.int64)
            tf = self.post_tf[lo:hi].astype(np.float64)
            uid_parts.append(uids)
            val_parts.append(self.idf(t) * (tf * (self.k1 + 1.0) / (tf + self._doc_norm[uids])))
        all_uids = np.concatenate(uid_parts)
        uniq, inv = np.unique(all_uids, return_inverse=True)
        # bincount accumulates in input order, i.e. term by term
        scores = np.bincount(inv.ravel(), weights=np.concatenate(val_parts), minlength=len(uniq))
        return uniq, scores

    def candidates(self, query: Sequence[int], limit: int = 100, universe: np.ndarray | None = None
                   ) -> list[tuple[int, float]]:
        """Top-``limit`` BM25 candidates, ordered by (score desc, uid asc).

        ``universe`` is an optional boolean mask over uids restricting the
        candidates (idf and length statistics stay corpus-wide).
        """
        if limit < 1:
            raise ValueError("candidate cap must be >= 1")
        uids, scores = self.score(query)
        if universe is not None and len(uids):
            keep = universe[uids]
            uids, scores = uids[keep], scores[keep]
        order = np.lexsort((uids, -scores))[:limit]
        return list(zip(uids[order].tolist(), scores[order].tolist()))


def build_inverted_index(memory, p: float = 2.0) -> InvertedIndex:
    return InvertedIndex.from_memory(memory, p)


def bm25_candidates(index: InvertedIndex, query: Sequence[int], limit: int = 100,
                    universe: np.ndarray | None = None) -> list[tuple[int, float]]:
    return index.candidates(query, limit, universe)
