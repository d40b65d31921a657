"""Token-level suffix array over the source side of a translation memory."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..text import UNK_ID


def build_sa(text: np.ndarray) -> np.ndarray:
    """Suffix array of an integer sequence by prefix doubling.

    ``O(N log N)`` per round; the number of rounds is logarithmic in the
    longest repeated substring, which the per-sentence sentinels bound by the
    longest sentence.
    """
    n = len(text)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    _, rank = np.unique(text, return_inverse=True)
    rank = rank.astype(np.int64).ravel()
    k = 1
    while True:
        second = np.zeros(n, dtype=np.int64)
        second[: n - k] = rank[k:] + 1
        key = rank * (n + 1) + second
        sa = np.argsort(key, kind="stable")
        skey = key[sa]
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.concatenate(([0], np.cumsum(skey[1:] != skey[:-1])))
        rank = new
        if rank[sa[-1]] == n - 1:
            return sa
        k *= 2


@dataclass
class SuffixArrayIndex:
    """Suffix array over concatenated source sentences.

    Each sentence is followed by its own negative sentinel, so sentinels sort
    below every token, are pairwise distinct and never match a query token;
    no match can cross a sentence boundary.
    """

    text: np.ndarray
    sa: np.ndarray
    position_uid: np.ndarray
    n_sentences: int

    @classmethod
    def build(cls, tokens: np.ndarray, offsets: np.ndarray) -> SuffixArrayIndex:
        n = len(offsets) - 1
        lengths = np.diff(offsets)
        text = np.empty(len(tokens) + n, dtype=np.int64)
        # sentence i occupies [offsets[i] + i, offsets[i+1] + i), its sentinel follows
        sent_end = offsets[1:] + np.arange(n)
        is_sentinel = np.zeros(len(text), dtype=bool)
        is_sentinel[sent_end] = True
        text[~is_sentinel] = tokens
        text[sent_end] = -(np.arange(n, dtype=np.int64) + 1)
        position_uid = np.repeat(np.arange(n, dtype=np.int32), lengths + 1)
        return cls(text=text, sa=build_sa(text), position_uid=position_uid, n_sentences=n)

    @classmethod
    def from_memory(cls, memory) -> SuffixArrayIndex:
        return cls.build(memory.src_tokens, memory.src_offsets)

    def __len__(self) -> int:
        return len(self.sa)

    def _match_intervals(self, query: Sequence[int], start: int) -> list[tuple[int, int]]:
        """SA intervals of suffixes sharing ``query[start:start+m]`` for m = 1, 2, ..."""
        text, sa = self.text, self.sa
        lo, hi = 0, len(sa)
        intervals = []
        for m in range(len(query) - start):
            tok = query[start + m]
            if tok == UNK_ID:
                break
            key = lambda p, m=m: text[p + m]  # noqa: E731
            lo2 = bisect_left(sa, tok, lo, hi, key=key)
            hi2 = bisect_right(sa, tok, lo2, hi, key=key)
            if lo2 == hi2:
                break
            lo, hi = lo2, hi2
            intervals.append((lo, hi))
        return intervals

    def longest_common_ngram(self, query: Sequence[int], min_length: int = 1) -> dict[int, int]:
        """Longest contiguous n-gram shared with the query, per sentence uid.

        Only sentences sharing an n-gram of at least ``min_length`` tokens are
        reported. Work is logarithmic in the index size per query position
        plus linear in the number of reported occurrences.
        """
        min_length = max(1, min_length)
        query = [int(t) for t in query]
        uid_parts, len_parts = [], []
        for start in range(len(query) - min_length + 1):
            intervals = self._match_intervals(query, start)
            top = len(intervals)
            if top < min_length:
                continue
            # occurrences matching exactly m tokens: I_m minus I_{m+1}
            lo, hi = intervals[-1]
            segs = [(lo, hi, top)]
            for m in range(top - 1, min_length - 1, -1):
                olo, ohi = intervals[m - 1]
                if olo < lo:
                    segs.append((olo, lo, m))
                if hi < ohi:
                    segs.append((hi, ohi, m))
                lo, hi = olo, ohi
            for a, b, m in segs:
                uid_parts.append(self.position_uid[self.sa[a:b]])
                len_parts.append(np.full(b - a, m, dtype=np.int64))
        if not uid_parts:
            return {}
        uids = np.concatenate(uid_parts)
        lens = np.concatenate(len_parts)
        order = np.lexsort((-lens, uids))
        uids, lens = uids[order], lens[order]
        first = np.concatenate(([True], uids[1:] != uids[:-1]))
        return dict(zip(uids[first].tolist(), lens[first].tolist()))


def build_suffix_array(memory) -> SuffixArrayIndex:
    return SuffixArrayIndex.from_memory(memory)


def longest_common_ngram(index: SuffixArrayIndex, query: Sequence[int], min_length: int = 1) -> dict[int, int]:
    return index.longest_common_ngram(query, min_length)
