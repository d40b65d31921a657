"""Corpus density from connected components of the LED similarity graph."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .edit import LED, batch_similarity, pack
from .index.suffix_array import SuffixArrayIndex

EXACT_LIMIT = 50_000


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        self.components -= 1
        return True


@dataclass(frozen=True)
class DensityResult:
    ncc: int
    size: int
    density: float
    threshold: float
    mode: str
    approximate: bool
    edges: int


def density_from_components(ncc: int, size: int) -> float:
    if size < 2:
        return 1.0
    return 1.0 - (ncc - 1) / (size - 1)


def density(corpus, threshold: float = 0.4, mode: str = "auto", min_length: int = 3) -> DensityResult:
    """Density of ``corpus`` (a memory, or a sequence of token sequences).

    Two sentences are linked when their LED similarity exceeds ``threshold``.
    ``exact`` compares all pairs; ``ngm`` only compares pairs sharing an
    n-gram of at least ``min_length`` tokens, which may miss edges and is
    flagged as approximate. ``auto`` picks exact below 50k sentences.
    """
    if hasattr(corpus, "src_tokens"):
        tokens, offsets = corpus.src_tokens, corpus.src_offsets
    else:
        tokens, offsets = pack(corpus)
    n = len(offsets) - 1
    if mode == "auto":
        mode = "exact" if n < EXACT_LIMIT else "ngm"
    if mode not in ("exact", "ngm"):
        raise ValueError(f"unknown density mode {mode!r}")
    approximate = mode == "ngm"
    if n < 2:
        warnings.warn(f"density of a corpus with {n} sentence(s) is degenerate; reporting 1.0", stacklevel=2)
        return DensityResult(ncc=n, size=n, density=1.0, threshold=threshold, mode=mode,
                             approximate=approximate, edges=0)

    uf = UnionFind(n)
    edges = 0
    sa = SuffixArrayIndex.build(tokens, offsets) if approximate else None
    for i in range(n - 1):
        sent = tokens[offsets[i]:offsets[i + 1]].tolist()
        if approximate:
            found = sa.longest_common_ngram(sent, min_length)
            others = np.array(sorted(j for j in found if j > i), dtype=np.int64)
        else:
            others = np.arange(i + 1, n)
        if not len(others):
            continue
        sims = batch_similarity(sent, tokens, offsets, others, LED)
        for j in others[sims > threshold].tolist():
            edges += 1
            uf.union(i, j)
    return DensityResult(ncc=uf.components, size=n, density=density_from_components(uf.components, n),
                         threshold=threshold, mode=mode, approximate=approximate, edges=edges)


def similarity_edges(sentences: Sequence[Sequence[int]], threshold: float = 0.4) -> list[tuple[int, int]]:
    """All pairs ``i < j`` with LED similarity above ``threshold``."""
    tokens, offsets = pack(sentences)
    n = len(sentences)
    out = []
    for i in range(n - 1):
        others = np.arange(i + 1, n)
        sims = batch_similarity(list(sentences[i]), tokens, offsets, others, LED)
        out.extend((i, int(j)) for j in others[sims > threshold])
    return out
