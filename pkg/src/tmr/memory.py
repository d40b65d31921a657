"""Frozen translation memory stored as flat token arrays."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .text import Sentence, Tokenizer, TranslationUnit, Vocabulary


def _flatten(sentences: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.fromiter((len(s) for s in sentences), dtype=np.int64, count=len(sentences))
    offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = np.fromiter((t for s in sentences for t in s), dtype=np.int32, count=int(offsets[-1]))
    return flat, offsets


class TranslationMemory:
    """Immutable collection of translation units.

    Sentences live in CSR form (``tokens[offsets[i]:offsets[i+1]]``) so that a
    million-unit memory stays compact; :meth:`unit` materializes one record.
    """

    def __init__(
        self,
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        src_tokens: np.ndarray,
        src_offsets: np.ndarray,
        tgt_tokens: np.ndarray,
        tgt_offsets: np.ndarray,
        domain_ids: np.ndarray,
        domains: Sequence[str],
        tokenizer: Tokenizer | None = None,
    ):
        self.source_vocab = source_vocab.freeze()
        self.target_vocab = target_vocab.freeze()
        self.src_tokens = np.ascontiguousarray(src_tokens, dtype=np.int32)
        self.src_offsets = np.ascontiguousarray(src_offsets, dtype=np.int64)
        self.tgt_tokens = np.ascontiguousarray(tgt_tokens, dtype=np.int32)
        self.tgt_offsets = np.ascontiguousarray(tgt_offsets, dtype=np.int64)
        self.domain_ids = np.ascontiguousarray(domain_ids, dtype=np.int32)
        self.domains = list(domains)
        self.tokenizer = tokenizer or Tokenizer()
        n = len(self.domain_ids)
        if len(self.src_offsets) != n + 1 or len(self.tgt_offsets) != n + 1:
            raise ValueError("offset arrays must have one entry per unit plus one")
        for arr in (self.src_tokens, self.src_offsets, self.tgt_tokens, self.tgt_offsets, self.domain_ids):
            arr.flags.writeable = False
        self._domain_index = {d: i for i, d in enumerate(self.domains)}

    @classmethod
    def from_units(
        cls,
        units: Sequence[TranslationUnit],
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        tokenizer: Tokenizer | None = None,
    ) -> TranslationMemory:
        for i, u in enumerate(units):
            if u.uid != i:
                raise ValueError(f"unit uids must be 0..n-1 in order; got {u.uid} at position {i}")
        domains: list[str] = []
        seen: dict[str, int] = {}
        dom_ids = []
        for u in units:
            if u.domain not in seen:
                seen[u.domain] = len(domains)
                domains.append(u.domain)
            dom_ids.append(seen[u.domain])
        src, src_off = _flatten([u.source for u in units])
        tgt, tgt_off = _flatten([u.target for u in units])
        return cls(source_vocab, target_vocab, src, src_off, tgt, tgt_off,
                   np.asarray(dom_ids, dtype=np.int32), domains, tokenizer)

    def __len__(self) -> int:
        return len(self.domain_ids)

    @property
    def source_lengths(self) -> np.ndarray:
        return np.diff(self.src_offsets)

    @property
    def target_lengths(self) -> np.ndarray:
        return np.diff(self.tgt_offsets)

    def source(self, uid: int) -> Sentence:
        return tuple(self.src_tokens[self.src_offsets[uid]:self.src_offsets[uid + 1]].tolist())

    def target(self, uid: int) -> Sentence:
        return tuple(self.tgt_tokens[self.tgt_offsets[uid]:self.tgt_offsets[uid + 1]].tolist())

    def domain(self, uid: int) -> str:
        return self.domains[self.domain_ids[uid]]

    def domain_id(self, label: str) -> int | None:
        return self._domain_index.get(label)

    def unit(self, uid: int) -> TranslationUnit:
        return TranslationUnit(uid, self.source(uid), self.target(uid), self.domain(uid))

    def units(self):
        for uid in range(len(self)):
            yield self.unit(uid)

    def source_text(self, uid: int) -> str:
        return " ".join(self.source_vocab.decode(self.source(uid)))

    def target_text(self, uid: int) -> str:
        return " ".join(self.target_vocab.decode(self.target(uid)))

    def encode_query(self, text: str) -> Sentence:
        """Tokenize a query against the frozen source vocabulary."""
        return self.source_vocab.encode(self.tokenizer(text))

    def stats(self) -> dict:
        n = len(self)
        per_domain = {d: int(np.count_nonzero(self.domain_ids == i)) for i, d in enumerate(self.domains)}
        return {
            "size": n,
            "mean_source_length": float(self.source_lengths.mean()) if n else 0.0,
            "mean_target_length": float(self.target_lengths.mean()) if n else 0.0,
            "source_vocab": len(self.source_vocab) - 1,
            "target_vocab": len(self.target_vocab) - 1,
            "domains": per_domain,
        }
