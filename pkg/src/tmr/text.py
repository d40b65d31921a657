"""Tokenization, vocabularies and the translation-memory record types."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

Sentence = tuple[int, ...]

UNK_ID = 0
UNK_TOKEN = "<unk>"

TOKENIZER_MODES = ("whitespace", "punct")

_PUNCT_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class IngestionError(ValueError):
    """Raised when corpus files cannot be read into translation units."""


class AlignmentError(IngestionError):
    """Source and target files do not have the same number of lines."""


def split_tokens(text: str, mode: str = "whitespace", lowercase: bool = False) -> list[str]:
    """Split ``text`` into surface tokens.

    ``whitespace`` assumes pre-tokenized input; ``punct`` additionally splits
    punctuation off word characters.
    """
    if lowercase:
        text = text.lower()
    if mode == "whitespace":
        return text.split()
    if mode == "punct":
        return _PUNCT_RE.findall(text)
    raise ValueError(f"unknown tokenizer mode {mode!r}; expected one of {TOKENIZER_MODES}")


class Vocabulary:
    """Bidirectional term <-> id map with per-term segment frequencies.

    Id 0 is reserved for unknown terms. The vocabulary grows while building and
    is frozen afterwards, at which point unknown lookups map to ``UNK_ID``.
    """

    def __init__(self, terms: Sequence[str] | None = None, segment_freq: Sequence[int] | None = None):
        self._terms: list[str] = [UNK_TOKEN]
        self._ids: dict[str, int] = {UNK_TOKEN: UNK_ID}
        self._freq: list[int] = [0]
        self.n_segments = 0
        self.frozen = False
        if terms is not None:
            if not terms or terms[0] != UNK_TOKEN:
                raise ValueError("vocabulary terms must start with the UNK token")
            self._terms = list(terms)
            self._ids = {t: i for i, t in enumerate(self._terms)}
            if len(self._ids) != len(self._terms):
                raise ValueError("duplicate terms in vocabulary")
            self._freq = list(segment_freq) if segment_freq is not None else [0] * len(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._ids

    def freeze(self) -> Vocabulary:
        self.frozen = True
        return self

    def id(self, term: str) -> int:
        return self._ids.get(term, UNK_ID)

    def term(self, token_id: int) -> str:
        return self._terms[token_id]

    @property
    def terms(self) -> list[str]:
        return list(self._terms)

    def segment_frequency(self, token_id: int) -> int:
        return self._freq[token_id]

    @property
    def segment_frequencies(self) -> np.ndarray:
        return np.asarray(self._freq, dtype=np.int64)

    def encode(self, tokens: Iterable[str], count_segment: bool = False) -> Sentence:
        """Map surface tokens to ids.

        While the vocabulary is not frozen, unseen terms are registered. Once
        frozen, they map to ``UNK_ID``. ``count_segment`` bumps the segment
        frequency of every distinct term in ``tokens``.
        """
        ids = []
        for tok in tokens:
            i = self._ids.get(tok)
            if i is None:
                if self.frozen:
                    i = UNK_ID
                else:
                    i = len(self._terms)
                    self._terms.append(tok)
                    self._ids[tok] = i
                    self._freq.append(0)
            ids.append(i)
        if count_segment:
            if self.frozen:
                raise RuntimeError("cannot count segments on a frozen vocabulary")
            self.n_segments += 1
            for i in set(ids):
                self._freq[i] += 1
        return tuple(ids)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._terms[i] for i in ids]


@dataclass(frozen=True)
class TranslationUnit:
    uid: int
    source: Sentence
    target: Sentence
    domain: str


@dataclass
class LoadResult:
    units: list[TranslationUnit]
    skipped: int = 0


@dataclass
class Tokenizer:
    mode: str = "whitespace"
    lowercase: bool = False

    def __post_init__(self):
        if self.mode not in TOKENIZER_MODES:
            raise ValueError(f"unknown tokenizer mode {self.mode!r}")

    def __call__(self, text: str) -> list[str]:
        return split_tokens(text, self.mode, self.lowercase)


def tokenize(text: str, vocab: Vocabulary, mode: str = "whitespace", lowercase: bool = False) -> Sentence:
    """Tokenize ``text`` and map it through ``vocab``."""
    return vocab.encode(split_tokens(text, mode, lowercase))


def _read_lines(path: Path) -> list[str]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror or exc}") from exc
    raw = data.split(b"\n")
    if raw and raw[-1] == b"":
        raw.pop()
    lines = []
    for lineno, chunk in enumerate(raw, start=1):
        try:
            lines.append(chunk.decode("utf-8").rstrip("\r"))
        except UnicodeDecodeError as exc:
            raise IngestionError(f"{path}:{lineno}: invalid UTF-8 ({exc.reason})") from exc
    return lines


@dataclass
class MemoryBuilder:
    """Accumulates translation units and their vocabularies before freezing."""

    tokenizer: Tokenizer = field(default_factory=Tokenizer)
    source_vocab: Vocabulary = field(default_factory=Vocabulary)
    target_vocab: Vocabulary = field(default_factory=Vocabulary)
    units: list[TranslationUnit] = field(default_factory=list)
    skipped: int = 0

    def add(self, source: str, target: str, domain: str) -> TranslationUnit | None:
        src_toks = self.tokenizer(source)
        tgt_toks = self.tokenizer(target)
        if not src_toks or not tgt_toks:
            self.skipped += 1
            return None
        unit = TranslationUnit(
            uid=len(self.units),
            source=self.source_vocab.encode(src_toks, count_segment=True),
            target=self.target_vocab.encode(tgt_toks, count_segment=True),
            domain=domain,
        )
        self.units.append(unit)
        return unit

    def add_pairs(self, pairs: Iterable[tuple[str, str]], domain: str) -> LoadResult:
        before = self.skipped
        added = [u for u in (self.add(s, t, domain) for s, t in pairs) if u is not None]
        return LoadResult(added, self.skipped - before)

    def build(self):
        from .memory import TranslationMemory

        return TranslationMemory.from_units(
            self.units, self.source_vocab.freeze(), self.target_vocab.freeze(), self.tokenizer
        )


def load_corpus(
    source_path: str | Path,
    target_path: str | Path,
    domain: str,
    builder: MemoryBuilder | None = None,
) -> LoadResult:
    """Read a pair of line-aligned files into translation units.

    Pairs where either side tokenizes to nothing are skipped and counted.
    """
    builder = builder if builder is not None else MemoryBuilder()
    src = _read_lines(Path(source_path))
    tgt = _read_lines(Path(target_path))
    if len(src) != len(tgt):
        raise AlignmentError(
            f"line count mismatch: {source_path} has {len(src)} lines, {target_path} has {len(tgt)}"
        )
    result = builder.add_pairs(zip(src, tgt), domain)
    if result.skipped:
        log.warning("%s: skipped %d pair(s) with an empty side", source_path, result.skipped)
    return result


def load_tsv(path: str | Path, domain: str, builder: MemoryBuilder | None = None) -> LoadResult:
    """Read ``source<TAB>target`` lines."""
    builder = builder if builder is not None else MemoryBuilder()
    pairs = []
    for lineno, line in enumerate(_read_lines(Path(path)), start=1):
        cols = line.split("\t")
        if len(cols) != 2:
            raise IngestionError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
        pairs.append((cols[0], cols[1]))
    result = builder.add_pairs(pairs, domain)
    if result.skipped:
        log.warning("%s: skipped %d pair(s) with an empty side", path, result.skipped)
    return result


def iter_lines(path: str | Path) -> Iterator[str]:
    yield from _read_lines(Path(path))
