"""Versioned binary container for a translation memory and its indexes.

Layout::

    b"TMRINDX"  version:u8  header_len:u64le  header(JSON, utf-8)  array bytes...

The JSON header holds vocabularies, domains and build parameters plus one
``{name, dtype, shape, offset, nbytes}`` descriptor per array. Everything is
written in a fixed order so identical inputs give identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..memory import TranslationMemory
from ..text import Tokenizer, Vocabulary
from .inverted import InvertedIndex
from .suffix_array import SuffixArrayIndex

MAGIC = b"TMRINDX"
FORMAT_VERSION = 1


class IndexFormatError(Exception):
    """The file is not an index container or is corrupt."""


class IndexVersionError(IndexFormatError):
    """The container was written by an incompatible format version."""


@dataclass
class IndexBundle:
    memory: TranslationMemory
    suffix_array: SuffixArrayIndex
    inverted: InvertedIndex

    @classmethod
    def build(cls, memory: TranslationMemory, p: float = 2.0) -> IndexBundle:
        return cls(memory, SuffixArrayIndex.from_memory(memory), InvertedIndex.from_memory(memory, p))


def _arrays(bundle: IndexBundle) -> list[tuple[str, np.ndarray]]:
    m, sa, inv = bundle.memory, bundle.suffix_array, bundle.inverted
    return [
        ("src_tokens", m.src_tokens),
        ("src_offsets", m.src_offsets),
        ("tgt_tokens", m.tgt_tokens),
        ("tgt_offsets", m.tgt_offsets),
        ("domain_ids", m.domain_ids),
        ("src_freq", m.source_vocab.segment_frequencies),
        ("tgt_freq", m.target_vocab.segment_frequencies),
        ("sa_text", sa.text),
        ("sa", sa.sa),
        ("sa_position_uid", sa.position_uid),
        ("inv_term_ptr", inv.term_ptr),
        ("inv_post_uid", inv.post_uid),
        ("inv_post_tf", inv.post_tf),
        ("inv_df", inv.df),
        ("inv_pruned", inv.pruned),
    ]


def save_index(bundle: IndexBundle, path: str | Path) -> None:
    m = bundle.memory
    descs, blobs, offset = [], [], 0
    for name, arr in _arrays(bundle):
        arr = np.ascontiguousarray(arr)
        data = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        descs.append({"name": name, "dtype": arr.dtype.newbyteorder("<").str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = {
        "params": {
            "p": bundle.inverted.p,
            "k1": bundle.inverted.k1,
            "b": bundle.inverted.b,
            "tokenizer": m.tokenizer.mode,
            "lowercase": m.tokenizer.lowercase,
        },
        "domains": m.domains,
        "source_terms": m.source_vocab.terms,
        "target_terms": m.target_vocab.terms,
        "arrays": descs,
    }
    hbytes = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BQ", FORMAT_VERSION, len(hbytes)))
        fh.write(hbytes)
        for blob in blobs:
            fh.write(blob)


def load_index(path: str | Path) -> IndexBundle:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 9 or not data.startswith(MAGIC):
        raise IndexFormatError(f"{path}: not a tmr index file")
    version, hlen = struct.unpack_from("<BQ", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"{path}: index format version {version}, expected {FORMAT_VERSION}")
    start = len(MAGIC) + 9
    try:
        header = json.loads(data[start:start + hlen].decode("utf-8"))
        base = start + hlen
        arrays = {}
        for d in header["arrays"]:
            lo = base + d["offset"]
            buf = data[lo:lo + d["nbytes"]]
            if len(buf) != d["nbytes"]:
                raise IndexFormatError(f"{path}: truncated array {d['name']}")
            arrays[d["name"]] = np.frombuffer(buf, dtype=np.dtype(d["dtype"])).reshape(d["shape"])
    except (ValueError, KeyError) as exc:
        raise IndexFormatError(f"{path}: corrupt header ({exc})") from exc
    params = header["params"]
    src_vocab = Vocabulary(header["source_terms"], arrays["src_freq"].tolist())
    tgt_vocab = Vocabulary(header["target_terms"], arrays["tgt_freq"].tolist())
    memory = TranslationMemory(
        src_vocab, tgt_vocab,
        arrays["src_tokens"], arrays["src_offsets"], arrays["tgt_tokens"], arrays["tgt_offsets"],
        arrays["domain_ids"], header["domains"],
        Tokenizer(params["tokenizer"], params["lowercase"]),
    )
    n = len(memory)
    src_vocab.n_segments = tgt_vocab.n_segments = n
    sa = SuffixArrayIndex(text=arrays["sa_text"], sa=arrays["sa"],
                          position_uid=arrays["sa_position_uid"], n_sentences=n)
    inv = InvertedIndex(term_ptr=arrays["inv_term_ptr"], post_uid=arrays["inv_post_uid"],
                        post_tf=arrays["inv_post_tf"], df=arrays["inv_df"],
                        doc_len=memory.source_lengths, pruned=arrays["inv_pruned"].astype(bool),
                        p=params["p"], k1=params["k1"], b=params["b"])
    return IndexBundle(memory, sa, inv)
