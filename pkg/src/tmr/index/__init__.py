from .inverted import InvertedIndex, bm25_candidates, build_inverted_index
from .store import IndexBundle, IndexFormatError, IndexVersionError, load_index, save_index
from .suffix_array import SuffixArrayIndex, build_suffix_array, longest_common_ngram

__all__ = [
    "IndexBundle",
    "IndexFormatError",
    "IndexVersionError",
    "InvertedIndex",
    "SuffixArrayIndex",
    "bm25_candidates",
    "build_inverted_index",
    "build_suffix_array",
    "load_index",
    "longest_common_ngram",
    "save_index",
]
