"""Fuzzy-match retrieval of few-shot examples from a translation memory."""

from .bleu import copy_rate, corpus_copy_rate, sentence_bleu
from .density import DensityResult, density
from .edit import DELTA_LCS, LCS, LED, EditCosts, EditResult, edit_distance, led_similarity, similarity
from .index import IndexBundle, InvertedIndex, SuffixArrayIndex, load_index, save_index
from .memory import TranslationMemory
from .metrics import QualityReport, Variant, coverage, quality_report, relevance
from .pipeline import (BM25Filter, BM25Ranker, Candidate, ConfigError, DomainPolicy, EditRanker, NGMFilter,
                       RetrievalConfig, RetrievedSet, Retriever, retrieve)
from .prompts import Prompt, build_prompt
from .text import IngestionError, MemoryBuilder, Tokenizer, TranslationUnit, Vocabulary, load_corpus, load_tsv

__all__ = [
    "BM25Filter", "BM25Ranker", "Candidate", "ConfigError", "DELTA_LCS", "DensityResult", "DomainPolicy",
    "EditCosts", "EditRanker", "EditResult", "IndexBundle", "IngestionError", "InvertedIndex", "LCS", "LED",
    "MemoryBuilder", "NGMFilter", "Prompt", "QualityReport", "RetrievalConfig", "RetrievedSet", "Retriever",
    "SuffixArrayIndex", "Tokenizer", "TranslationMemory", "TranslationUnit", "Variant", "Vocabulary",
    "build_prompt", "copy_rate", "corpus_copy_rate", "coverage", "density", "edit_distance", "led_similarity",
    "load_corpus", "load_index", "load_tsv", "quality_report", "relevance", "retrieve", "save_index",
    "sentence_bleu", "similarity",
]
