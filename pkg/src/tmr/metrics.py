"""Intrinsic retrieval-quality measures: coverage, relevance and length."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Hashable, Sequence

Tokens = Sequence[Hashable]


class Variant(str, Enum):
    BOW = "bow"
    MODIFIED = "modified"
    # "alignment" (n-way alignment score) is deliberately not implemented


def coverage(query: Tokens, examples: Sequence[Tokens], variant: Variant | str = Variant.BOW) -> float:
    """Fraction of query token occurrences covered by the examples.

    ``bow``: an occurrence is covered if its term appears in any example.
    ``modified``: each example token occurrence covers at most one query
    occurrence (multiset intersection with the concatenated examples).
    """
    variant = Variant(variant)
    if not query:
        raise ValueError("coverage needs a non-empty query")
    if not examples:
        return 0.0
    if variant is Variant.BOW:
        vocab = set().union(*map(set, examples))
        return sum(1 for t in query if t in vocab) / len(query)
    pool = Counter()
    for ex in examples:
        pool.update(ex)
    return sum((Counter(query) & pool).values()) / len(query)


def example_relevance(query: Tokens, example: Tokens, variant: Variant | str = Variant.BOW) -> float:
    """Fraction of the example's token occurrences contributing to covering the query."""
    variant = Variant(variant)
    if not example:
        raise ValueError("relevance needs non-empty examples")
    if variant is Variant.BOW:
        qset = set(query)
        return sum(1 for t in example if t in qset) / len(example)
    return sum((Counter(example) & Counter(query)).values()) / len(example)


def relevance(query: Tokens, examples: Sequence[Tokens], variant: Variant | str = Variant.BOW) -> float:
    if not examples:
        return 0.0
    return sum(example_relevance(query, ex, variant) for ex in examples) / len(examples)


def mean_length(examples: Sequence[Tokens]) -> float:
    if not examples:
        return 0.0
    return sum(len(ex) for ex in examples) / len(examples)


@dataclass
class QueryQuality:
    domain: str | None
    coverage: float
    relevance: float
    n_examples: int
    total_length: int


@dataclass
class QualityReport:
    variant: str
    coverage: float
    relevance: float
    mean_example_length: float
    n_queries: int
    per_domain: dict[str, dict[str, float]] = field(default_factory=dict)
    per_query: list[QueryQuality] = field(default_factory=list)

    def to_dict(self, per_query: bool = False) -> dict:
        d = asdict(self)
        if not per_query:
            d.pop("per_query")
        return d


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def quality_report(batch: Sequence[tuple[Tokens, Sequence[Tokens], str | None]],
                   variant: Variant | str = Variant.BOW) -> QualityReport:
    """Aggregate metrics over ``(query, examples, domain)`` triples.

    Coverage and relevance are averaged per query, then per domain, and the
    report carries the macro-mean over domains. Length is the mean over all
    retrieved examples of the batch.
    """
    variant = Variant(variant)
    rows = []
    for query, examples, domain in batch:
        rows.append(QueryQuality(
            domain=domain,
            coverage=coverage(query, examples, variant) if query else 0.0,
            relevance=relevance(query, examples, variant),
            n_examples=len(examples),
            total_length=sum(len(e) for e in examples),
        ))
    groups: dict[str, list[QueryQuality]] = {}
    for r in rows:
        groups.setdefault(r.domain if r.domain is not None else "all", []).append(r)
    per_domain = {}
    for dom in sorted(groups):
        rs = groups[dom]
        n_ex = sum(r.n_examples for r in rs)
        per_domain[dom] = {
            "coverage": _mean([r.coverage for r in rs]),
            "relevance": _mean([r.relevance for r in rs]),
            "length": sum(r.total_length for r in rs) / n_ex if n_ex else 0.0,
            "n_queries": len(rs),
        }
    n_ex = sum(r.n_examples for r in rows)
    return QualityReport(
        variant=variant.value,
        coverage=_mean([d["coverage"] for d in per_domain.values()]),
        relevance=_mean([d["relevance"] for d in per_domain.values()]),
        mean_example_length=sum(r.total_length for r in rows) / n_ex if n_ex else 0.0,
        n_queries=len(rows),
        per_domain=per_domain,
        per_query=rows,
    )


def format_table(columns: dict[str, dict[str, float]], rows=("coverage", "relevance", "length")) -> str:
    """Aligned text table: one column per entry, coverage/relevance in percent."""
    names = list(columns)
    cells = [[""] + names]
    for row in rows:
        line = [row]
        for name in names:
            v = columns[name].get(row, 0.0)
            line.append(f"{100 * v:.1f}" if row in ("coverage", "relevance") else f"{v:.1f}")
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
    out = []
    for r in cells:
        out.append("  ".join(c.ljust(widths[0]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(r)))
    return "\n".join(out)
