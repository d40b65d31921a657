"""Multi-reference sentence BLEU used as a copy-rate measure."""

from __future__ import annotations

import math
from collections import Counter
from typing import Hashable, Sequence

Tokens = Sequence[Hashable]

MAX_ORDER = 4


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(hypothesis: Tokens, references: Sequence[Tokens], brevity_penalty: bool = True,
                  max_order: int = MAX_ORDER) -> float:
    """Sentence BLEU on a 0-100 scale.

    N-gram counts are clipped by the maximum count over references. Orders
    with zero matches use exponential smoothing (the k-th such order gets
    ``1 / (2**k * total)``); orders the hypothesis is too short for are left
    out of the geometric mean. A hypothesis with no matching n-gram of any
    order scores 0. The brevity penalty uses the closest reference length.
    """
    if not references:
        raise ValueError("at least one reference is required")
    hyp_len = len(hypothesis)
    if hyp_len == 0:
        return 0.0
    stats = []
    for n in range(1, max_order + 1):
        hyp = _ngrams(hypothesis, n)
        total = sum(hyp.values())
        if total == 0:
            break
        best = Counter()
        for ref in references:
            best |= _ngrams(ref, n)
        stats.append((sum((hyp & best).values()), total))
    if not any(correct for correct, _ in stats):
        return 0.0
    log_sum = 0.0
    orders = 0
    smooth = 1.0
    for correct, total in stats:
        if correct == 0:
            smooth *= 2.0
            prec = 1.0 / (smooth * total)
        else:
            prec = correct / total
        log_sum += math.log(prec)
        orders += 1
    score = math.exp(log_sum / orders)
    if brevity_penalty:
        ref_len = min((abs(len(r) - hyp_len), len(r)) for r in references)[1]
        if hyp_len < ref_len:
            score *= math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * score


def copy_rate(hypothesis: Tokens, references: Sequence[Tokens], brevity_penalty: bool = False) -> float:
    """How much of the hypothesis is recopied from the example targets (BLEU without BP)."""
    return sentence_bleu(hypothesis, references, brevity_penalty=brevity_penalty)


def corpus_copy_rate(pairs: Sequence[tuple[Tokens, Sequence[Tokens]]]) -> float:
    """Mean sentence-level copy rate; pairs without references are skipped."""
    scores = [copy_rate(h, refs) for h, refs in pairs if refs]
    return sum(scores) / len(scores) if scores else 0.0
