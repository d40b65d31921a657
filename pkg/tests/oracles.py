"""Independent reference implementations used by the tests."""

import math
from fractions import Fraction
from itertools import combinations

from tmr.edit import EditCosts


def script_costs(example, query, costs: EditCosts):
    """Yield ``(cost, copies, inserts)`` for every monotone alignment of example onto query.

    Aligned pairs are copies (equal tokens) or replacements; unaligned example
    tokens are deleted and unaligned query tokens inserted. Every edit script
    is dominated by one of these alignments.
    """
    n, m = len(example), len(query)
    d, a, r = costs.delete, costs.insert, costs.replace
    for k in range(min(n, m) + 1):
        for xs in combinations(range(n), k):
            for ys in combinations(range(m), k):
                copies = sum(example[i] == query[j] for i, j in zip(xs, ys))
                yield r * (k - copies) + d * (n - k) + a * (m - k), copies, m - k


def brute_edit(example, query, costs: EditCosts):
    """``(minimal cost, max copies among optimal scripts)`` by enumeration."""
    best, copies = None, -1
    for cost, c, _ in script_costs(example, query, costs):
        if best is None or cost < best or (cost == best and c > copies):
            best, copies = cost, c
    return Fraction(best), copies


def brute_lcs(a, b):
    for k in range(min(len(a), len(b)), 0, -1):
        subs = set(combinations(a, k))
        if any(c in subs for c in combinations(b, k)):
            return k
    return 0


def ngrams(seq):
    return {tuple(seq[i:j]) for i in range(len(seq)) for j in range(i + 1, len(seq) + 1)}


def brute_common_ngrams(query, sentences, unk=0):
    """uid -> longest shared contiguous n-gram length (UNK never matches)."""
    q = {g for g in ngrams(query) if unk not in g}
    out = {}
    for uid, s in enumerate(sentences):
        shared = q & ngrams(s)
        if shared:
            out[uid] = max(len(g) for g in shared)
    return out


def naive_bm25(sentences, query, p=2.0, k1=1.2, b=0.75):
    """BM25 over documents containing an unpruned query term, terms summed in ascending id."""
    n = len(sentences)
    df = {}
    for s in sentences:
        for t in set(s):
            df[t] = df.get(t, 0) + 1
    pruned = {t for t, c in df.items() if Fraction(c, n) > Fraction(repr(float(p))) / 100}
    terms = sorted(t for t in set(query) if t in df and t not in pruned and t != 0)
    avgdl = float(sum(len(s) for s in sentences)) / n
    out = {}
    for uid, s in enumerate(sentences):
        if not any(t in s for t in terms):
            continue
        norm = k1 * (1.0 - b + b * float(len(s)) / avgdl)
        score = 0.0
        for t in terms:
            tf = float(s.count(t))
            if tf:
                idf = math.log((n - df[t] + 0.5) / (df[t] + 0.5) + 1.0)
                score += idf * (tf * (k1 + 1.0) / (tf + norm))
        out[uid] = score
    return out
