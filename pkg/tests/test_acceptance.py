"""Acceptance checks, one test per criterion; a PASS/FAIL summary is printed at the end of the run."""

import random
import time
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

from conftest import build_memory
from fixtures import long_cover_fixture
from oracles import brute_lcs, naive_bm25, ngrams
from tmr.bench import SyntheticSpec, compare_strategies, generate_corpus, generate_queries, parse_strategy, timing_sweep
from tmr.bleu import copy_rate, sentence_bleu
from tmr.cli import main
from tmr.density import density
from tmr.edit import LCS, LED, EditCosts, PaddedBatch, edit_distance, pack
from tmr.index import InvertedIndex, SuffixArrayIndex
from tmr.metrics import coverage, relevance
from tmr.pipeline import Candidate, NGMFilter, contrastive_select, ngm_filter, top_k

DLCS1 = EditCosts.delta_lcs(Fraction(1, 10))
DLCS3 = EditCosts.delta_lcs(Fraction(3, 10))
PRESETS = [LED, LCS, DLCS1, DLCS3]


# --- 1 ------------------------------------------------------------------------

ALPHA, MAXLEN = 4, 6
TENTHS = [tuple(int(c * 10) for c in (k.delete, k.insert, k.replace)) for k in PRESETS]


def _canonical(seq):
    """Relabel symbols by first occurrence; returns the relabeled sequence and the symbol map."""
    sig = {}
    for s in seq:
        sig.setdefault(s, len(sig) + 1)
    for s in range(1, ALPHA + 1):
        sig.setdefault(s, len(sig) + 1)
    return tuple(sig[s] for s in seq), sig


def _alignment_tables(canon):
    """Minimal script cost (in tenths) of every canonical example into every query, per preset.

    A script is a monotone alignment: aligned pairs are copies or replacements,
    the rest deletions and insertions. For each alignment size k the most
    copies over all alignments of that size is found by enumeration, and the
    cost is minimized over k.
    """
    ys = {m: np.array(list(product(range(1, ALPHA + 1), repeat=m)), dtype=np.int64).reshape(ALPHA ** m, m)
          for m in range(MAXLEN + 1)}
    out = {m: np.zeros((len(canon), ALPHA ** m, len(PRESETS)), dtype=np.int64) for m in ys}
    for n in range(MAXLEN + 1):
        for m in range(MAXLEN + 1):
            sizes, rows = [], []
            for k in range(min(n, m) + 1):
                for xs in combinations(range(n), k):
                    for js in combinations(range(m), k):
                        row = np.zeros(n * m)
                        row[[i * m + j for i, j in zip(xs, js)]] = 1
                        sizes.append(k)
                        rows.append(row)
            sizes = np.array(sizes)
            align = np.array(rows).reshape(len(rows), n * m)
            kk = np.arange(min(n, m) + 1)[None, :]
            for ci, c in enumerate(canon):
                if len(c) != n:
                    continue
                eq = (np.array(c)[None, :, None] == ys[m][:, None, :]).reshape(ALPHA ** m, n * m)
                if n * m:
                    copies = (eq.astype(np.float64) @ align.T).astype(np.int64)
                else:
                    copies = np.zeros((ALPHA ** m, len(sizes)), dtype=np.int64)
                best = np.stack([copies[:, sizes == k].max(axis=1) for k in range(min(n, m) + 1)], axis=1)
                for pi, (d, a, r) in enumerate(TENTHS):
                    out[m][ci, :, pi] = (r * (kk - best) + d * (n - kk) + a * (m - kk)).min(axis=1)
    return out


def test_c01_edit_distance_oracle():
    """C1 exhaustive edit-distance oracle (len <= 6, 4 symbols, 4 cost presets, exact, < 2 min)"""
    t0 = time.perf_counter()
    seqs = [s for n in range(MAXLEN + 1) for s in product(range(1, ALPHA + 1), repeat=n)]
    info = [_canonical(s) for s in seqs]
    canon = sorted({c for c, _ in info})
    cid = np.array([canon.index(c) for c, _ in info])
    sig = np.array([[0] + [mp[s] for s in range(1, ALPHA + 1)] for _, mp in info], dtype=np.int64)
    tables = _alignment_tables(canon)
    batch = PaddedBatch.build(*pack(seqs), np.arange(len(seqs)))
    mismatches = 0
    for y in seqs:
        m = len(y)
        place = ALPHA ** np.arange(m - 1, -1, -1)
        # relabel the query with each example's symbol map, then look up the canonical table
        yidx = ((sig[:, list(y)] - 1) * place).sum(axis=1) if m else np.zeros(len(seqs), dtype=np.int64)
        want = tables[m][cid, yidx]
        for pi, costs in enumerate(PRESETS):
            got = batch.edit_cost(y, costs) * (10 // costs.scale)
            mismatches += int(np.count_nonzero(got != want[:, pi]))
    # the scalar DP against the same oracle on a sample
    rng = random.Random(0)
    for _ in range(3000):
        x, y = rng.choice(seqs), rng.choice(seqs)
        costs = rng.choice(PRESETS)
        c, mp = _canonical(x)
        yi = sum((mp[s] - 1) * ALPHA ** (len(y) - 1 - j) for j, s in enumerate(y))
        want = Fraction(int(tables[len(y)][canon.index(c), yi, PRESETS.index(costs)]), 10)
        mismatches += edit_distance(x, y, costs).delta != want
    elapsed = time.perf_counter() - t0
    assert mismatches == 0, f"{mismatches} pairs differ from the enumeration oracle"
    assert elapsed < 120, f"took {elapsed:.1f}s"


# --- 2 ------------------------------------------------------------------------

def _closed_form_delta(x, q, costs, ecs, lcs):
    d, a, r = costs.delete, costs.insert, costs.replace
    n, m = len(x), len(q)
    if a + d <= r:
        return a * (m - lcs) + d * (n - lcs)
    if m <= n:
        return r * (m - ecs) + d * (n - m)
    return r * (n - ecs) + a * (m - n)


def _closed_form_norm(n, m, costs):
    d, a, r = costs.delete, costs.insert, costs.replace
    if a + d <= r:
        return a * m + d * n
    if m <= n:
        return (r - d) * m + d * n
    return (r - a) * n + a * m


def test_c02_closed_forms():
    """C2 closed forms for cost and normalizer on 1000 random pairs; LCS and LED reductions"""
    rng = random.Random(2024)
    delta_bad, norm_bad, examples = 0, 0, []
    for i in range(1000):
        x = [rng.randint(1, 4) for _ in range(rng.randint(0, 8))]
        q = [rng.randint(1, 4) for _ in range(rng.randint(1, 8))]
        costs = PRESETS[i % 4]
        res = edit_distance(x, q, costs)
        lcs = brute_lcs(x, q)
        if res.delta != _closed_form_delta(x, q, costs, res.ecs_length, lcs):
            delta_bad += 1
            if len(examples) < 3:
                examples.append((x, q, str(costs), res.delta, res.ecs_length))
        if (x or q) and res.normalizer != _closed_form_norm(len(x), len(q), costs):
            norm_bad += 1
        assert edit_distance(x, q, LCS).similarity == lcs / len(q)
        led = edit_distance(x, q, LED)
        assert led.normalizer == max(len(x), len(q))
        assert led.similarity == float(1 - led.delta / max(len(x), len(q)))
    assert norm_bad == 0, f"normalizer differs from its branch formula on {norm_bad} pairs"
    assert delta_bad == 0, (f"cost differs from its branch formula on {delta_bad}/1000 pairs, e.g. "
                            f"(example, query, costs, delta, ecs) = {examples}")


# --- 3 ------------------------------------------------------------------------

def test_c03_index_oracles():
    """C3 suffix-array n-grams and inverted-index BM25 equal brute force on 50 corpora x 50 queries"""
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(20, 1000)
        vocab = rng.randint(5, 60)
        sents = [[rng.randint(1, vocab) for _ in range(rng.randint(1, 14))] for _ in range(n)]
        tokens, offsets = pack(sents)
        sa = SuffixArrayIndex.build(tokens, offsets)
        p = rng.choice([2.0, 10.0, 100.0])
        inv = InvertedIndex.build(tokens, offsets, vocab + 1, p)
        grams = [ngrams(s) for s in sents]
        for _ in range(50):
            if rng.random() < 0.5:
                base = list(rng.choice(sents))
                q = [t if rng.random() > 0.3 else rng.randint(0, vocab + 3) for t in base]
            else:
                q = [rng.randint(0, vocab + 3) for _ in range(rng.randint(1, 14))]
            qg = {g for g in ngrams(q) if 0 not in g}
            want = {}
            for uid, g in enumerate(grams):
                shared = qg & g
                if shared:
                    want[uid] = max(map(len, shared))
            assert sa.longest_common_ngram(q) == want
            naive = naive_bm25(sents, q, p)
            assert dict(inv.candidates(q, limit=n + 1)) == naive
            assert inv.candidates(q, 100) == sorted(naive.items(), key=lambda kv: (-kv[1], kv[0]))[:100]


# --- 4 ------------------------------------------------------------------------

def _write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return str(path)


def _synthetic_files(tmp_path, size=1500, n_queries=120, seed=11):
    mem = generate_corpus(SyntheticSpec(size=size, seed=seed, repetition=0.6, vocab_size=800, domains=2))
    src = _write(tmp_path / "src.txt", [mem.source_text(u) for u in range(len(mem))])
    tgt = _write(tmp_path / "tgt.txt", [mem.target_text(u) for u in range(len(mem))])
    queries = generate_queries(mem, n_queries, seed=seed)
    q = _write(tmp_path / "q.txt", [" ".join(mem.source_vocab.decode(x.tokens)) + "\t" + x.domain for x in queries])
    return mem, src, tgt, q


def test_c04_contrastive_selection(tmp_path):
    """C4 contrast factor 0 reproduces top-k byte-for-byte; duplicate fixture selects [c1, c3]"""
    mem, src, tgt, q = _synthetic_files(tmp_path)
    idx = str(tmp_path / "idx.bin")
    assert main(["build", "--corpus", src, tgt, "all", "-o", idx]) == 0
    for extra in ([], ["--filter", "none"], ["--ranker", "dlcs"], ["--filter", "bm25", "--ranker", "bm25"]):
        plain, zero = tmp_path / "plain.jsonl", tmp_path / "zero.jsonl"
        assert main(["retrieve", "--index", idx, "--queries", q, *extra, "-o", str(plain)]) == 0
        assert main(["retrieve", "--index", idx, "--queries", q, *extra, "--contrast", "0", "-o", str(zero)]) == 0
        assert plain.read_bytes() == zero.read_bytes()

    dup = build_memory([("a b c", "x", "d"), ("a b c", "y", "d"), ("p q r", "z", "d")])
    ranked = [Candidate(0, 0.9, 0.9), Candidate(1, 0.9, 0.9), Candidate(2, 0.7, 0.7)]
    res = contrastive_select(ranked, 0.3, 2, dup)
    assert res.uids == [0, 2]
    assert contrastive_select(ranked, 0.0, 2, dup).matches == top_k(ranked, 2).matches


# --- 5 ------------------------------------------------------------------------

def test_c05_density():
    """C5 density endpoints (1.0, 0.0, 0.5) and exact vs prefiltered agreement on corpora <= 300"""
    clones = [[1, 2, 3, 4]] * 50
    dissimilar = [[3 * i + 1, 3 * i + 2, 3 * i + 3] for i in range(50)]
    one_edge = [[1, 2, 3], [1, 2, 4], [7, 8, 9]]
    assert density(clones).density == 1.0
    assert density(dissimilar).density == 0.0
    assert density(one_edge).density == 0.5

    corpora = [("clones", clones), ("dissimilar", dissimilar), ("one-edge", one_edge)]
    for seed in range(3):
        for rep in (0.0, 0.5, 1.0):
            for size in (60, 300):
                spec = SyntheticSpec(size=size, repetition=rep, mutation=0.2, seed=seed, vocab_size=2000)
                mem = generate_corpus(spec)
                corpora.append((f"synthetic seed={seed} rep={rep} n={size}",
                                [mem.source(u) for u in range(len(mem))]))
    disagree = []
    for name, corpus in corpora:
        exact, pref = density(corpus, mode="exact"), density(corpus, mode="ngm")
        assert pref.ncc >= exact.ncc
        if exact.density != pref.density:
            disagree.append(f"{name}: exact {exact.density:.4f} vs prefiltered {pref.density:.4f}")
    assert not disagree, f"{len(disagree)}/{len(corpora)} corpora disagree: {disagree[:4]}"


# --- 6 ------------------------------------------------------------------------

def test_c06_ngm_filter():
    """C6 NGM pass/fail arithmetic and survivor counts non-increasing in tau on synthetic corpora"""
    sa = SuffixArrayIndex.build(np.array([1, 2, 3, 50, 51], dtype=np.int64), np.array([0, 5]))
    assert ngm_filter(sa, [9, 1, 2, 3, 8], 0.3, 3).tolist() == [0]  # 3 >= 1.5 and 3 >= 3
    q20 = [1, 2, 3] + list(range(100, 117))
    assert ngm_filter(sa, q20, 0.3, 3).tolist() == []  # 3 < 6
    assert NGMFilter(0.3, 3).required_length(20) == 6

    taus = (0.2, 0.3, 0.4, 0.5)
    for seed in range(4):
        for rep, vocab in ((0.2, 5000), (0.6, 500), (0.9, 100)):
            mem = generate_corpus(SyntheticSpec(size=2000, seed=seed, repetition=rep, vocab_size=vocab))
            qs = generate_queries(mem, 60, seed=seed)
            cmp = compare_strategies(mem, qs, {"ngm": parse_strategy("ngm0.3/led")}, taus)
            for lo, hi in zip(taus, taus[1:]):
                assert all(a >= b for a, b in zip(cmp.survivors[lo], cmp.survivors[hi]))
                assert all(a >= b for a, b in zip(cmp.quartiles[lo], cmp.quartiles[hi]))


# --- 7 ------------------------------------------------------------------------

def test_c07_metrics():
    """C7 coverage/relevance hand fixtures, copy rate of an exact copy, BP never raises the score"""
    assert coverage(list("abcd"), [list("abx")], "bow") == 2 / 4
    assert coverage(list("abcd"), [list("abx")], "modified") == 2 / 4
    assert coverage(list("aab"), [["a"]], "bow") == 2 / 3
    assert coverage(list("aab"), [["a"]], "modified") == 1 / 3
    assert relevance(list("ab"), [list("ab"), list("xy")]) == 0.5
    for n in range(4, 12):
        ref = [f"w{i}" for i in range(n)]
        assert copy_rate(ref, [ref]) == 100.0
        assert copy_rate(ref, [list("xyz"), ref]) == 100.0
    rng = random.Random(7)
    for _ in range(10_000):
        h = [rng.choice("abcdefg") for _ in range(rng.randint(0, 15))]
        refs = [[rng.choice("abcdefg") for _ in range(rng.randint(1, 15))] for _ in range(rng.randint(1, 3))]
        no_bp = copy_rate(h, refs)
        with_bp = sentence_bleu(h, refs, brevity_penalty=True)
        assert 0.0 <= with_bp <= no_bp <= 100.0


# --- 8 ------------------------------------------------------------------------

def test_c08_coverage_ordering():
    """C8 on the long-covering-sentence fixture, delta-LCS(0.1) beats LED on coverage and length"""
    mem, qs = long_cover_fixture()
    cmp = compare_strategies(mem, qs, {"led": parse_strategy("none/led", k=1),
                                       "dlcs": parse_strategy("none/dlcs0.1", k=1)})
    led, dlcs = cmp.scores["led"], cmp.scores["dlcs"]
    assert dlcs["coverage"] > led["coverage"]
    assert dlcs["length"] > led["length"]


# --- 9 ------------------------------------------------------------------------

@pytest.mark.slow
def test_c09_complexity_bands():
    """C9 growth exponents over 10k/100k/1M sentences: NGM < 0.5, filter-free ED in [0.8, 1.2], < 30 min"""
    t0 = time.perf_counter()
    res = timing_sweep([10_000, 100_000, 1_000_000])
    elapsed = time.perf_counter() - t0
    print(res.table())
    assert res.exponents["ngm"] < 0.5, res.table()
    assert 0.8 <= res.exponents["ed_full"] <= 1.2, res.table()
    assert elapsed < 1800, f"benchmark took {elapsed:.0f}s"


# --- 10 -----------------------------------------------------------------------

def test_c10_determinism(tmp_path, monkeypatch):
    """C10 retrieve output is byte-identical across runs and TMR_THREADS in {1, 8}"""
    _, src, tgt, q = _synthetic_files(tmp_path)
    idx = str(tmp_path / "idx.bin")
    assert main(["build", "--corpus", src, tgt, "all", "-o", idx]) == 0
    flag_sets = [[], ["--filter", "none", "--ranker", "dlcs", "--contrast"], ["--filter", "bm25", "--ranker", "bm25"]]
    for flags in flag_sets:
        outputs = []
        for threads in ("1", "8", "1", "8"):
            monkeypatch.setenv("TMR_THREADS", threads)
            out = tmp_path / f"out{len(outputs)}.jsonl"
            assert main(["retrieve", "--index", idx, "--queries", q, *flags, "-o", str(out)]) == 0
            outputs.append(out.read_bytes())
        assert len(set(outputs)) == 1
        assert outputs[0].count(b"\n") == 120
