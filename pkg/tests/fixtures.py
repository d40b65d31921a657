"""Hand-built corpora shared by unit and acceptance tests."""

from conftest import build_memory
from tmr.bench import Query


def long_cover_fixture(n_queries=5, filler=14):
    """Each query is fully contained in one long sentence padded with filler,
    and half-covered by a short sentence of the query's length."""
    rows, queries = [], []
    for i in range(n_queries):
        q = [f"q{i}_{j}" for j in range(6)]
        pad = [f"f{i}_{j}" for j in range(filler)]
        rows.append((" ".join(q + pad), "t", "d"))
        rows.append((" ".join(q[:3] + [f"s{i}_{j}" for j in range(3)]), "t", "d"))
        queries.append(q)
    memory = build_memory(rows)
    return memory, [Query(memory.encode_query(" ".join(q)), "d") for q in queries]


def duplicate_fixture():
    """A query with three copies of its best match and two distinct, weaker alternatives."""
    rows = [("a b c d e f p q r", "t", "d")] * 3 + [("x y z d e f", "t", "d"), ("a b c s t u", "t", "d")]
    memory = build_memory(rows)
    return memory, memory.encode_query("a b c d e f")
