"""Command-line interface: build, retrieve, metrics, prompts, density, bench."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .density import density
from .edit import LCS, LED, EditCosts
from .index.store import IndexBundle, IndexFormatError, load_index, save_index
from .metrics import Variant, format_table, quality_report
from .pipeline import (TSV_HEADER, BM25Filter, BM25Ranker, ConfigError, DomainPolicy, EditRanker,
                       NGMFilter, RetrievalConfig, Retriever, format_record, format_tsv_rows)
from .prompts import build_prompt
from .text import IngestionError, MemoryBuilder, Tokenizer, iter_lines, load_corpus, load_tsv, split_tokens

log = logging.getLogger("tmr")

EXIT_INPUT = 2
EXIT_FORMAT = 3


class UsageError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("TMR_THREADS")
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TMR_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"TMR_THREADS must be a positive integer, got {raw!r}")
    return n


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="\n")


# --- build ------------------------------------------------------------------

def cmd_build(args) -> int:
    builder = MemoryBuilder(tokenizer=Tokenizer(args.tokenizer, args.lowercase))
    if not args.corpus and not args.tsv:
        raise UsageError("give at least one --corpus SRC TGT DOMAIN or --tsv FILE DOMAIN")
    skipped = 0
    for src, tgt, domain in args.corpus or []:
        skipped += load_corpus(src, tgt, domain, builder).skipped
    for path, domain in args.tsv or []:
        skipped += load_tsv(path, domain, builder).skipped
    memory = builder.build()
    bundle = IndexBundle.build(memory, args.prune)
    save_index(bundle, args.output)
    stats = memory.stats()
    stats["skipped"] = skipped
    stats["pruned_terms"] = int(bundle.inverted.pruned.sum())
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


# --- retrieve ---------------------------------------------------------------

def _ranker(args):
    if args.costs:
        try:
            d, a, r = (s.strip() for s in args.costs.split(","))
            return EditRanker(EditCosts(d, a, r))
        except ValueError as exc:
            raise UsageError(f"--costs expects d,a,r: {exc}")
    return {
        "led": lambda: EditRanker(LED),
        "lcs": lambda: EditRanker(LCS),
        "dlcs": lambda: EditRanker(EditCosts.delta_lcs(args.delta)),
        "bm25": BM25Ranker,
    }[args.ranker]()


def config_from_args(args) -> RetrievalConfig:
    filt = {"none": None, "ngm": NGMFilter(args.tau, args.min_length), "bm25": BM25Filter(args.limit)}[args.filter]
    return RetrievalConfig(domain_policy=DomainPolicy(args.policy), filter=filt, ranker=_ranker(args),
                           contrast=args.contrast, k=args.k, exclude_self=args.self_queries)


def _read_queries(path: str, default_domain: str | None) -> list[tuple[str, str | None]]:
    out = []
    for line in iter_lines(path):
        text, sep, dom = line.partition("\t")
        out.append((text, dom if sep else default_domain))
    return out


def cmd_retrieve(args) -> int:
    config = config_from_args(args)
    bundle = load_index(args.index)
    retriever = Retriever.from_bundle(bundle)
    memory = bundle.memory
    if args.self_queries:
        jobs = [(memory.source_text(u), memory.domain(u), memory.source(u), u) for u in range(len(memory))]
    else:
        if not args.queries:
            raise UsageError("--queries is required unless --self-queries is given")
        jobs = [(text, dom, memory.encode_query(text), None) for text, dom in _read_queries(args.queries, args.query_domain)]
    # validate domains up front so errors surface before any output
    for _, dom, _, _ in jobs:
        retriever.universe(config.domain_policy, dom)

    def run(job):
        text, dom, toks, uid = job
        timings: dict[str, float] = {}
        return retriever.retrieve(toks, config, dom, uid, timings), timings

    threads = min(_threads(), max(1, len(jobs)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    out = _open_out(args.output)
    try:
        if args.format == "tsv":
            out.write(TSV_HEADER + "\n")
        for i, ((text, dom, _, _), (res, _)) in enumerate(zip(jobs, results)):
            if args.format == "jsonl":
                out.write(format_record(text, dom, res, memory) + "\n")
            elif args.format == "tsv":
                for row in format_tsv_rows(i, res, memory):
                    out.write(row + "\n")
            else:
                examples = [(memory.source_text(c.uid), memory.target_text(c.uid)) for c in res.matches]
                prompt = build_prompt(text, examples, args.k, args.src_lang, args.tgt_lang)
                out.write(json.dumps({"query": text, "prompt": prompt.text, "shots": prompt.shots,
                                      "complete": prompt.complete}, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.timing:
        stages = ("domain", "filter", "rank", "select")
        n = max(1, len(results))
        totals = {s: sum(t.get(s, 0.0) for _, t in results) for s in stages}
        print("timing (mean us/query): " + " ".join(f"{s}={totals[s] / n:.1f}" for s in stages),
              file=sys.stderr)
    return 0


# --- metrics ----------------------------------------------------------------

def _read_matches(path: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(iter_lines(path), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}:{lineno}: invalid JSON ({exc.msg})")
    return records


def cmd_metrics(args) -> int:
    records = _read_matches(args.matches)
    if args.queries:
        queries = [q for q, _ in _read_queries(args.queries, None)]
        if len(queries) != len(records):
            raise UsageError(f"{len(records)} match records but {len(queries)} queries")
        for i, (q, rec) in enumerate(zip(queries, records), start=1):
            if rec.get("query") != q:
                raise UsageError(f"record {i}: query does not match line {i} of {args.queries}")
    tok = lambda s: split_tokens(s)  # noqa: E731
    batch = [(tok(r["query"]), [tok(m["source"]) for m in r.get("matches", [])], r.get("domain"))
             for r in records]
    variants = [Variant.BOW, Variant.MODIFIED] if args.variant == "both" else [Variant(args.variant)]
    reports = {v.value: quality_report(batch, v) for v in variants}
    if args.format == "json":
        print(json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2, sort_keys=True))
    else:
        for name, rep in reports.items():
            cols = {dom: vals for dom, vals in rep.per_domain.items()}
            cols["avg"] = {"coverage": rep.coverage, "relevance": rep.relevance, "length": rep.mean_example_length}
            print(f"# {name} (n_queries={rep.n_queries})")
            print(format_table(cols))
    return 0


# --- prompts ----------------------------------------------------------------

def cmd_prompts(args) -> int:
    out = _open_out(args.output)
    try:
        for rec in _read_matches(args.matches):
            examples = [(m["source"], m["target"]) for m in rec.get("matches", [])]
            prompt = build_prompt(rec["query"], examples, args.shots, args.src_lang, args.tgt_lang)
            if args.format == "text":
                mark = "" if prompt.complete else f"# incomplete: {prompt.shots}/{prompt.requested} examples\n"
                out.write(mark + prompt.text + "\n\n")
            else:
                out.write(json.dumps({"query": rec["query"], "prompt": prompt.text, "shots": prompt.shots,
                                      "complete": prompt.complete}, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# --- density ----------------------------------------------------------------

def cmd_density(args) -> int:
    if args.index:
        corpus = load_index(args.index).memory
    elif args.source:
        builder = MemoryBuilder(tokenizer=Tokenizer(args.tokenizer, args.lowercase))
        corpus = [s for s in (builder.source_vocab.encode(builder.tokenizer(line)) for line in iter_lines(args.source)) if s]
    else:
        raise UsageError("give --index or --source")
    res = density(corpus, args.threshold, args.mode, args.min_length)
    print(f"size       {res.size}")
    print(f"ncc        {res.ncc}")
    print(f"density %  {100 * res.density:.2f}")
    print(f"threshold  {res.threshold}")
    print(f"mode       {res.mode}{' (approximate)' if res.approximate else ''}")
    return 0


# --- bench ------------------------------------------------------------------

def cmd_bench(args) -> int:
    from .bench import load_experiment, run_experiment

    try:
        exp = load_experiment(args.config)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(str(exc))
    comparison, timing = run_experiment(exp)
    print(comparison.table())
    if timing is not None:
        print()
        print(timing.table())
    if args.json:
        payload = {"comparison": json.loads(comparison.to_json())}
        if timing is not None:
            payload["timing"] = json.loads(timing.to_json())
        Path(args.json).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmr", description="Translation-memory fuzzy-match retrieval.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="index parallel corpora")
    b.add_argument("--corpus", nargs=3, action="append", metavar=("SRC", "TGT", "DOMAIN"),
                   help="line-aligned source/target files and their domain label (repeatable)")
    b.add_argument("--tsv", nargs=2, action="append", metavar=("FILE", "DOMAIN"),
                   help="source<TAB>target file and its domain label (repeatable)")
    b.add_argument("--tokenizer", choices=["whitespace", "punct"], default="whitespace")
    b.add_argument("--lowercase", action="store_true")
    b.add_argument("-p", "--prune", type=float, default=2.0,
                   help="prune terms found in more than this percent of segments (default: 2)")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("retrieve", help="retrieve examples for queries")
    r.add_argument("--index", required=True)
    r.add_argument("--queries", help="one query per line, optionally followed by TAB and a domain label")
    r.add_argument("--self-queries", action="store_true",
                   help="query with every memory source, excluding the unit itself")
    r.add_argument("--query-domain", help="domain label for queries without one")
    r.add_argument("--policy", choices=["in", "all", "out"], default="all")
    r.add_argument("--filter", choices=["none", "ngm", "bm25"], default="ngm")
    r.add_argument("--tau", type=float, default=0.3, help="NGM relative threshold (default: 0.3)")
    r.add_argument("--min-length", type=int, default=3, help="NGM absolute n-gram length (default: 3)")
    r.add_argument("--limit", type=int, default=100, help="BM25 candidate cap L (default: 100)")
    r.add_argument("--ranker", choices=["led", "lcs", "dlcs", "bm25"], default="led")
    r.add_argument("--delta", default="0.1", help="deletion cost for dlcs (default: 0.1)")
    r.add_argument("--costs", help="explicit edit costs d,a,r (overrides --ranker)")
    r.add_argument("--contrast", type=float, nargs="?", const=0.3, default=None,
                   help="contrastive selection with this alpha (0.3 if given without value)")
    r.add_argument("-k", type=int, default=3)
    r.add_argument("--format", choices=["jsonl", "tsv", "prompts"], default="jsonl")
    r.add_argument("--src-lang", default="src")
    r.add_argument("--tgt-lang", default="trg")
    r.add_argument("-o", "--output")
    r.add_argument("--timing", action="store_true", help="print per-stage timings to stderr")
    r.set_defaults(func=cmd_retrieve)

    m = sub.add_parser("metrics", help="coverage / relevance / length of retrieved matches")
    m.add_argument("--matches", required=True)
    m.add_argument("--queries", help="query file to check the matches against")
    m.add_argument("--variant", choices=["bow", "modified", "both"], default="both")
    m.add_argument("--format", choices=["table", "json"], default="table")
    m.set_defaults(func=cmd_metrics)

    pr = sub.add_parser("prompts", help="few-shot prompts from retrieved matches")
    pr.add_argument("--matches", required=True)
    pr.add_argument("--shots", type=int, default=3)
    pr.add_argument("--src-lang", default="src")
    pr.add_argument("--tgt-lang", default="trg")
    pr.add_argument("--format", choices=["jsonl", "text"], default="jsonl")
    pr.add_argument("-o", "--output")
    pr.set_defaults(func=cmd_prompts)

    d = sub.add_parser("density", help="corpus density from the LED similarity graph")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--index")
    src.add_argument("--source", help="plain text file, one sentence per line")
    d.add_argument("--tokenizer", choices=["whitespace", "punct"], default="whitespace")
    d.add_argument("--lowercase", action="store_true")
    d.add_argument("--threshold", type=float, default=0.4)
    d.add_argument("--mode", choices=["auto", "exact", "ngm"], default="auto")
    d.add_argument("--min-length", type=int, default=3)
    d.set_defaults(func=cmd_density)

    be = sub.add_parser("bench", help="run a synthetic experiment from a key=value file")
    be.add_argument("config")
    be.add_argument("--json", help="also write results as JSON here")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except IndexFormatError as exc:
        print(f"tmr: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (IngestionError, ConfigError, UsageError, OSError) as exc:
        print(f"tmr: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"tmr: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
