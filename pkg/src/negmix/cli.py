"""Command line pipeline driver.

Subcommands cover the full path from data ingestion to metrics:

    ingest | mine | generate | mix | train | eval | audit | simulate
    | sweep | e2e

Options resolve as: explicit flag > config-file key > built-in default.
The config file is one flat JSON object with dotted keys, e.g.
{"train.lr": 0.05, "retriever.k1": 1.2}.  Every run logs line-oriented
key=value records to stderr and writes a manifest with content hashes of
its inputs and artifacts (no paths, no timestamps, so identical runs give
identical manifests).

Exit codes: 0 success, 1 usage/config, 2 data integrity, 3 generation
failure, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bm25 import build_index, mine_negatives
from .data import (Corpus, Judgments, QuerySet, load_corpus, load_instances,
                   load_queries, load_qrels, make_pairs, save_corpus,
                   save_instances, save_qrels, save_queries, split_query_ids,
                   synth_dataset, SynthParams, validate)
from .encoder import load_checkpoint, save_checkpoint
from .errors import (DomainError, GenerationError, IntegrityError,
                     NumericError, ParameterError, ParseError, SchemaError,
                     UsageError)
from .evaluation import build_audit_items, evaluate, similarity_audit
from .generation import (BUILTIN_POOLS, GenConfig, HttpChatClient,
                         PromptTemplate, dedup, generate_all, load_records,
                         mock_client, save_records, token_totals)
from .mixing import MixConfig, MixStrategy, mix
from .rank_analysis import (SimulationParams, simulate_comparison,
                            verify_identities)
from .text import tokenize
from .trainer import TrainConfig, train

logger = logging.getLogger("negmix")


def kv(event: str, **fields) -> str:
    parts = [f"event={event}"]
    for key, value in fields.items():
        text = str(value)
        if any(ch.isspace() for ch in text) or text == "":
            text = json.dumps(text)
        parts.append(f"{key}={text}")
    return " ".join(parts)


def log_event(event: str, **fields) -> None:
    logger.info(kv(event, **fields))


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract here is 1
    def error(self, message):
        raise UsageError(message)


class Settings:
    """Flat dotted-key config file; flags override, defaults fill in."""

    def __init__(self, config_path: str | None):
        self.values: dict = {}
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    obj = json.load(fh)
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise UsageError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise UsageError("config must be a JSON object")
            for key, value in obj.items():
                if isinstance(value, (dict, list)):
                    raise UsageError(
                        f"config key {key!r} must be a scalar (flat dotted "
                        f"keys only)")
            self.values = obj

    def get(self, key: str, flag_value, default):
        if flag_value is not None:
            return flag_value
        if key in self.values:
            return self.values[key]
        return default


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir: Path, command: str, config: dict,
                   inputs: dict[str, Path], artifacts: dict[str, Path],
                   extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "config": {k: config[k] for k in sorted(config)},
        "inputs": {name: _sha256_file(Path(p))
                   for name, p in sorted(inputs.items())},
        "artifacts": {name: _sha256_file(Path(p))
                      for name, p in sorted(artifacts.items())},
        "versions": {"negmix": __version__,
                     "python": platform.python_version(),
                     "numpy": np.__version__},
    }
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _load_triple(corpus_path, queries_path, qrels_path
                 ) -> tuple[Corpus, QuerySet, Judgments]:
    corpus = load_corpus(corpus_path)
    queries = load_queries(queries_path)
    judgments = load_qrels(qrels_path)
    validate(corpus, queries, judgments)
    return corpus, queries, judgments


def _read_id_file(path: str | None) -> list[str] | None:
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _restrict_queries(queries: QuerySet, ids: list[str] | None) -> QuerySet:
    if ids is None:
        return queries
    missing = [q for q in ids if q not in queries]
    if missing:
        raise IntegrityError(f"query id file references unknown ids: "
                             f"{', '.join(missing[:5])}")
    return {q: queries[q] for q in ids}


def _corpus_vocabulary(corpus: Corpus) -> list[str]:
    vocab: set[str] = set()
    for doc in corpus.values():
        vocab.update(tokenize(doc.single_text()))
    return sorted(vocab)


# --------------------------------------------------------------------------
# subcommands

def cmd_ingest(args, settings: Settings) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.synth:
        seed = int(settings.get("data.seed", args.seed, 0))
        params = SynthParams(
            topics=int(settings.get("data.topics", args.topics, 4)),
            docs_per_topic=int(settings.get("data.docs_per_topic",
                                            args.docs_per_topic, 50)),
            queries=int(settings.get("data.queries", args.n_queries, 60)),
            vocab=int(settings.get("data.vocab", args.vocab, 240)))
        corpus, queries, judgments = synth_dataset(seed, params)
        save_corpus(corpus, outdir / "corpus.jsonl")
        save_queries(queries, outdir / "queries.jsonl")
        save_qrels(judgments, outdir / "qrels.tsv")
        log_event("ingest", mode="synth", docs=len(corpus),
                  queries=len(queries), seed=seed)
        write_manifest(
            outdir, "ingest",
            {"data.seed": seed, "data.topics": params.topics,
             "data.docs_per_topic": params.docs_per_topic,
             "data.queries": params.queries, "data.vocab": params.vocab},
            {},
            {"corpus.jsonl": outdir / "corpus.jsonl",
             "queries.jsonl": outdir / "queries.jsonl",
             "qrels.tsv": outdir / "qrels.tsv"})
        return 0
    if not (args.corpus and args.queries and args.qrels):
        raise UsageError("ingest needs --corpus/--queries/--qrels or --synth")
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    n_relevant = sum(len(judgments.relevant(q)) for q in judgments.query_ids())
    log_event("ingest", mode="files", docs=len(corpus),
              queries=len(queries), relevant_rows=n_relevant)
    write_manifest(outdir, "ingest", {},
                   {"corpus.jsonl": Path(args.corpus),
                    "queries.jsonl": Path(args.queries),
                    "qrels.tsv": Path(args.qrels)}, {})
    return 0


def cmd_mine(args, settings: Settings) -> int:
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    k1 = float(settings.get("retriever.k1", args.k1, 1.2))
    b = float(settings.get("retriever.b", args.b, 0.75))
    n = int(settings.get("retriever.n", args.n, 4))
    skip_top = int(settings.get("retriever.skip_top", args.skip_top, 0))
    index = build_index(corpus, k1=k1, b=b)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for qid in sorted(queries):
            negs = mine_negatives(index, queries[qid], judgments, n, skip_top)
            fh.write(json.dumps(
                {"query_id": qid,
                 "negatives": [{"doc_id": s.doc_id, "text": s.text,
                                "provenance": s.provenance.value,
                                "origin": s.origin} for s in negs]},
                ensure_ascii=False) + "\n")
    log_event("mine", queries=len(queries), n=n, skip_top=skip_top, k1=k1, b=b)
    write_manifest(out.parent, "mine",
                   {"retriever.k1": k1, "retriever.b": b, "retriever.n": n,
                    "retriever.skip_top": skip_top},
                   {"corpus.jsonl": Path(args.corpus),
                    "queries.jsonl": Path(args.queries),
                    "qrels.tsv": Path(args.qrels)},
                   {"negatives.jsonl": out})
    return 0


def cmd_generate(args, settings: Settings) -> int:
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    query_ids = _read_id_file(args.query_ids)
    pairs = make_pairs(_restrict_queries(queries, query_ids), judgments,
                       corpus)
    pools_id = settings.get("generation.pools", args.pools, "general")
    if pools_id not in BUILTIN_POOLS:
        raise UsageError(f"unknown attribute pools {pools_id!r}; "
                         f"choose from {', '.join(sorted(BUILTIN_POOLS))}")
    template = PromptTemplate(settings.get("generation.template",
                                           args.template, "full"))
    cfg = GenConfig(
        model=settings.get("generation.model", args.model, "mock"),
        temperature=float(settings.get("generation.temperature",
                                       args.temperature, 0.7)),
        max_retries=int(settings.get("generation.max_retries",
                                     args.max_retries, 3)),
        cache_dir=args.cache_dir,
        seed=int(settings.get("generation.seed", args.seed, 0)),
        template=template,
        concurrency=int(settings.get("generation.concurrency",
                                     args.concurrency, 4)))
    if args.mock:
        client = mock_client(cfg.seed, vocabulary=_corpus_vocabulary(corpus))
    else:
        endpoint = settings.get("generation.endpoint", args.endpoint, None)
        client = (HttpChatClient(endpoint=endpoint) if endpoint
                  else HttpChatClient())
    records = generate_all(client, pairs, BUILTIN_POOLS[pools_id], cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_records(records, out)
    totals = token_totals(records)
    log_event("generate", pairs=len(pairs), records=len(records),
              template=template.value, model=cfg.model, mock=bool(args.mock),
              prompt_tokens=totals["prompt_tokens"],
              completion_tokens=totals["completion_tokens"])
    write_manifest(out.parent, "generate",
                   {"generation.model": cfg.model,
                    "generation.temperature": cfg.temperature,
                    "generation.max_retries": cfg.max_retries,
                    "generation.seed": cfg.seed,
                    "generation.template": template.value,
                    "generation.pools": pools_id,
                    "generation.mock": bool(args.mock)},
                   {"corpus.jsonl": Path(args.corpus),
                    "queries.jsonl": Path(args.queries),
                    "qrels.tsv": Path(args.qrels)},
                   {"records.jsonl": out},
                   extra={"tokens": totals})
    return 0


def _mix_config(args, settings: Settings) -> tuple[MixConfig, int, float]:
    strategy = MixStrategy(settings.get("mix.strategy", args.strategy,
                                        "hybrid"))
    cfg = MixConfig(
        strategy=strategy,
        n_negatives=int(settings.get("mix.n_negatives", args.n_negatives, 4)),
        synthetic_ratio=float(settings.get("mix.synthetic_ratio", args.ratio,
                                           0.7)),
        seed=int(settings.get("mix.seed", args.seed, 0)))
    skip_top = int(settings.get("retriever.skip_top", args.skip_top, 0))
    threshold = float(settings.get("generation.dedup_threshold",
                                   args.dedup_threshold, 0.9))
    return cfg, skip_top, threshold


def cmd_mix(args, settings: Settings) -> int:
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    query_ids = _read_id_file(args.query_ids)
    pairs = make_pairs(_restrict_queries(queries, query_ids), judgments,
                       corpus)
    cfg, skip_top, threshold = _mix_config(args, settings)
    k1 = float(settings.get("retriever.k1", args.k1, 1.2))
    b = float(settings.get("retriever.b", args.b, 0.75))
    index = build_index(corpus, k1=k1, b=b)
    records = load_records(args.records) if args.records else []
    records = dedup(records, threshold) if records else []
    instances, mix_manifest = mix(pairs, records, index, judgments, cfg,
                                  skip_top)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_instances(instances, out)
    log_event("mix", strategy=cfg.strategy.value, pairs=len(pairs),
              instances=len(instances), ratio=cfg.synthetic_ratio,
              n_negatives=cfg.n_negatives)
    inputs = {"corpus.jsonl": Path(args.corpus),
              "queries.jsonl": Path(args.queries),
              "qrels.tsv": Path(args.qrels)}
    if args.records:
        inputs["records.jsonl"] = Path(args.records)
    write_manifest(out.parent, "mix",
                   {"mix.strategy": cfg.strategy.value,
                    "mix.n_negatives": cfg.n_negatives,
                    "mix.synthetic_ratio": cfg.synthetic_ratio,
                    "mix.seed": cfg.seed,
                    "retriever.skip_top": skip_top,
                    "generation.dedup_threshold": threshold},
                   inputs, {"instances.jsonl": out},
                   extra={"mix": mix_manifest})
    return 0


def _train_config(args, settings: Settings) -> TrainConfig:
    return TrainConfig(
        v_dim=int(settings.get("train.v_dim", args.v_dim, 2 ** 15)),
        emb_dim=int(settings.get("train.emb_dim", args.emb_dim, 64)),
        lr=float(settings.get("train.lr", args.lr, 0.1)),
        batch_size=int(settings.get("train.batch_size", args.batch_size, 4)),
        epochs=int(settings.get("train.epochs", args.epochs, 5)),
        tau=float(settings.get("train.tau", args.tau, 0.02)),
        seed=int(settings.get("train.seed", args.seed, 0)),
        record_grad_epoch=int(settings.get("train.record_grad_epoch",
                                           args.record_grad_epoch, 1)))


def cmd_train(args, settings: Settings) -> int:
    corpus = load_corpus(args.corpus)
    queries = load_queries(args.queries)
    instances = load_instances(args.instances, corpus, queries)
    cfg = _train_config(args, settings)
    params, stats = train(instances, cfg)
    ckpt = Path(args.checkpoint)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, ckpt)
    stats_path = Path(args.stats)
    _write_json(stats.to_json_dict(cfg), stats_path)
    log_event("train", instances=len(instances), steps=stats.steps,
              final_loss=stats.losses[-1] if stats.losses else None,
              grad_variance=stats.grad_variance)
    write_manifest(ckpt.parent, "train",
                   {"train.v_dim": cfg.v_dim, "train.emb_dim": cfg.emb_dim,
                    "train.lr": cfg.lr, "train.batch_size": cfg.batch_size,
                    "train.epochs": cfg.epochs, "train.tau": cfg.tau,
                    "train.seed": cfg.seed,
                    "train.record_grad_epoch": cfg.record_grad_epoch},
                   {"corpus.jsonl": Path(args.corpus),
                    "queries.jsonl": Path(args.queries),
                    "instances.jsonl": Path(args.instances)},
                   {"checkpoint.bin": ckpt, "stats.json": stats_path})
    return 0


def cmd_eval(args, settings: Settings) -> int:
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    query_ids = _read_id_file(args.query_ids)
    queries = _restrict_queries(queries, query_ids)
    params = load_checkpoint(args.checkpoint)
    ks = tuple(args.k) if args.k else (10,)
    metrics = evaluate(params, corpus, queries, judgments, ks=ks)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(metrics.to_json_dict(), out)
    log_event("eval", queries=len(queries), skipped=len(metrics.skipped),
              **{name.replace("@", "_at_"): f"{value:.6f}"
                 for name, value in sorted(metrics.macro.items())})
    write_manifest(out.parent, "eval", {"eval.ks": list(ks)},
                   {"corpus.jsonl": Path(args.corpus),
                    "queries.jsonl": Path(args.queries),
                    "qrels.tsv": Path(args.qrels),
                    "checkpoint.bin": Path(args.checkpoint)},
                   {"metrics.json": out})
    return 0


def cmd_audit(args, settings: Settings) -> int:
    corpus, queries, judgments = _load_triple(args.corpus, args.queries,
                                              args.qrels)
    query_ids = _read_id_file(args.query_ids)
    pairs = make_pairs(_restrict_queries(queries, query_ids), judgments,
                       corpus)
    k1 = float(settings.get("retriever.k1", args.k1, 1.2))
    b = float(settings.get("retriever.b", args.b, 0.75))
    skip_top = int(settings.get("retriever.skip_top", args.skip_top, 0))
    n_retrieved = int(settings.get("audit.n_retrieved", args.n_retrieved, 4))
    index = build_index(corpus, k1=k1, b=b)
    full_records = load_records(args.records)
    simple_records = (load_records(args.simple_records)
                      if args.simple_records else [])
    params = load_checkpoint(args.checkpoint)
    items = build_audit_items(pairs, index, judgments, full_records,
                              simple_records, n_retrieved, skip_top)
    audit = similarity_audit(params, items)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(audit.to_json_dict(), out)
    log_event("audit", items=len(items),
              categories=len(audit.per_category))
    inputs = {"corpus.jsonl": Path(args.corpus),
              "queries.jsonl": Path(args.queries),
              "qrels.tsv": Path(args.qrels),
              "checkpoint.bin": Path(args.checkpoint),
              "records.jsonl": Path(args.records)}
    if args.simple_records:
        inputs["simple_records.jsonl"] = Path(args.simple_records)
    write_manifest(out.parent, "audit",
                   {"audit.n_retrieved": n_retrieved,
                    "retriever.skip_top": skip_top},
                   inputs, {"audit.json": out})
    return 0


def cmd_simulate(args, settings: Settings) -> int:
    sim_params = SimulationParams(
        corpus_size=int(settings.get("theory.corpus_size", args.corpus_size,
                                     1000)),
        pool_size=int(settings.get("theory.pool_size", args.pool_size, 8)),
        decay=float(settings.get("theory.decay", args.decay, 0.3)),
        num_positives=int(settings.get("theory.num_positives",
                                       args.num_positives, 1)),
        min_rank=args.min_rank)
    seed = int(settings.get("theory.seed", args.seed, 0))
    trials = int(settings.get("theory.trials", args.trials, 10000))
    inject = int(settings.get("theory.inject_top_rank", args.inject_top_rank,
                              5))
    identity = verify_identities(
        worlds=int(settings.get("theory.identity_worlds",
                                args.identity_worlds, 1000)),
        seed=seed,
        max_docs=int(settings.get("theory.max_docs", args.max_docs, 12)))
    if identity.identity_failures:
        raise NumericError(
            f"rank identity failed on {identity.identity_failures} "
            f"positives")
    comparison = simulate_comparison(sim_params, inject, trials, seed)
    report = {"identity": identity.to_json_dict(),
              "comparison": comparison.to_json_dict()}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(report, out)
    log_event("simulate", worlds=identity.worlds, trials=trials,
              per_trial_holds=comparison.per_trial_holds,
              improved_inf_mrr=comparison.improved_inf_mrr)
    write_manifest(out.parent, "simulate",
                   {"theory.trials": trials, "theory.seed": seed,
                    "theory.inject_top_rank": inject,
                    "theory.corpus_size": sim_params.corpus_size,
                    "theory.pool_size": sim_params.pool_size,
                    "theory.decay": sim_params.decay,
                    "theory.num_positives": sim_params.num_positives},
                   {}, {"theory-report.json": out})
    return 0


# --------------------------------------------------------------------------
# end-to-end pipeline (also the sweep engine)

def _run_pipeline(outdir: Path, seed: int, synth_params: SynthParams,
                  n_train: int, mix_cfg: MixConfig, train_cfg: TrainConfig,
                  skip_top: float, dedup_threshold: float,
                  ks: tuple[int, ...]) -> dict:
    """synth data -> mine -> mock-generate -> mix -> train -> eval -> audit.
    Returns artifact paths plus headline numbers; everything derives from
    the one seed."""
    datadir = outdir / "data"
    datadir.mkdir(parents=True, exist_ok=True)
    corpus, queries, judgments = synth_dataset(seed, synth_params)
    save_corpus(corpus, datadir / "corpus.jsonl")
    save_queries(queries, datadir / "queries.jsonl")
    save_qrels(judgments, datadir / "qrels.tsv")
    train_ids, heldout_ids = split_query_ids(queries, n_train, seed)
    (datadir / "train_ids.txt").write_text(
        "".join(q + "\n" for q in train_ids), encoding="utf-8")
    (datadir / "heldout_ids.txt").write_text(
        "".join(q + "\n" for q in heldout_ids), encoding="utf-8")
    log_event("e2e.data", docs=len(corpus), queries=len(queries),
              train=len(train_ids), heldout=len(heldout_ids))

    index = build_index(corpus)
    train_queries = {q: queries[q] for q in train_ids}
    pairs = make_pairs(train_queries, judgments, corpus)

    client = mock_client(seed, vocabulary=_corpus_vocabulary(corpus))
    cache_dir = str(outdir / "cache")
    gen_cfg = GenConfig(model="mock", seed=seed, cache_dir=cache_dir,
                        template=PromptTemplate.FULL)
    full_records = generate_all(client, pairs, BUILTIN_POOLS["general"],
                                gen_cfg)
    simple_records = generate_all(
        client, pairs, BUILTIN_POOLS["general"],
        GenConfig(model="mock", seed=seed, cache_dir=cache_dir,
                  template=PromptTemplate.SIMPLE))
    save_records(full_records, outdir / "records.jsonl")
    save_records(simple_records, outdir / "simple_records.jsonl")
    totals = token_totals(full_records + simple_records)
    log_event("e2e.generate", full_records=len(full_records),
              simple_records=len(simple_records),
              prompt_tokens=totals["prompt_tokens"],
              completion_tokens=totals["completion_tokens"])

    deduped = dedup(full_records, dedup_threshold)
    instances, mix_manifest = mix(pairs, deduped, index, judgments, mix_cfg,
                                  int(skip_top))
    save_instances(instances, outdir / "instances.jsonl")
    log_event("e2e.mix", strategy=mix_cfg.strategy.value,
              instances=len(instances))

    params, stats = train(instances, train_cfg)
    save_checkpoint(params, outdir / "checkpoint.bin")
    _write_json(stats.to_json_dict(train_cfg), outdir / "stats.json")
    log_event("e2e.train", steps=stats.steps,
              final_loss=stats.losses[-1] if stats.losses else None,
              grad_variance=stats.grad_variance)

    heldout_queries = {q: queries[q] for q in heldout_ids}
    metrics = evaluate(params, corpus, heldout_queries, judgments, ks=ks)
    _write_json(metrics.to_json_dict(), outdir / "metrics.json")

    audit_items = build_audit_items(pairs, index, judgments, deduped,
                                    simple_records,
                                    n_retrieved=mix_cfg.n_negatives,
                                    skip_top=int(skip_top))
    audit = similarity_audit(params, audit_items)
    _write_json(audit.to_json_dict(), outdir / "audit.json")
    log_event("e2e.eval",
              **{name.replace("@", "_at_"): f"{value:.6f}"
                 for name, value in sorted(metrics.macro.items())})

    return {"metrics": metrics, "audit": audit, "tokens": totals,
            "mix_manifest": mix_manifest,
            "artifacts": {
                "data/corpus.jsonl": datadir / "corpus.jsonl",
                "data/queries.jsonl": datadir / "queries.jsonl",
                "data/qrels.tsv": datadir / "qrels.tsv",
                "data/train_ids.txt": datadir / "train_ids.txt",
                "data/heldout_ids.txt": datadir / "heldout_ids.txt",
                "records.jsonl": outdir / "records.jsonl",
                "simple_records.jsonl": outdir / "simple_records.jsonl",
                "instances.jsonl": outdir / "instances.jsonl",
                "checkpoint.bin": outdir / "checkpoint.bin",
                "stats.json": outdir / "stats.json",
                "metrics.json": outdir / "metrics.json",
                "audit.json": outdir / "audit.json",
            }}


def _pipeline_settings(args, settings: Settings):
    seed = int(settings.get("run.seed", args.seed, 7))
    synth_params = SynthParams(
        topics=int(settings.get("data.topics", args.topics, 4)),
        docs_per_topic=int(settings.get("data.docs_per_topic",
                                        args.docs_per_topic, 50)),
        queries=int(settings.get("data.queries", args.n_queries, 60)),
        vocab=int(settings.get("data.vocab", args.vocab, 240)))
    n_train = int(settings.get("data.train_queries", args.train_queries, 40))
    mix_cfg = MixConfig(
        strategy=MixStrategy(settings.get("mix.strategy", args.strategy,
                                          "hybrid")),
        n_negatives=int(settings.get("mix.n_negatives", args.n_negatives, 4)),
        synthetic_ratio=float(settings.get("mix.synthetic_ratio", args.ratio,
                                           0.7)),
        seed=seed)
    train_cfg = TrainConfig(
        v_dim=int(settings.get("train.v_dim", args.v_dim, 2 ** 15)),
        emb_dim=int(settings.get("train.emb_dim", args.emb_dim, 64)),
        lr=float(settings.get("train.lr", args.lr, 0.1)),
        batch_size=int(settings.get("train.batch_size", args.batch_size, 4)),
        epochs=int(settings.get("train.epochs", args.epochs, 5)),
        tau=float(settings.get("train.tau", args.tau, 0.02)),
        seed=seed)
    skip_top = int(settings.get("retriever.skip_top", args.skip_top, 0))
    threshold = float(settings.get("generation.dedup_threshold",
                                   args.dedup_threshold, 0.9))
    ks = tuple(args.k) if args.k else (10,)
    return seed, synth_params, n_train, mix_cfg, train_cfg, skip_top, \
        threshold, ks


def _pipeline_config_echo(seed, synth_params, n_train, mix_cfg, train_cfg,
                          skip_top, threshold, ks) -> dict:
    return {
        "run.seed": seed,
        "data.topics": synth_params.topics,
        "data.docs_per_topic": synth_params.docs_per_topic,
        "data.queries": synth_params.queries,
        "data.vocab": synth_params.vocab,
        "data.train_queries": n_train,
        "mix.strategy": mix_cfg.strategy.value,
        "mix.n_negatives": mix_cfg.n_negatives,
        "mix.synthetic_ratio": mix_cfg.synthetic_ratio,
        "train.v_dim": train_cfg.v_dim,
        "train.emb_dim": train_cfg.emb_dim,
        "train.lr": train_cfg.lr,
        "train.batch_size": train_cfg.batch_size,
        "train.epochs": train_cfg.epochs,
        "train.tau": train_cfg.tau,
        "retriever.skip_top": skip_top,
        "generation.dedup_threshold": threshold,
        "eval.ks": ",".join(str(k) for k in ks),
    }


def cmd_e2e(args, settings: Settings) -> int:
    (seed, synth_params, n_train, mix_cfg, train_cfg, skip_top, threshold,
     ks) = _pipeline_settings(args, settings)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result = _run_pipeline(outdir, seed, synth_params, n_train, mix_cfg,
                           train_cfg, skip_top, threshold, ks)
    write_manifest(
        outdir, "e2e",
        _pipeline_config_echo(seed, synth_params, n_train, mix_cfg,
                              train_cfg, skip_top, threshold, ks),
        {}, result["artifacts"],
        extra={"tokens": result["tokens"], "mix": result["mix_manifest"]})
    return 0


def cmd_sweep(args, settings: Settings) -> int:
    if args.param not in ("tau", "ratio"):
        raise UsageError(f"--param must be 'tau' or 'ratio', got "
                         f"{args.param!r}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --values: {exc}") from exc
    if not values:
        raise UsageError("--values is empty")
    (seed, synth_params, n_train, mix_cfg, train_cfg, skip_top, threshold,
     ks) = _pipeline_settings(args, settings)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        run_mix, run_train = mix_cfg, train_cfg
        if args.param == "tau":
            run_train = TrainConfig(
                v_dim=train_cfg.v_dim, emb_dim=train_cfg.emb_dim,
                lr=train_cfg.lr, batch_size=train_cfg.batch_size,
                epochs=train_cfg.epochs, tau=value, seed=train_cfg.seed)
        else:
            run_mix = MixConfig(strategy=mix_cfg.strategy,
                                n_negatives=mix_cfg.n_negatives,
                                synthetic_ratio=value, seed=mix_cfg.seed)
        rundir = outdir / f"{args.param}_{value:g}"
        rundir.mkdir(parents=True, exist_ok=True)
        result = _run_pipeline(rundir, seed, synth_params, n_train, run_mix,
                               run_train, skip_top, threshold, ks)
        ndcg = result["metrics"].macro.get(f"ndcg@{ks[0]}")
        rows.append((args.param, value, ndcg))
        log_event("sweep.point", param=args.param, value=value,
                  ndcg=f"{ndcg:.6f}")
    csv_path = outdir / "sweep.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", f"ndcg@{ks[0]}"])
        for row in rows:
            writer.writerow([row[0], repr(row[1]), f"{row[2]:.6f}"])
    write_manifest(outdir, "sweep",
                   _pipeline_config_echo(seed, synth_params, n_train,
                                         mix_cfg, train_cfg, skip_top,
                                         threshold, ks)
                   | {"sweep.param": args.param, "sweep.values": args.values},
                   {}, {"sweep.csv": csv_path})
    return 0


# --------------------------------------------------------------------------
# parser

def _add_data_flags(p):
    p.add_argument("--corpus")
    p.add_argument("--queries")
    p.add_argument("--qrels")


def _add_retriever_flags(p):
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--skip-top", type=int, dest="skip_top")


def _add_pipeline_flags(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--topics", type=int)
    p.add_argument("--docs-per-topic", type=int, dest="docs_per_topic")
    p.add_argument("--n-queries", type=int, dest="n_queries")
    p.add_argument("--vocab", type=int)
    p.add_argument("--train-queries", type=int, dest="train_queries")
    p.add_argument("--strategy")
    p.add_argument("--n-negatives", type=int, dest="n_negatives")
    p.add_argument("--ratio", type=float)
    p.add_argument("--v-dim", type=int, dest="v_dim")
    p.add_argument("--emb-dim", type=int, dest="emb_dim")
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--dedup-threshold", type=float, dest="dedup_threshold")
    p.add_argument("--skip-top", type=int, dest="skip_top")
    p.add_argument("--k", type=int, action="append")


def build_parser() -> _Parser:
    parser = _Parser(prog="negmix",
                     description="Synthetic hard-negative pipeline")
    parser.add_argument("--config", help="flat dotted-key JSON config")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("ingest", help="validate a dataset or synthesize one")
    _add_data_flags(p)
    p.add_argument("--outdir", required=True)
    p.add_argument("--synth", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--topics", type=int)
    p.add_argument("--docs-per-topic", type=int, dest="docs_per_topic")
    p.add_argument("--n-queries", type=int, dest="n_queries")
    p.add_argument("--vocab", type=int)

    p = sub.add_parser("mine", help="BM25 hard negatives per query")
    _add_data_flags(p)
    _add_retriever_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int)

    p = sub.add_parser("generate", help="LLM negatives for training pairs")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-retries", type=int, dest="max_retries")
    p.add_argument("--seed", type=int)
    p.add_argument("--pools")
    p.add_argument("--template", choices=["full", "simple"])
    p.add_argument("--concurrency", type=int)
    p.add_argument("--endpoint")
    p.add_argument("--query-ids", dest="query_ids")

    p = sub.add_parser("mix", help="build training instances")
    _add_data_flags(p)
    _add_retriever_flags(p)
    p.add_argument("--records")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy")
    p.add_argument("--n-negatives", type=int, dest="n_negatives")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--dedup-threshold", type=float, dest="dedup_threshold")
    p.add_argument("--query-ids", dest="query_ids")

    p = sub.add_parser("train", help="train the dual encoder")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--v-dim", type=int, dest="v_dim")
    p.add_argument("--emb-dim", type=int, dest="emb_dim")
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--record-grad-epoch", type=int,
                   dest="record_grad_epoch")

    p = sub.add_parser("eval", help="retrieval metrics for a checkpoint")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, action="append")
    p.add_argument("--query-ids", dest="query_ids")

    p = sub.add_parser("audit", help="similarity audit by negative family")
    _add_data_flags(p)
    _add_retriever_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--simple-records", dest="simple_records")
    p.add_argument("--out", required=True)
    p.add_argument("--n-retrieved", type=int, dest="n_retrieved")
    p.add_argument("--query-ids", dest="query_ids")

    p = sub.add_parser("simulate", help="rank identities and pool-quality "
                                        "Monte Carlo")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--inject-top-rank", type=int, dest="inject_top_rank")
    p.add_argument("--corpus-size", type=int, dest="corpus_size")
    p.add_argument("--pool-size", type=int, dest="pool_size")
    p.add_argument("--decay", type=float)
    p.add_argument("--num-positives", type=int, dest="num_positives")
    p.add_argument("--min-rank", type=int, dest="min_rank")
    p.add_argument("--identity-worlds", type=int, dest="identity_worlds")
    p.add_argument("--max-docs", type=int, dest="max_docs")

    p = sub.add_parser("sweep", help="grid over tau or ratio; CSV of NDCG")
    p.add_argument("--outdir", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True)
    _add_pipeline_flags(p)

    p = sub.add_parser("e2e", help="one seeded run of the whole pipeline")
    p.add_argument("--outdir", required=True)
    _add_pipeline_flags(p)

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "mine": cmd_mine,
    "generate": cmd_generate,
    "mix": cmd_mix,
    "train": cmd_train,
    "eval": cmd_eval,
    "audit": cmd_audit,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "e2e": cmd_e2e,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(message)s", force=True)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        settings = Settings(args.config)
        return _COMMANDS[args.command](args, settings)
    except UsageError as exc:
        logger.error(kv("error", kind="usage", message=str(exc)))
        return 1
    except ParameterError as exc:
        logger.error(kv("error", kind="config", message=str(exc)))
        return 1
    except (ParseError, IntegrityError) as exc:
        logger.error(kv("error", kind="data", message=str(exc)))
        return 2
    except (GenerationError, SchemaError) as exc:
        logger.error(kv("error", kind="generation", message=str(exc)))
        return 3
    except (NumericError, DomainError) as exc:
        logger.error(kv("error", kind="numeric", message=str(exc)))
        return 4


if __name__ == "__main__":
    sys.exit(main())
