"""Strategies for assembling training instances from retrieved and
synthetic negatives.

The hybrid strategy upgrades a seed-chosen fraction R of pairs by replacing
one retrieved negative with one synthetic negative; every instance still
carries exactly N negatives.  The direct strategy instead appends extra
synthetic-only instances on top of the retrieved baseline.  Pure and random
single-source strategies exist as baselines.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bm25 import Bm25Index, mine_negatives
from .data import (Document, Judgments, NegativeSample, Provenance, Query,
                   TrainInstance, check_no_false_negatives)
from .errors import MixError, ParameterError
from .generation import GenerationRecord, records_by_pair

logger = logging.getLogger(__name__)

Pair = tuple[Query, Document]


class MixStrategy(str, enum.Enum):
    HYBRID = "hybrid"
    DIRECT = "direct"
    PURE_SYNTHETIC = "pure_synthetic"
    PURE_RETRIEVED = "pure_retrieved"
    RANDOM = "random"


@dataclass(frozen=True)
class MixConfig:
    strategy: MixStrategy = MixStrategy.HYBRID
    n_negatives: int = 4
    synthetic_ratio: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.n_negatives < 1:
            raise ParameterError("n_negatives must be >= 1")
        if not 0.0 <= self.synthetic_ratio <= 1.0:
            raise ParameterError(
                f"synthetic_ratio must be in [0, 1], got {self.synthetic_ratio}")


def _sorted_pairs(pairs: list[Pair]) -> list[Pair]:
    return sorted(pairs, key=lambda p: (p[0].query_id, p[1].doc_id))


def selected_pair_count(n_pairs: int, ratio: float) -> int:
    """floor(R * pairs + 0.5): round half up, never exceeding n_pairs."""
    return min(n_pairs, int(math.floor(ratio * n_pairs + 0.5)))


def select_pairs(pairs: list[Pair], ratio: float, seed: int) -> set[int]:
    """Indices (into the sorted pair list) chosen uniformly by seed."""
    m = selected_pair_count(len(pairs), ratio)
    if m == 0:
        return set()
    rng = np.random.default_rng(seed)
    return set(int(i) for i in rng.choice(len(pairs), size=m, replace=False))


def _pair_rng(seed: int, query_id: str, doc_id: str) -> np.random.Generator:
    # per-pair stream so output does not depend on iteration order
    digest = hashlib.sha256(f"{query_id}\x1f{doc_id}".encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "big")])


def _random_negatives(index: Bm25Index, query: Query, judgments: Judgments,
                      n: int, seed: int, doc_id: str,
                      exclude: set[str] = frozenset()) -> list[NegativeSample]:
    pool = [d for d in sorted(index.doc_texts)
            if d not in judgments.judged(query.query_id) and d not in exclude]
    if len(pool) < n:
        raise MixError(
            f"not enough unjudged documents for query {query.query_id!r}: "
            f"need {n}, have {len(pool)}")
    rng = _pair_rng(seed, query.query_id, doc_id)
    picks = rng.choice(len(pool), size=n, replace=False)
    return [NegativeSample(text=index.doc_texts[pool[int(i)]],
                           provenance=Provenance.RANDOM, origin="random",
                           doc_id=pool[int(i)])
            for i in sorted(int(p) for p in picks)]


def _retrieved_with_backfill(index: Bm25Index, query: Query,
                             judgments: Judgments, n: int, skip_top: int,
                             cfg: MixConfig, doc_id: str) -> list[NegativeSample]:
    negs = mine_negatives(index, query, judgments, n, skip_top)
    if len(negs) < n:
        # retrieval pool exhausted; keep |negatives| = N with random fill
        have = {s.doc_id for s in negs if s.doc_id}
        fill = _random_negatives(index, query, judgments, n - len(negs),
                                 cfg.seed, doc_id, exclude=have)
        logger.warning("query %s: only %d retrieved negatives, padded with "
                       "%d random", query.query_id, len(negs), len(fill))
        negs = negs + fill
    return negs


def _require_record(records_map: dict[tuple[str, str], GenerationRecord],
                    query: Query, doc: Document) -> GenerationRecord:
    rec = records_map.get((query.query_id, doc.doc_id))
    if rec is None:
        raise MixError(
            f"no generation record for pair ({query.query_id!r}, "
            f"{doc.doc_id!r})")
    if not rec.negatives:
        raise MixError(f"generation record {rec.id} has no negatives left")
    return rec


def mix_hybrid(pairs: list[Pair], records: list[GenerationRecord],
               index: Bm25Index, judgments: Judgments, cfg: MixConfig,
               skip_top: int = 0) -> list[TrainInstance]:
    ordered = _sorted_pairs(pairs)
    selected = select_pairs(ordered, cfg.synthetic_ratio, cfg.seed)
    records_map = records_by_pair(records)
    out: list[TrainInstance] = []
    for i, (query, doc) in enumerate(ordered):
        if i in selected:
            rec = _require_record(records_map, query, doc)
            syn = NegativeSample(text=rec.negatives[0],
                                 provenance=Provenance.SYNTHETIC,
                                 origin=rec.id)
            # the synthetic negative takes over the hardest slot: it stands
            # in for the top-ranked mined negative, not for a weak tail one
            retrieved = _retrieved_with_backfill(
                index, query, judgments, cfg.n_negatives - 1, skip_top + 1,
                cfg, doc.doc_id)
            negs = [syn] + retrieved
        else:
            negs = _retrieved_with_backfill(
                index, query, judgments, cfg.n_negatives, skip_top,
                cfg, doc.doc_id)
        out.append(TrainInstance(query=query, positive=doc,
                                 negatives=tuple(negs)))
    check_no_false_negatives(out, judgments)
    return out


def mix_direct(pairs: list[Pair], records: list[GenerationRecord],
               index: Bm25Index, judgments: Judgments, cfg: MixConfig,
               skip_top: int = 0) -> list[TrainInstance]:
    """Retrieved-only instances for every pair, then one extra instance per
    selected pair built from that pair's synthetic negatives (padded with
    retrieved ones when fewer than N survived dedup)."""
    ordered = _sorted_pairs(pairs)
    selected = select_pairs(ordered, cfg.synthetic_ratio, cfg.seed)
    records_map = records_by_pair(records)
    out: list[TrainInstance] = []
    for query, doc in ordered:
        negs = _retrieved_with_backfill(index, query, judgments,
                                        cfg.n_negatives, skip_top,
                                        cfg, doc.doc_id)
        out.append(TrainInstance(query=query, positive=doc,
                                 negatives=tuple(negs)))
    for i, (query, doc) in enumerate(ordered):
        if i not in selected:
            continue
        rec = _require_record(records_map, query, doc)
        syn = [NegativeSample(text=t, provenance=Provenance.SYNTHETIC,
                              origin=rec.id)
               for t in rec.negatives[:cfg.n_negatives]]
        if len(syn) < cfg.n_negatives:
            # synthetic survivors stand in for the hardest slots, so the
            # retrieved padding resumes below them in the ranking
            pad = _retrieved_with_backfill(index, query, judgments,
                                           cfg.n_negatives - len(syn),
                                           skip_top + len(syn),
                                           cfg, doc.doc_id)
            syn = syn + pad
        out.append(TrainInstance(query=query, positive=doc,
                                 negatives=tuple(syn)))
    check_no_false_negatives(out, judgments)
    return out


def mix_pure(pairs: list[Pair], source: Provenance, index: Bm25Index,
             judgments: Judgments, cfg: MixConfig,
             records: list[GenerationRecord] | None = None,
             skip_top: int = 0) -> list[TrainInstance]:
    """Single-source instances for every pair.

    Synthetic mode requires a record per pair and cycles its surviving
    negatives when N exceeds their count, so every strategy emits exactly N
    negatives per instance.
    """
    ordered = _sorted_pairs(pairs)
    records_map = records_by_pair(records or [])
    out: list[TrainInstance] = []
    for query, doc in ordered:
        if source is Provenance.RETRIEVED:
            negs = _retrieved_with_backfill(index, query, judgments,
                                            cfg.n_negatives, skip_top,
                                            cfg, doc.doc_id)
        elif source is Provenance.RANDOM:
            negs = _random_negatives(index, query, judgments,
                                     cfg.n_negatives, cfg.seed, doc.doc_id)
        elif source is Provenance.SYNTHETIC:
            rec = _require_record(records_map, query, doc)
            negs = [NegativeSample(text=rec.negatives[j % len(rec.negatives)],
                                   provenance=Provenance.SYNTHETIC,
                                   origin=rec.id)
                    for j in range(cfg.n_negatives)]
        else:
            raise ParameterError(f"unsupported source {source!r}")
        out.append(TrainInstance(query=query, positive=doc,
                                 negatives=tuple(negs)))
    check_no_false_negatives(out, judgments)
    return out


def mix(pairs: list[Pair], records: list[GenerationRecord],
        index: Bm25Index, judgments: Judgments, cfg: MixConfig,
        skip_top: int = 0) -> tuple[list[TrainInstance], dict]:
    """Dispatch on cfg.strategy; returns (instances, mix manifest)."""
    if cfg.strategy is MixStrategy.HYBRID:
        instances = mix_hybrid(pairs, records, index, judgments, cfg, skip_top)
    elif cfg.strategy is MixStrategy.DIRECT:
        instances = mix_direct(pairs, records, index, judgments, cfg, skip_top)
    elif cfg.strategy is MixStrategy.PURE_SYNTHETIC:
        instances = mix_pure(pairs, Provenance.SYNTHETIC, index, judgments,
                             cfg, records, skip_top)
    elif cfg.strategy is MixStrategy.PURE_RETRIEVED:
        instances = mix_pure(pairs, Provenance.RETRIEVED, index, judgments,
                             cfg, records, skip_top)
    elif cfg.strategy is MixStrategy.RANDOM:
        instances = mix_pure(pairs, Provenance.RANDOM, index, judgments,
                             cfg, records, skip_top)
    else:
        raise ParameterError(f"unknown strategy {cfg.strategy!r}")

    prov_counts: dict[str, int] = {}
    for inst in instances:
        for neg in inst.negatives:
            prov_counts[neg.provenance.value] = \
                prov_counts.get(neg.provenance.value, 0) + 1
    manifest = {
        "strategy": cfg.strategy.value,
        "n_negatives": cfg.n_negatives,
        "synthetic_ratio": cfg.synthetic_ratio,
        "seed": cfg.seed,
        "skip_top": skip_top,
        "pairs": len(pairs),
        "selected_pairs": selected_pair_count(len(pairs), cfg.synthetic_ratio)
        if cfg.strategy in (MixStrategy.HYBRID, MixStrategy.DIRECT) else 0,
        "instances": len(instances),
        "provenance_counts": dict(sorted(prov_counts.items())),
    }
    return instances, manifest
