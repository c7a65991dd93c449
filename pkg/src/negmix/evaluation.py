"""Retrieval metrics over exhaustive dot-product rankings, plus a
query-to-document similarity audit that contrasts positives with the three
negative families (retrieved, simple-prompt synthetic, full-prompt
synthetic)."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bm25 import Bm25Index, mine_negatives
from .data import (Corpus, Document, Judgments, Query, QuerySet, RankedList)
from .encoder import EncoderParams, encode, encode_corpus
from .errors import ParameterError
from .generation import GenerationRecord

logger = logging.getLogger(__name__)


def rank_all(params: EncoderParams, corpus: Corpus, query: Query
             ) -> RankedList:
    """Every corpus document scored and sorted (score desc, doc id asc)."""
    if not corpus:
        raise ParameterError("corpus is empty")
    ids, mat = encode_corpus(params, corpus)
    h_q = encode(params, query.text)
    scores = mat @ h_q
    order = np.argsort(-scores, kind="stable")   # ids already ascending
    return RankedList(query_id=query.query_id,
                      doc_ids=tuple(ids[int(i)] for i in order),
                      scores=tuple(float(scores[int(i)]) for i in order))


def _check_k(k: int) -> None:
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")


def ndcg_at_k(ranked: RankedList, relevant: dict[str, int], k: int) -> float:
    """Gains 2^grade - 1, discount log2(rank + 1), normalized by the ideal
    ordering of the query's own judged grades."""
    _check_k(k)
    if not relevant:
        return 0.0
    dcg = 0.0
    for pos, doc_id in enumerate(ranked.doc_ids[:k], start=1):
        grade = relevant.get(doc_id, 0)
        if grade > 0:
            dcg += (2 ** grade - 1) / math.log2(pos + 1)
    ideal = sorted(relevant.values(), reverse=True)[:k]
    idcg = sum((2 ** g - 1) / math.log2(pos + 1)
               for pos, g in enumerate(ideal, start=1))
    return dcg / idcg if idcg > 0 else 0.0


def recall_at_k(ranked: RankedList, relevant: dict[str, int], k: int) -> float:
    _check_k(k)
    if not relevant:
        return 0.0
    hits = sum(1 for d in ranked.doc_ids[:k] if d in relevant)
    return hits / len(relevant)


def mrr_at_k(ranked: RankedList, relevant: dict[str, int], k: int) -> float:
    """Reciprocal rank of the first relevant doc; 0 when it sits beyond k."""
    _check_k(k)
    for pos, doc_id in enumerate(ranked.doc_ids[:k], start=1):
        if doc_id in relevant:
            return 1.0 / pos
    return 0.0


@dataclass(frozen=True)
class Metrics:
    per_query: dict[str, dict[str, float]]
    macro: dict[str, float]
    skipped: tuple[str, ...]
    ks: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {"macro": self.macro,
                "per_query": self.per_query,
                "skipped": list(self.skipped),
                "ks": list(self.ks)}


def evaluate(params: EncoderParams, corpus: Corpus, queries: QuerySet,
             judgments: Judgments, ks: tuple[int, ...] = (10,)) -> Metrics:
    """Exhaustive-ranking NDCG / Recall / MRR at each cutoff; queries with
    no relevant documents are skipped with a warning and excluded from the
    unweighted macro averages."""
    if not ks:
        raise ParameterError("ks must be non-empty")
    for k in ks:
        _check_k(k)
    ids, mat = encode_corpus(params, corpus)
    per_query: dict[str, dict[str, float]] = {}
    skipped: list[str] = []
    for qid in sorted(queries):
        relevant = judgments.relevant(qid)
        if not relevant:
            skipped.append(qid)
            continue
        h_q = encode(params, queries[qid].text)
        scores = mat @ h_q
        order = np.argsort(-scores, kind="stable")
        ranked = RankedList(query_id=qid,
                            doc_ids=tuple(ids[int(i)] for i in order),
                            scores=tuple(float(scores[int(i)]) for i in order))
        row: dict[str, float] = {}
        for k in ks:
            row[f"ndcg@{k}"] = ndcg_at_k(ranked, relevant, k)
            row[f"recall@{k}"] = recall_at_k(ranked, relevant, k)
            row[f"mrr@{k}"] = mrr_at_k(ranked, relevant, k)
        per_query[qid] = row
    if skipped:
        logger.warning("%d queries have no relevant documents and were "
                       "excluded from macro averages: %s", len(skipped),
                       ", ".join(skipped[:5]) + ("..." if len(skipped) > 5
                                                 else ""))
    macro: dict[str, float] = {}
    if per_query:
        names = next(iter(per_query.values())).keys()
        for name in names:
            macro[name] = float(np.mean([r[name]
                                         for r in per_query.values()]))
    return Metrics(per_query=per_query, macro=macro,
                   skipped=tuple(skipped), ks=tuple(ks))


# --------------------------------------------------------------------------
# similarity audit

class AuditCategory(str, enum.Enum):
    POSITIVE = "Positive"
    RETRIEVED_NEG = "RetrievedNeg"
    SIMPLE_PROMPT_NEG = "SimplePromptNeg"
    SYN_NEG = "SynNeg"


@dataclass(frozen=True)
class CategoryStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class SimilarityAudit:
    per_category: dict[str, CategoryStats]
    similarity: str = "dot"

    def to_json_dict(self) -> dict:
        return {"similarity": self.similarity,
                "per_category": {
                    name: {"mean": s.mean, "std": s.std, "count": s.count}
                    for name, s in sorted(self.per_category.items())}}


AuditItem = tuple[str, str, AuditCategory]   # (query text, doc text, category)


def similarity_audit(params: EncoderParams,
                     items: list[AuditItem]) -> SimilarityAudit:
    """Mean and population std of query-document dot similarity per
    category; categories with no items are omitted with a warning."""
    sims: dict[str, list[float]] = {}
    for query_text, doc_text, category in items:
        score = float(np.dot(encode(params, query_text),
                             encode(params, doc_text)))
        sims.setdefault(AuditCategory(category).value, []).append(score)
    missing = [c.value for c in AuditCategory if c.value not in sims]
    if missing:
        logger.warning("audit has no items for categories: %s",
                       ", ".join(missing))
    per_category = {}
    for name, values in sims.items():
        arr = np.asarray(values)
        per_category[name] = CategoryStats(mean=float(arr.mean()),
                                           std=float(arr.std()),
                                           count=len(values))
    return SimilarityAudit(per_category=per_category)


def build_audit_items(pairs: list[tuple[Query, Document]],
                      index: Bm25Index, judgments: Judgments,
                      full_records: list[GenerationRecord],
                      simple_records: list[GenerationRecord],
                      n_retrieved: int = 4,
                      skip_top: int = 0) -> list[AuditItem]:
    """Audit rows for each pair: its positive, its top retrieved negatives,
    and every surviving synthetic negative from each prompt family."""
    full_map = {(r.query_id, r.positive_id): r for r in full_records}
    simple_map = {(r.query_id, r.positive_id): r for r in simple_records}
    items: list[AuditItem] = []
    for query, doc in pairs:
        items.append((query.text, doc.single_text(), AuditCategory.POSITIVE))
        for neg in mine_negatives(index, query, judgments, n_retrieved,
                                  skip_top):
            items.append((query.text, neg.text, AuditCategory.RETRIEVED_NEG))
        rec = full_map.get((query.query_id, doc.doc_id))
        if rec is not None:
            for neg in rec.negatives:
                items.append((query.text, neg, AuditCategory.SYN_NEG))
        srec = simple_map.get((query.query_id, doc.doc_id))
        if srec is not None:
            for neg in srec.negatives:
                items.append((query.text, neg,
                              AuditCategory.SIMPLE_PROMPT_NEG))
    return items
