"""Okapi BM25 index with the smoothed idf variant:

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))

which is nonnegative for every df <= N, so any document containing a query
term scores > 0 and documents with no query term are never returned.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .data import (Corpus, Judgments, NegativeSample, Provenance, Query,
                   RankedList)
from .errors import ParameterError
from .text import tokenize


@dataclass
class Bm25Index:
    k1: float = 1.2
    b: float = 0.75
    name: str = "bm25"
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    doc_texts: dict[str, str] = field(default_factory=dict)
    avgdl: float = 0.0

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def build_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    if k1 < 0 or not 0 <= b <= 1:
        raise ParameterError(f"k1 must be >= 0 and b in [0, 1]; got {k1}, {b}")
    index = Bm25Index(k1=k1, b=b)
    term_docs: dict[str, Counter] = {}
    total_len = 0
    for doc_id in sorted(corpus):
        text = corpus[doc_id].single_text()
        toks = tokenize(text)
        index.doc_lengths[doc_id] = len(toks)
        index.doc_texts[doc_id] = text
        total_len += len(toks)
        for term, tf in Counter(toks).items():
            term_docs.setdefault(term, Counter())[doc_id] = tf
    for term in sorted(term_docs):
        index.postings[term] = sorted(term_docs[term].items())
    index.avgdl = total_len / len(corpus) if corpus else 0.0
    return index


def bm25_score(index: Bm25Index, query_terms: list[str], doc_id: str) -> float:
    """Score one document; terms absent from it contribute 0."""
    if doc_id not in index.doc_lengths:
        raise KeyError(f"unknown doc id {doc_id!r}")
    dl = index.doc_lengths[doc_id]
    norm = index.k1 * (1.0 - index.b + index.b * dl / index.avgdl) \
        if index.avgdl > 0 else index.k1
    score = 0.0
    for term in query_terms:
        postings = index.postings.get(term)
        if not postings:
            continue
        tf = 0
        for did, count in postings:      # postings are short at desk scale
            if did == doc_id:
                tf = count
                break
        if tf == 0:
            continue
        score += index.idf(term) * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def search(index: Bm25Index, query_text: str, k: int) -> RankedList:
    """Top-k by score, ties broken by ascending doc id; zero-score docs are
    never returned, so the result may be shorter than k."""
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    terms = tokenize(query_text)
    candidates: set[str] = set()
    for term in set(terms):
        for did, _ in index.postings.get(term, ()):
            candidates.add(did)
    scored = [(-bm25_score(index, terms, did), did) for did in candidates]
    scored.sort()
    top = scored[:k]
    return RankedList(query_id="", doc_ids=tuple(d for _, d in top),
                      scores=tuple(-s for s, _ in top))


def mine_negatives(index: Bm25Index, query: Query, judgments: Judgments,
                   n: int, skip_top: int = 0) -> list[NegativeSample]:
    """Top-ranked unjudged documents for the query, after dropping the first
    ``skip_top`` candidates (a cheap guard against unlabeled positives
    hiding at the very top of the negative pool).  Returns fewer than n
    only when the candidate pool is exhausted."""
    if n < 0 or skip_top < 0:
        raise ParameterError("n and skip_top must be >= 0")
    ranking = search(index, query.text, index.doc_count)
    judged = judgments.judged(query.query_id)
    out: list[NegativeSample] = []
    dropped = 0
    for did in ranking.doc_ids:
        if did in judged:
            continue
        if dropped < skip_top:
            dropped += 1
            continue
        out.append(NegativeSample(text=index.doc_texts[did],
                                  provenance=Provenance.RETRIEVED,
                                  origin=index.name, doc_id=did))
        if len(out) == n:
            break
    return out


def save_index(index: Bm25Index, path: str | Path) -> None:
    payload = {
        "k1": index.k1, "b": index.b, "name": index.name,
        "avgdl": index.avgdl,
        "doc_lengths": index.doc_lengths,
        "doc_texts": index.doc_texts,
        "postings": {t: [[d, c] for d, c in ps]
                     for t, ps in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True)


def load_index(path: str | Path) -> Bm25Index:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return Bm25Index(
        k1=payload["k1"], b=payload["b"], name=payload["name"],
        avgdl=payload["avgdl"], doc_lengths=payload["doc_lengths"],
        doc_texts=payload["doc_texts"],
        postings={t: [(d, c) for d, c in ps]
                  for t, ps in payload["postings"].items()})
