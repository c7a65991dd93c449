"""Dataset model and file formats.

Disk layout follows the common retrieval-benchmark convention:

    corpus.jsonl     {"_id": "d1", "title": "...", "text": "..."}
    queries.jsonl    {"_id": "q1", "text": "..."}
    qrels.tsv        query-id <TAB> corpus-id <TAB> score   (optional header)
    instances.jsonl  {"query_id", "positive_id", "negatives": [...]}

Rows with score 0 are kept as "judged" (they never enter negative pools)
but do not count as relevant.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import IntegrityError, ParameterError, ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    text: str

    def single_text(self) -> str:
        """Title concatenated before the body with a single space."""
        if self.title:
            return self.title + " " + self.text
        return self.text


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


class Provenance(str, enum.Enum):
    SYNTHETIC = "synthetic"
    RETRIEVED = "retrieved"
    RANDOM = "random"


@dataclass(frozen=True)
class NegativeSample:
    """One negative passage attached to a training instance.

    Synthetic samples have no corpus doc_id; their origin is the id of the
    generation record they came from.  Retrieved/random samples carry the
    corpus doc_id and name the component that produced them.
    """
    text: str
    provenance: Provenance
    origin: str
    doc_id: str | None = None


@dataclass(frozen=True)
class TrainInstance:
    query: Query
    positive: Document
    negatives: tuple[NegativeSample, ...]


@dataclass(frozen=True)
class RankedList:
    """Scored ranking for one query: ties broken by ascending doc id so
    rankings are reproducible."""
    query_id: str
    doc_ids: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.doc_ids) != len(self.scores):
            raise ParameterError("doc_ids and scores must have equal length")

    def __len__(self) -> int:
        return len(self.doc_ids)


class Judgments:
    """Relevance grades per query.

    ``relevant(qid)`` maps doc-id -> grade (always >= 1).  ``judged(qid)``
    additionally contains grade-0 docs: they are annotated, so they are
    excluded from negative pools even though they are not positives.
    """

    def __init__(self, rows: Iterable[tuple[str, str, int]] = ()):
        self._grades: dict[str, dict[str, int]] = {}
        for qid, did, grade in rows:
            per_q = self._grades.setdefault(qid, {})
            if did in per_q:
                raise IntegrityError(
                    f"duplicate judgment for query {qid!r} doc {did!r}")
            per_q[did] = int(grade)

    def relevant(self, query_id: str) -> dict[str, int]:
        per_q = self._grades.get(query_id, {})
        return {d: g for d, g in per_q.items() if g >= 1}

    def judged(self, query_id: str) -> frozenset[str]:
        return frozenset(self._grades.get(query_id, {}))

    def query_ids(self) -> list[str]:
        return sorted(self._grades)

    def rows(self) -> list[tuple[str, str, int]]:
        return [(q, d, g)
                for q in sorted(self._grades)
                for d, g in sorted(self._grades[q].items())]

    def __contains__(self, query_id: str) -> bool:
        return query_id in self._grades

    def __eq__(self, other) -> bool:
        return isinstance(other, Judgments) and self._grades == other._grades


Corpus = dict[str, Document]
QuerySet = dict[str, Query]


def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{line_no}: expected a JSON object")
            yield line_no, obj


def _require(obj: dict, key: str, path: Path, line_no: int) -> str:
    if key not in obj:
        raise ParseError(f"{path}:{line_no}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, str):
        raise ParseError(f"{path}:{line_no}: field {key!r} must be a string")
    return val


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    corpus: Corpus = {}
    for line_no, obj in _iter_jsonl(path):
        doc_id = _require(obj, "_id", path, line_no)
        title = obj.get("title", "")
        text = _require(obj, "text", path, line_no)
        if not isinstance(title, str):
            raise ParseError(f"{path}:{line_no}: field 'title' must be a string")
        if doc_id in corpus:
            raise IntegrityError(f"{path}:{line_no}: duplicate doc id {doc_id!r}")
        corpus[doc_id] = Document(doc_id=doc_id, title=title, text=text)
    if not corpus:
        logger.warning("empty corpus loaded from %s", path)
    return corpus


def load_queries(path: str | Path) -> QuerySet:
    path = Path(path)
    queries: QuerySet = {}
    for line_no, obj in _iter_jsonl(path):
        qid = _require(obj, "_id", path, line_no)
        text = _require(obj, "text", path, line_no)
        if qid in queries:
            raise IntegrityError(f"{path}:{line_no}: duplicate query id {qid!r}")
        queries[qid] = Query(query_id=qid, text=text)
    if not queries:
        logger.warning("empty query set loaded from %s", path)
    return queries


_QRELS_HEADER_NAMES = {"query-id", "query_id", "qid"}


def load_qrels(path: str | Path) -> Judgments:
    path = Path(path)
    rows: list[tuple[str, str, int]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"{path}:{line_no}: expected 3 tab-separated fields, "
                    f"got {len(parts)}")
            qid, did, score = (p.strip() for p in parts)
            try:
                grade = int(score)
            except ValueError:
                # a single non-integer score on the first row is a header
                if line_no == 1 and (qid.lower() in _QRELS_HEADER_NAMES
                                     or not score.lstrip("-").isdigit()):
                    continue
                raise ParseError(
                    f"{path}:{line_no}: score {score!r} is not an integer")
            if grade < 0:
                raise ParseError(f"{path}:{line_no}: negative grade {grade}")
            rows.append((qid, did, grade))
    try:
        return Judgments(rows)
    except IntegrityError as exc:
        raise IntegrityError(f"{path}: {exc}") from exc


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(corpus):
            doc = corpus[doc_id]
            fh.write(json.dumps(
                {"_id": doc.doc_id, "title": doc.title, "text": doc.text},
                ensure_ascii=False) + "\n")


def save_queries(queries: QuerySet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in sorted(queries):
            q = queries[qid]
            fh.write(json.dumps({"_id": q.query_id, "text": q.text},
                                ensure_ascii=False) + "\n")


def save_qrels(judgments: Judgments, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query-id\tcorpus-id\tscore\n")
        for qid, did, grade in judgments.rows():
            fh.write(f"{qid}\t{did}\t{grade}\n")


def validate(corpus: Corpus, queries: QuerySet, judgments: Judgments) -> None:
    """Check referential integrity; raises IntegrityError naming every
    dangling id."""
    bad: list[str] = []
    for qid, did, _ in judgments.rows():
        if qid not in queries:
            bad.append(f"unknown query id {qid!r}")
        if did not in corpus:
            bad.append(f"unknown doc id {did!r} (query {qid!r})")
    if bad:
        raise IntegrityError("; ".join(sorted(set(bad))))


def make_pairs(queries: QuerySet, judgments: Judgments,
               corpus: Corpus) -> list[tuple[Query, Document]]:
    """Every (query, relevant document) combination, sorted by
    (query-id, doc-id).  Queries with no relevant docs contribute nothing."""
    pairs: list[tuple[Query, Document]] = []
    for qid in sorted(queries):
        rel = judgments.relevant(qid)
        for did in sorted(rel):
            if did not in corpus:
                raise IntegrityError(
                    f"judgment references unknown doc id {did!r} "
                    f"(query {qid!r})")
            pairs.append((queries[qid], corpus[did]))
    return pairs


# --------------------------------------------------------------------------
# training-instance serialization

def save_instances(instances: Iterable[TrainInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            negs = []
            for n in inst.negatives:
                row = {"text": n.text, "provenance": n.provenance.value,
                       "origin": n.origin}
                if n.doc_id is not None:
                    row["doc_id"] = n.doc_id
                negs.append(row)
            fh.write(json.dumps(
                {"query_id": inst.query.query_id,
                 "positive_id": inst.positive.doc_id,
                 "negatives": negs},
                ensure_ascii=False) + "\n")


def load_instances(path: str | Path, corpus: Corpus,
                   queries: QuerySet) -> list[TrainInstance]:
    path = Path(path)
    out: list[TrainInstance] = []
    for line_no, obj in _iter_jsonl(path):
        qid = _require(obj, "query_id", path, line_no)
        pid = _require(obj, "positive_id", path, line_no)
        if qid not in queries:
            raise IntegrityError(f"{path}:{line_no}: unknown query id {qid!r}")
        if pid not in corpus:
            raise IntegrityError(f"{path}:{line_no}: unknown doc id {pid!r}")
        raw_negs = obj.get("negatives")
        if not isinstance(raw_negs, list):
            raise ParseError(f"{path}:{line_no}: 'negatives' must be a list")
        negs = []
        for raw in raw_negs:
            try:
                prov = Provenance(raw["provenance"])
                negs.append(NegativeSample(
                    text=raw["text"], provenance=prov,
                    origin=raw.get("origin", ""), doc_id=raw.get("doc_id")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(
                    f"{path}:{line_no}: bad negative entry: {exc}") from exc
        out.append(TrainInstance(query=queries[qid], positive=corpus[pid],
                                 negatives=tuple(negs)))
    return out


def check_no_false_negatives(instances: Iterable[TrainInstance],
                             judgments: Judgments) -> None:
    """Assert no instance carries a negative judged relevant for its query."""
    for inst in instances:
        rel = judgments.relevant(inst.query.query_id)
        for neg in inst.negatives:
            if neg.doc_id is not None and neg.doc_id in rel:
                raise IntegrityError(
                    f"instance ({inst.query.query_id!r}, "
                    f"{inst.positive.doc_id!r}) uses relevant doc "
                    f"{neg.doc_id!r} as a negative")


# --------------------------------------------------------------------------
# synthetic topic-model dataset

@dataclass(frozen=True)
class SynthParams:
    """Knobs for the built-in topic-model corpus generator."""
    topics: int = 4
    docs_per_topic: int = 50
    queries: int = 60
    vocab: int = 240
    doc_len: int = 60
    query_terms: int = 5          # distinct terms per query, >= 3
    query_common_terms: int = 0   # shared-pool "stopwords" mixed into queries
    query_entity_terms: int = 3   # entity names copied into each query
    queries_per_target: int = 3   # related queries answered by one target doc
    entity_terms_per_doc: int = 3  # names unique to one clean doc
    entity_occurrences: int = 2   # times each name repeats in its doc
    common_fraction: float = 0.15  # share of doc tokens from the shared pool
    noise_fraction: float = 0.10   # share of doc tokens from other topics
    chaff_per_topic: int = 15     # spam docs within each topic (incl. doorways)
    chaff_spam_fraction: float = 0.30  # spam-token share inside a chaff doc
    chaff_len_multiplier: float = 2.0  # chaff docs are stuffed, hence longer
    spam_words: int = 12          # vocabulary reserved for chaff boilerplate
    doorways_per_target: int = 1  # keyword-stuffed spam aimed at each target

    def validate(self) -> None:
        if self.topics < 1 or self.docs_per_topic < 2 or self.queries < 1:
            raise ParameterError("topics >= 1, docs_per_topic >= 2, queries >= 1")
        if self.query_terms < 3:
            raise ParameterError("query_terms must be >= 3")
        if self.query_common_terms < 0:
            raise ParameterError("query_common_terms must be >= 0")
        if not 0 <= self.query_entity_terms <= self.entity_terms_per_doc:
            raise ParameterError(
                "query_entity_terms must be in [0, entity_terms_per_doc]")
        if self.query_entity_terms > self.query_terms - 2:
            raise ParameterError(
                "queries need at least 2 non-entity terms")
        if self.entity_terms_per_doc < 0 or self.entity_occurrences < 1:
            raise ParameterError(
                "entity_terms_per_doc must be >= 0 and occurrences >= 1")
        if self.queries_per_target < 1:
            raise ParameterError("queries_per_target must be >= 1")
        if not 0 <= self.chaff_per_topic < self.docs_per_topic:
            raise ParameterError(
                "chaff_per_topic must leave at least one clean doc per topic")
        if not 0.0 < self.chaff_spam_fraction < 1.0:
            raise ParameterError("chaff_spam_fraction must be in (0, 1)")
        if self.chaff_len_multiplier < 1.0:
            raise ParameterError("chaff_len_multiplier must be >= 1")
        if self.spam_words < 4:
            raise ParameterError("spam_words must be >= 4")
        if self.doorways_per_target < 0:
            raise ParameterError("doorways_per_target must be >= 0")
        if self.vocab < self.topics * 12 + 12 + self.spam_words:
            raise ParameterError("vocab too small for the requested topic count")
        n_fixed = (int(round(self.doc_len * self.common_fraction))
                   + int(round(self.doc_len * self.noise_fraction))
                   + self.entity_terms_per_doc * self.entity_occurrences)
        if self.doc_len - n_fixed < 8:
            raise ParameterError(
                "doc_len leaves fewer than 8 topic tokens per document")
        n_targets = -(-self.queries // self.queries_per_target)
        if n_targets > self.topics * (self.docs_per_topic
                                      - self.chaff_per_topic):
            raise ParameterError("more target slots than clean documents")
        per_topic_targets = -(-n_targets // self.topics)
        if per_topic_targets * self.doorways_per_target > self.chaff_per_topic:
            raise ParameterError(
                "doorway docs per topic exceed chaff_per_topic; lower "
                "doorways_per_target or raise chaff_per_topic")


_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _make_vocab(rng: np.random.Generator, size: int) -> list[str]:
    """Pronounceable pseudo-words, distinct, in generation order."""
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        n_syll = int(rng.integers(2, 4))
        word = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))]
            + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(n_syll))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _vocab_pools(rng: np.random.Generator, params: SynthParams,
                 n_entities: int = 0
                 ) -> tuple[list[str], list[str], list[list[str]], list[str]]:
    # entity words come last so the leading pools are identical whether or
    # not a caller asks for them
    common_size = max(8, params.vocab // 6)
    spam_size = params.spam_words
    per_topic = (params.vocab - common_size - spam_size) // params.topics
    base = common_size + spam_size
    vocab = _make_vocab(rng, base + per_topic * params.topics + n_entities)
    common_pool = vocab[:common_size]
    spam_pool = vocab[common_size:base]
    topic_pools = [vocab[base + t * per_topic: base + (t + 1) * per_topic]
                   for t in range(params.topics)]
    entity_words = vocab[base + per_topic * params.topics:]
    return common_pool, spam_pool, topic_pools, entity_words


def synth_vocabulary(seed: int,
                     params: SynthParams = SynthParams()
                     ) -> list[list[str]]:
    """Topic term pools behind :func:`synth_dataset` for the same seed.

    Returns one list of terms per topic, in topic order.  The mock
    generation client takes these pools to draw same-topic distractor
    terms; shared-pool and spam words are deliberately absent so they are
    never treated as topical.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    _, _, topic_pools, _ = _vocab_pools(rng, params)
    return topic_pools


def synth_dataset(seed: int,
                  params: SynthParams = SynthParams()
                  ) -> tuple[Corpus, QuerySet, Judgments]:
    """Deterministic topic-model dataset.

    Each document draws most tokens from its topic's term pool, some from a
    shared pool, and a few from other topics, so every query has natural
    same-topic hard negatives.  Every clean document also carries
    ``entity_terms_per_doc`` names of its own: corpus-unique tokens that
    identify the document the way product codes or person names do.  Target
    documents are "popular": each answers ``queries_per_target`` related
    queries.  A query copies ``query_entity_terms`` of its target's names
    plus topic terms that occur in the target, ``query_terms`` distinct
    terms in all; it can also mix in ``query_common_terms`` shared-pool
    words that behave like stopwords.

    Popular pages attract doorway spam: each target also gets
    ``doorways_per_target`` pages stuffed with its queries' search terms,
    each term repeated exactly as often as the real page uses it, padded
    out to ``doc_len`` with ad-tracking garbage strings.  A doorway
    matches its queries as well as the answer page does while sharing
    none of its body, yet it carries no relevance judgment (the real page
    is the answer, not the spam), so lexical retrieval mines it as the
    top negative for its queries: exactly the trap that makes retrieved
    negative pools risky.  The garbage strings are unique to each
    doorway, the way tracking ids are.  Ordinary chaff fills any
    remaining spam slots per topic.
    """
    params.validate()
    rng = np.random.default_rng(seed)

    clean_per_topic = params.docs_per_topic - params.chaff_per_topic
    n_entities = (params.topics * clean_per_topic
                  * params.entity_terms_per_doc)
    common_pool, spam_pool, topic_pools, entity_words = \
        _vocab_pools(rng, params, n_entities)
    common_size = len(common_pool)
    spam_size = len(spam_pool)
    per_topic = len(topic_pools[0])

    def entities_of(topic: int, slot: int) -> list[str]:
        at = (topic * clean_per_topic + slot) * params.entity_terms_per_doc
        return entity_words[at:at + params.entity_terms_per_doc]

    clean_tokens: list[list[list[str]]] = []
    for topic in range(params.topics):
        per_topic_docs: list[list[str]] = []
        for slot in range(clean_per_topic):
            n_common = int(round(params.doc_len * params.common_fraction))
            n_noise = int(round(params.doc_len * params.noise_fraction))
            n_entity = params.entity_terms_per_doc * params.entity_occurrences
            n_topic = params.doc_len - n_common - n_noise - n_entity
            toks = [topic_pools[topic][int(rng.integers(per_topic))]
                    for _ in range(n_topic)]
            toks += [common_pool[int(rng.integers(common_size))]
                     for _ in range(n_common)]
            if params.topics > 1:
                for _ in range(n_noise):
                    other = int(rng.integers(params.topics - 1))
                    if other >= topic:
                        other += 1
                    toks.append(
                        topic_pools[other][int(rng.integers(per_topic))])
            else:
                toks += [common_pool[int(rng.integers(common_size))]
                         for _ in range(n_noise)]
            toks += entities_of(topic, slot) * params.entity_occurrences
            toks = [toks[p] for p in rng.permutation(len(toks))]
            per_topic_docs.append(toks)
        clean_tokens.append(per_topic_docs)

    # targets are clean docs only, so no spam doc is ever judged relevant;
    # stratifying targets across topics keeps per-topic doorway counts
    # within the spam budget and balances the query workload
    qpt = params.queries_per_target
    n_targets = -(-params.queries // qpt)
    t_counts = [n_targets // params.topics] * params.topics
    for t in rng.permutation(params.topics)[:n_targets % params.topics]:
        t_counts[int(t)] += 1
    target_slots: list[list[int]] = []
    for topic in range(params.topics):
        perm = rng.permutation(clean_per_topic)
        target_slots.append(sorted(int(s) for s in perm[:t_counts[topic]]))
    targets = [(topic, slot) for topic in range(params.topics)
               for slot in target_slots[topic]]

    def clean_doc_id(topic: int, slot: int) -> str:
        return f"d{topic * params.docs_per_topic + slot + 1:04d}"

    queries: QuerySet = {}
    qrel_rows: list[tuple[str, str, int]] = []
    topic_sets = [set(pool) for pool in topic_pools]
    query_terms_of: dict[tuple[int, int], set[str]] = {t: set()
                                                       for t in targets}
    for qn in range(params.queries):
        topic, slot = targets[qn // qpt]
        toks = clean_tokens[topic][slot]
        doc_topic_terms = sorted({t for t in toks if t in topic_sets[topic]})
        names = entities_of(topic, slot)
        n_names = min(params.query_entity_terms, len(names))
        k = min(params.query_terms - n_names, len(doc_topic_terms))
        if k + n_names < 3:
            raise IntegrityError(
                f"generated document {clean_doc_id(topic, slot)} has only "
                f"{k} distinct topic terms; increase doc_len or lower noise")
        npick = rng.permutation(len(names))[:n_names]
        pick = rng.permutation(len(doc_topic_terms))[:k]
        terms = ([names[j] for j in sorted(npick)]
                 + [doc_topic_terms[j] for j in sorted(pick)])
        # shared-pool words play the role of stopwords: they match almost
        # every document, so ranking must learn to discount them
        n_common_q = min(params.query_common_terms, common_size)
        if n_common_q:
            cpick = rng.permutation(common_size)[:n_common_q]
            terms = sorted(terms + [common_pool[j] for j in sorted(cpick)])
        qid = f"q{qn + 1:04d}"
        queries[qid] = Query(query_id=qid, text=" ".join(terms))
        qrel_rows.append((qid, clean_doc_id(topic, slot), 1))
        query_terms_of[(topic, slot)].update(terms)

    # doorways: keyword-stuffed spam aimed at the targets.  The stuffing
    # repeats each search term exactly as often as the real page does, so
    # the doorway matches the query without plagiarizing the body; the rest
    # is ad-tracking garbage.  Digit-bearing strings cannot collide with
    # the pronounceable vocabulary, and a seen-set keeps them unique across
    # doorways, so garbage ties a doorway to nothing else in the corpus
    seen_junk: set[str] = set()
    _hex = "0123456789abcdef"

    def junk_string() -> str:
        while True:
            chars = [_hex[int(rng.integers(16))] for _ in range(6)]
            if not any(c.isdigit() for c in chars):
                chars[0] = str(int(rng.integers(10)))
            word = "".join(chars)
            if word not in seen_junk:
                seen_junk.add(word)
                return word

    doorway_tokens: list[list[list[str]]] = [[] for _ in range(params.topics)]
    for topic, slot in targets:
        source = clean_tokens[topic][slot]
        stuffing = [t for term in sorted(query_terms_of[(topic, slot)])
                    for t in [term] * source.count(term)]
        for _ in range(params.doorways_per_target):
            toks = list(stuffing)
            while len(toks) < params.doc_len:
                toks.append(junk_string())
            doorway_tokens[topic].append(toks)

    # ordinary chaff: keyword-stuffed topic spam plus a boilerplate run from
    # the spam pool; matches most queries of its topic at retrieval time but
    # is never a relevance target
    chaff_tokens: list[list[list[str]]] = [[] for _ in range(params.topics)]
    for topic in range(params.topics):
        n_chaff = params.chaff_per_topic - len(doorway_tokens[topic])
        if n_chaff < 0:
            raise IntegrityError(
                f"topic {topic} needs {len(doorway_tokens[topic])} doorway "
                f"slots but chaff_per_topic is {params.chaff_per_topic}")
        for _ in range(n_chaff):
            chaff_len = int(round(params.doc_len
                                  * params.chaff_len_multiplier))
            n_spam = max(1, int(round(chaff_len
                                      * params.chaff_spam_fraction)))
            toks = [topic_pools[topic][int(rng.integers(per_topic))]
                    for _ in range(chaff_len - n_spam)]
            toks = [toks[p] for p in rng.permutation(len(toks))]
            # boilerplate stays contiguous, like a repeated page footer
            footer = [spam_pool[(int(rng.integers(spam_size)) + r)
                               % spam_size] for r in range(n_spam)]
            at = int(rng.integers(len(toks) + 1))
            chaff_tokens[topic].append(toks[:at] + footer + toks[at:])

    corpus: Corpus = {}
    doc_index = 0
    for topic in range(params.topics):
        block = (clean_tokens[topic] + doorway_tokens[topic]
                 + chaff_tokens[topic])
        for toks in block:
            doc_id = f"d{doc_index + 1:04d}"
            corpus[doc_id] = Document(doc_id=doc_id, title="",
                                      text=" ".join(toks))
            doc_index += 1

    return corpus, queries, Judgments(qrel_rows)


def split_query_ids(queries: QuerySet, n_train: int,
                    seed: int) -> tuple[list[str], list[str]]:
    """Deterministic train/held-out split over sorted query ids."""
    ids = sorted(queries)
    if not 0 <= n_train <= len(ids):
        raise ParameterError(
            f"n_train={n_train} out of range for {len(ids)} queries")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    train = sorted(ids[i] for i in order[:n_train])
    heldout = sorted(ids[i] for i in order[n_train:])
    return train, heldout
