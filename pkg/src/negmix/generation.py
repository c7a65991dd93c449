"""Synthetic hard-negative generation.

A prompt asks a chat model to study one (query, positive document) example
and write three hard negatives plus its reasoning, as a single JSON object.
The full prompt carries three sampled attributes (domain, reading level,
length phrase); the simple prompt keeps only the task and format rules.

Responses are cached on disk keyed by a 256-bit hash of
(model, temperature, rendered prompt), so reruns with an unchanged config
never touch the network.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from .data import Document, Query
from .errors import GenerationError, ParameterError, ParseError, SchemaError
from .text import shingle_jaccard

logger = logging.getLogger(__name__)

NEGATIVE_KEYS = ("hard_negative_document_1", "hard_negative_document_2",
                 "hard_negative_document_3")

FULL_TEMPLATE = """\
Assume you are an expert in {domain_name}, and there is a example with a "user_query" and its related doc "positive_document".

example: {example}

[Task Definition]
Your task is to write three hard negative samples in JSON format. The JSON object must contain the following keys:
- "reasoning": a string, reasoning steps on how to generate three hard negative documents.
- "hard_negative_document_1": a string, a hard-negative document to the user query.
- "hard_negative_document_2": a string, a hard-negative document to the user query.
- "hard_negative_document_3": a string, a hard-negative document to the user query.

[Reasoning Definition]
- Write the inference process step by step in "reasoning", including how to associate from the "user_query" and "positive_document" to get the hard-negative documents.

[Hard Negatives Definition]
- All the hard negative documents should use similar keywords or topics as the "positive_document".
- All the hard negative documents appear to address the "user_query" at first glance. However, subtly diverges in content or context such that it does not truly answer the query or meet the user's information need.
- All the hard negative documents should be plausible and accurate documents, they should be diverse in topic, sources, and styles.

[Attributes Definition]
- All the negative documents should be in the education level of {difficult_level} to comprehend, and the length should be {length} the "positive_document".

[Format Definition]
- Your output must always be a JSON object only, do not explain yourself or output anything else.
"""

SIMPLE_TEMPLATE = """\
Assume you are an expert in {domain_name}, and there is a example with a "user_query" and its related doc "positive_document".
example:{example_q_pd}

Your task is to write three hard negative samples in JSON format. The JSON object must contain the following keys:
- "hard_negative_document_1": a string, a hard-negative document to the user query.
- "hard_negative_document_2": a string, a hard-negative document to the user query.
- "hard_negative_document_3": a string, a hard-negative document to the user query.

- All the hard negative documents length should be approximately the same as the "positive_document".
- Your output must always be a JSON object only, do not explain yourself or output anything else.
"""


class PromptTemplate(str, Enum):
    FULL = "full"
    SIMPLE = "simple"


@dataclass(frozen=True)
class AttributePools:
    """Candidate values for the three prompt attributes."""
    domain_name: tuple[str, ...]
    difficulty_level: tuple[str, ...]
    length_phrase: tuple[str, ...]

    def __post_init__(self):
        for name in ("domain_name", "difficulty_level", "length_phrase"):
            if not getattr(self, name):
                raise ParameterError(f"attribute pool {name!r} is empty")


@dataclass(frozen=True)
class AttributeSet:
    domain_name: str
    difficulty_level: str
    length_phrase: str


_FOUNDATIONAL = "Foundational (Equivalent to Elementary and Middle School)"
_INTERMEDIATE = "Intermediate (High School and Undergraduate)"
_ADVANCED = "Advanced (Postgraduate and Beyond)"
_LENGTHS = ("approximately the same as", "nearly the same as")

BUILTIN_POOLS: dict[str, AttributePools] = {
    "scifact": AttributePools(
        domain_name=("Epidemiology", "Public Health", "Virology",
                     "Biostatistics", "Healthcare Policy",
                     "Infectious Diseases", "Bioinformatics",
                     "Medical Research", "Pharmacology"),
        difficulty_level=(_FOUNDATIONAL, _INTERMEDIATE),
        length_phrase=_LENGTHS),
    "fiqa": AttributePools(
        domain_name=("Finance",),
        difficulty_level=(_ADVANCED,),
        length_phrase=_LENGTHS),
    "quora": AttributePools(
        domain_name=("General knowledge",),
        difficulty_level=(_FOUNDATIONAL, _INTERMEDIATE),
        length_phrase=_LENGTHS),
    "hotpotqa": AttributePools(
        domain_name=("General knowledge",),
        difficulty_level=(_FOUNDATIONAL, _INTERMEDIATE),
        length_phrase=_LENGTHS),
    "msmarco": AttributePools(
        domain_name=("Question Answering",),
        difficulty_level=(_FOUNDATIONAL, _INTERMEDIATE),
        length_phrase=_LENGTHS),
    # fallback for synthetic corpora
    "general": AttributePools(
        domain_name=("General knowledge",),
        difficulty_level=(_FOUNDATIONAL, _INTERMEDIATE),
        length_phrase=_LENGTHS),
}


def sample_attributes(pools: AttributePools, rng_seed: int,
                      instance_index: int) -> AttributeSet:
    """One value per pool, uniform and independent.  Deterministic in
    (rng_seed, instance_index); the stream is PCG64 seeded with that pair."""
    if rng_seed < 0 or instance_index < 0:
        raise ParameterError("rng_seed and instance_index must be >= 0")
    rng = np.random.default_rng([rng_seed, instance_index])
    return AttributeSet(
        domain_name=pools.domain_name[int(rng.integers(len(pools.domain_name)))],
        difficulty_level=pools.difficulty_level[
            int(rng.integers(len(pools.difficulty_level)))],
        length_phrase=pools.length_phrase[
            int(rng.integers(len(pools.length_phrase)))])


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to render one generation prompt.

    ``attributes`` is required for the full template.  The simple template
    only consumes the domain slot; when attributes are absent it falls back
    to a neutral phrase.
    """
    template: PromptTemplate
    example_query: str
    example_positive: str
    attributes: AttributeSet | None = None


_NEUTRAL_DOMAIN = "the relevant subject area"


def render_example(query_text: str, positive_text: str) -> str:
    """The one-shot example as a two-field JSON object."""
    return json.dumps({"user_query": query_text,
                       "positive_document": positive_text},
                      ensure_ascii=False)


def render_prompt(spec: PromptSpec) -> str:
    example = render_example(spec.example_query, spec.example_positive)
    if spec.template is PromptTemplate.FULL:
        if spec.attributes is None:
            raise ParameterError("full template requires an attribute set")
        return FULL_TEMPLATE.format(
            domain_name=spec.attributes.domain_name,
            example=example,
            difficult_level=spec.attributes.difficulty_level,
            length=spec.attributes.length_phrase)
    domain = (spec.attributes.domain_name if spec.attributes is not None
              else _NEUTRAL_DOMAIN)
    return SIMPLE_TEMPLATE.format(domain_name=domain, example_q_pd=example)


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    if not text.startswith("```"):
        return text
    lines = text.splitlines()
    if lines and lines[0].startswith("```"):
        lines = lines[1:]
    if lines and lines[-1].strip() == "```":
        lines = lines[:-1]
    return "\n".join(lines).strip()


def parse_generation(raw: str,
                     template: PromptTemplate = PromptTemplate.FULL
                     ) -> tuple[str, list[str]]:
    """Parse a model completion into (reasoning, [neg1, neg2, neg3]).

    Accepts an optional markdown code fence around the object.  Extra
    top-level keys are ignored with a warning.  The simple template has no
    reasoning key; reasoning comes back empty.
    """
    text = _strip_fences(raw)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"completion is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("completion must be a single JSON object")

    expected = set(NEGATIVE_KEYS)
    if template is PromptTemplate.FULL:
        expected.add("reasoning")
    extra = set(obj) - expected
    if extra:
        logger.warning("ignoring extra keys in completion: %s",
                       ", ".join(sorted(extra)))

    if template is PromptTemplate.FULL:
        if "reasoning" not in obj:
            raise SchemaError("missing key 'reasoning'", key="reasoning")
        reasoning = obj["reasoning"]
        if not isinstance(reasoning, str):
            raise SchemaError("'reasoning' must be a string", key="reasoning")
    else:
        reasoning = ""

    negatives: list[str] = []
    for key in NEGATIVE_KEYS:
        if key not in obj:
            raise SchemaError(f"missing key {key!r}", key=key)
        value = obj[key]
        if not isinstance(value, str):
            raise SchemaError(f"{key!r} must be a string", key=key)
        if not value.strip():
            raise SchemaError(f"{key!r} is empty", key=key)
        negatives.append(value)
    return reasoning, negatives


# --------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class GenerationRecord:
    """One generation outcome plus enough context to join it back to its
    (query, positive) pair and to dedup against the positive."""
    id: str
    query_id: str
    positive_id: str
    positive: str
    template: PromptTemplate
    reasoning: str
    negatives: tuple[str, ...]
    attributes: AttributeSet | None
    model: str
    temperature: float
    prompt_tokens: int
    completion_tokens: int
    retries_used: int

    def payload(self) -> dict[str, str]:
        """The completion body this record corresponds to."""
        body = {}
        if self.template is PromptTemplate.FULL:
            body["reasoning"] = self.reasoning
        for key, neg in zip(NEGATIVE_KEYS, self.negatives):
            body[key] = neg
        return body

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["template"] = self.template.value
        d["negatives"] = list(self.negatives)
        d["attributes"] = (dataclasses.asdict(self.attributes)
                           if self.attributes is not None else None)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationRecord":
        attrs = d.get("attributes")
        return cls(
            id=d["id"], query_id=d["query_id"], positive_id=d["positive_id"],
            positive=d["positive"], template=PromptTemplate(d["template"]),
            reasoning=d["reasoning"], negatives=tuple(d["negatives"]),
            attributes=AttributeSet(**attrs) if attrs else None,
            model=d["model"], temperature=d["temperature"],
            prompt_tokens=d["prompt_tokens"],
            completion_tokens=d["completion_tokens"],
            retries_used=d["retries_used"])


def save_records(records: Sequence[GenerationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def load_records(path: str | Path) -> list[GenerationRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(GenerationRecord.from_dict(json.loads(line)))
    return out


# --------------------------------------------------------------------------
# clients

@dataclass(frozen=True)
class ClientResponse:
    content: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


class ChatClient(Protocol):
    def complete(self, model: str, messages: list[dict],
                 temperature: float) -> ClientResponse: ...


DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
API_KEY_ENV = "NEGMIX_API_KEY"


class HttpChatClient:
    """Minimal chat-completions client: POST one JSON body, bearer token
    from the environment."""

    def __init__(self, endpoint: str = DEFAULT_ENDPOINT,
                 api_key_env: str = API_KEY_ENV, timeout: float = 60.0):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, model: str, messages: list[dict],
                 temperature: float) -> ClientResponse:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise GenerationError(
                f"no API key: set the {self.api_key_env} environment variable")
        resp = requests.post(
            self.endpoint,
            json={"model": model, "messages": messages,
                  "temperature": temperature},
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=self.timeout)
        resp.raise_for_status()
        body = resp.json()
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ParseError(f"malformed completion body: {exc}") from exc
        usage = body.get("usage") or {}
        return ClientResponse(content=content,
                              prompt_tokens=usage.get("prompt_tokens"),
                              completion_tokens=usage.get("completion_tokens"))


class MockChatClient:
    """Offline stand-in that writes hard negatives by perturbing the
    positive document from the prompt's one-shot example.

    The salient terms of the positive are the ones the query asks about,
    so each negative swaps every occurrence of a query term (plus a
    configurable fraction of the document's other topic terms) for a
    same-topic distractor term.  The result stays on topic and keeps most
    of the positive's vocabulary but no longer answers the query.  Like a
    sampling loop stuck near one mode, the candidates are repetitive: the
    second and third reuse the first candidate's swaps and change just
    one more term each, so downstream near-duplicate filtering usually
    keeps only the first.  ``vocabulary`` supplies the term pools that
    define topicality: a token counts as a topic term when it belongs to
    a pool, and its replacements come from the same pool, preferring
    terms the document does not already contain.  Query terms outside
    every pool (names, codes) still get swapped; their replacements are
    drawn from the document's own other tokens.  Without pools every
    position is fair game and the document's own distinct tokens donate,
    which keeps short or unstructured corpora working.  Output is a pure
    function of (seed, prompt).
    """

    # fraction of the non-query topic positions also swapped in the base
    # perturbation, on top of every query-term occurrence
    REPLACE_FRACTION = 0.0

    def __init__(self, seed: int = 0,
                 vocabulary: Sequence[Sequence[str]] | Sequence[str]
                 | None = None):
        self.seed = seed
        pools: list[list[str]]
        if not vocabulary:
            pools = []
        elif isinstance(next(iter(vocabulary)), str):
            pools = [sorted(set(vocabulary))]  # flat list: one pool
        else:
            pools = [list(p) for p in vocabulary]
        self._pools = pools
        self._pool_of = {term: k for k, pool in enumerate(pools)
                         for term in pool}

    def _example_from_prompt(self, prompt: str) -> tuple[str, str]:
        for line in prompt.splitlines():
            if line.startswith("example:"):
                obj = json.loads(line[len("example:"):].strip())
                return obj["user_query"], obj["positive_document"]
        raise ParseError("prompt carries no one-shot example")

    def _distractor(self, old: str, doc_tokens: set[str],
                    rng: np.random.Generator,
                    avoid: frozenset[str]) -> str:
        """Same-pool term, fresh to the document when possible.  Never a
        query term: the negative must stop answering the query."""
        k = self._pool_of.get(old)
        if k is not None:
            pool = self._pools[k]
            fresh = [w for w in pool if w not in doc_tokens and w not in avoid]
            if fresh:
                return fresh[int(rng.integers(len(fresh)))]
            alts = [w for w in pool if w != old and w not in avoid]
            if alts:
                return alts[int(rng.integers(len(alts)))]
        others = sorted(doc_tokens - {old} - avoid)
        if others:
            return others[int(rng.integers(len(others)))]
        return old[1:] + old[:1] if len(old) > 1 else old + "x"

    def _salient(self, tokens: list[str], query_terms: frozenset[str]
                 ) -> tuple[list[int], list[int]]:
        """Positions split into (query-term hits, other swappable spots)."""
        hits = [i for i, t in enumerate(tokens) if t in query_terms]
        rest = [i for i, t in enumerate(tokens)
                if t not in query_terms and t in self._pool_of]
        if not hits and not rest:       # no pools, nothing matched the query
            rest = list(range(len(tokens)))
        return hits, rest

    def _swaps(self, tokens: list[str], positions: Sequence[int],
               query_terms: frozenset[str],
               rng: np.random.Generator) -> dict[int, str]:
        doc_tokens = set(tokens)
        swaps: dict[int, str] = {}
        for pos in positions:
            old = tokens[pos]
            cand = self._distractor(old, doc_tokens, rng, query_terms)
            if cand == old:            # rotation-invariant tokens like "aa"
                cand = old + "x"
            swaps[pos] = cand
        return swaps

    def _candidates(self, tokens: list[str], query_terms: frozenset[str],
                    rng: np.random.Generator) -> list[str]:
        hits, rest = self._salient(tokens, query_terms)
        order = [rest[int(i)] for i in rng.permutation(len(rest))]
        n_extra = min(len(rest),
                      int(round(self.REPLACE_FRACTION * len(rest))))
        picked = hits + order[:n_extra]
        if not picked:                  # query shares nothing: swap one spot
            picked, n_extra = order[:1], 1
        base = self._swaps(tokens, sorted(picked), query_terms, rng)
        leftovers = order[n_extra:]
        candidates = []
        for extra in range(len(NEGATIVE_KEYS)):
            swaps = dict(base)
            if extra and leftovers:
                # later candidates rehash the first with one more swap
                pos = leftovers[(extra - 1) % len(leftovers)]
                swaps.update(self._swaps(tokens, [pos], query_terms, rng))
            elif extra:
                # nothing left to swap: redo one donor instead
                pos = sorted(base)[(extra - 1) % len(base)]
                swaps.update(self._swaps(tokens, [pos], query_terms, rng))
            out = [swaps.get(i, t) for i, t in enumerate(tokens)]
            candidates.append(" ".join(out))
        return candidates

    def complete(self, model: str, messages: list[dict],
                 temperature: float) -> ClientResponse:
        prompt = messages[-1]["content"]
        query, positive = self._example_from_prompt(prompt)
        tokens = positive.split()
        if not tokens:
            raise ParseError("positive document in prompt is empty")
        query_terms = frozenset(query.split())
        digest = hashlib.sha256(prompt.encode("utf-8")).digest()
        rng = np.random.default_rng(
            [self.seed] + [int.from_bytes(digest[i:i + 8], "big")
                           for i in range(0, 32, 8)])
        # every candidate swaps at least one token for a different one, so
        # none of them can reproduce the positive byte for byte
        negatives = self._candidates(tokens, query_terms, rng)
        body: dict[str, str] = {}
        if '"reasoning"' in prompt:
            body["reasoning"] = (
                "Replaced each occurrence of the query's own terms in the "
                "document with related same-topic terms, so every candidate "
                "keeps the document's topic and most of its wording but no "
                "longer answers the query; the candidates differ from each "
                "other by one further swap.")
        body.update(zip(NEGATIVE_KEYS, negatives))
        return ClientResponse(content=json.dumps(body, ensure_ascii=False))


def mock_client(seed: int = 0,
                vocabulary: Sequence[Sequence[str]] | Sequence[str]
                | None = None) -> MockChatClient:
    return MockChatClient(seed=seed, vocabulary=vocabulary)


# --------------------------------------------------------------------------
# generation driver

@dataclass(frozen=True)
class GenConfig:
    model: str = "mock"
    temperature: float = 0.7
    max_retries: int = 3
    cache_dir: str | None = None
    seed: int = 0
    template: PromptTemplate = PromptTemplate.FULL
    concurrency: int = 4

    def __post_init__(self):
        if self.max_retries < 0:
            raise ParameterError("max_retries must be >= 0")
        if self.concurrency < 1:
            raise ParameterError("concurrency must be >= 1")


def cache_key(model: str, temperature: float, prompt: str) -> str:
    blob = "\x1f".join([model, repr(float(temperature)), prompt])
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _atomic_write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


_RETRYABLE = (requests.RequestException, OSError, ParseError, SchemaError)


def generate(client: ChatClient, pair: tuple[Query, Document],
             pools: AttributePools, cfg: GenConfig,
             instance_index: int = 0) -> GenerationRecord:
    """Produce (or fetch from cache) one generation record for a pair.

    Malformed or failed responses are re-requested up to cfg.max_retries
    times; after that a GenerationError carries the last cause.  A cache
    hit performs no client call at all.
    """
    query, doc = pair
    attrs = sample_attributes(pools, cfg.seed, instance_index)
    positive_text = doc.single_text()
    spec = PromptSpec(template=cfg.template, example_query=query.text,
                      example_positive=positive_text, attributes=attrs)
    prompt = render_prompt(spec)
    key = cache_key(cfg.model, cfg.temperature, prompt)

    cache_path = (Path(cfg.cache_dir) / f"{key}.json"
                  if cfg.cache_dir else None)
    if cache_path is not None and cache_path.exists():
        with open(cache_path, encoding="utf-8") as fh:
            return GenerationRecord.from_dict(json.load(fh))

    messages = [{"role": "user", "content": prompt}]
    last_exc: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        try:
            resp = client.complete(model=cfg.model, messages=messages,
                                   temperature=cfg.temperature)
            reasoning, negatives = parse_generation(resp.content, cfg.template)
            if any(neg == positive_text for neg in negatives):
                raise SchemaError("negative equals the positive document")
        except _RETRYABLE as exc:
            last_exc = exc
            logger.warning("generation attempt %d failed for pair (%s, %s): %s",
                           attempt + 1, query.query_id, doc.doc_id, exc)
            continue
        prompt_tokens = (resp.prompt_tokens if resp.prompt_tokens is not None
                         else estimate_tokens(prompt))
        completion_tokens = (resp.completion_tokens
                             if resp.completion_tokens is not None
                             else estimate_tokens(resp.content))
        record = GenerationRecord(
            id=key, query_id=query.query_id, positive_id=doc.doc_id,
            positive=positive_text, template=cfg.template,
            reasoning=reasoning, negatives=tuple(negatives),
            attributes=attrs, model=cfg.model, temperature=cfg.temperature,
            prompt_tokens=prompt_tokens, completion_tokens=completion_tokens,
            retries_used=attempt)
        if cache_path is not None:
            _atomic_write_json(record.to_dict(), cache_path)
        return record
    raise GenerationError(
        f"generation failed for pair ({query.query_id!r}, {doc.doc_id!r}) "
        f"after {cfg.max_retries} retries: {last_exc}") from last_exc


def generate_all(client: ChatClient,
                 pairs: Sequence[tuple[Query, Document]],
                 pools: AttributePools,
                 cfg: GenConfig) -> list[GenerationRecord]:
    """Records for every pair, in pair order, with up to cfg.concurrency
    requests in flight."""
    if not pairs:
        return []
    with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
        futures = [pool.submit(generate, client, pair, pools, cfg, i)
                   for i, pair in enumerate(pairs)]
        return [f.result() for f in futures]


def records_by_pair(records: Sequence[GenerationRecord]
                    ) -> dict[tuple[str, str], GenerationRecord]:
    out: dict[tuple[str, str], GenerationRecord] = {}
    for rec in records:
        pair_key = (rec.query_id, rec.positive_id)
        if pair_key in out:
            logger.warning("duplicate record for pair %s; keeping the first",
                           pair_key)
            continue
        out[pair_key] = rec
    return out


def dedup(records: Sequence[GenerationRecord],
          jaccard_threshold: float = 0.9) -> list[GenerationRecord]:
    """Drop near-duplicate negatives by 3-word-shingle Jaccard.

    A negative is dropped when its similarity with any earlier-kept
    negative (across the whole sequence) or with its own positive reaches
    the threshold.  Records that lose all three negatives are dropped whole
    with a warning.
    """
    if not 0.0 < jaccard_threshold <= 1.0:
        raise ParameterError(
            f"jaccard_threshold must be in (0, 1], got {jaccard_threshold}")
    kept: list[GenerationRecord] = []
    kept_texts: list[str] = []
    for rec in records:
        survivors: list[str] = []
        for neg in rec.negatives:
            references = [rec.positive] + kept_texts + survivors
            if any(shingle_jaccard(neg, ref) >= jaccard_threshold
                   for ref in references):
                continue
            survivors.append(neg)
        if not survivors:
            logger.warning("record %s lost every negative in dedup; dropped",
                           rec.id)
            continue
        kept.append(dataclasses.replace(rec, negatives=tuple(survivors)))
        kept_texts.extend(survivors)
    return kept


def token_totals(records: Sequence[GenerationRecord]) -> dict[str, int]:
    return {"prompt_tokens": sum(r.prompt_tokens for r in records),
            "completion_tokens": sum(r.completion_tokens for r in records),
            "records": len(records)}
