"""Tokenization and shingle helpers used by the retriever, the featurizer
and near-duplicate filtering.  One tokenizer everywhere keeps lexical
behaviour consistent across components."""

import re

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run."""
    return _TOKEN_RE.findall(text.lower())


def word_shingles(text: str, n: int = 3) -> set[tuple[str, ...]]:
    """Set of n-word shingles; texts shorter than n yield the single
    truncated shingle so Jaccard stays defined for tiny inputs."""
    toks = tokenize(text)
    if not toks:
        return set()
    if len(toks) < n:
        return {tuple(toks)}
    return {tuple(toks[i:i + n]) for i in range(len(toks) - n + 1)}


def shingle_jaccard(a: str, b: str, n: int = 3) -> float:
    """Jaccard similarity of n-word shingle sets; 0.0 when both empty."""
    sa, sb = word_shingles(a, n), word_shingles(b, n)
    if not sa and not sb:
        return 0.0
    inter = len(sa & sb)
    union = len(sa | sb)
    return inter / union if union else 0.0
