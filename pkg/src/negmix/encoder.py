"""Hashed lexical dual encoder.

Texts become L2-normalized bags of word unigrams and bigrams hashed into
``v_dim`` buckets (CRC32, stable across processes); the encoder is a single
linear map W so an embedding is W^T x and similarity is a plain dot
product.  Small, transparent, and cheap enough to train on a laptop, which
is the point: the training dynamics are what we study, not the encoder.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Corpus
from .errors import ParameterError, ParseError
from .text import tokenize


@dataclass(frozen=True)
class SparseVector:
    """Sorted unique bucket indices with their weights."""
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense


def _bucket(ngram: str, v_dim: int) -> int:
    return zlib.crc32(ngram.encode("utf-8")) % v_dim


def featurize(text: str, v_dim: int) -> SparseVector:
    """Unigram+bigram counts hashed into v_dim buckets, L2-normalized.
    Empty or token-free text maps to the zero vector."""
    if v_dim < 1:
        raise ParameterError(f"v_dim must be >= 1, got {v_dim}")
    toks = tokenize(text)
    counts: dict[int, float] = {}
    for tok in toks:
        idx = _bucket(tok, v_dim)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    for a, b in zip(toks, toks[1:]):
        idx = _bucket(a + " " + b, v_dim)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    if not counts:
        return SparseVector(indices=np.empty(0, dtype=np.int64),
                            values=np.empty(0), dim=v_dim)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices])
    values = values / np.linalg.norm(values)
    return SparseVector(indices=indices, values=values, dim=v_dim)


@dataclass
class EncoderParams:
    v_dim: int
    emb_dim: int
    seed: int
    weights: np.ndarray     # (v_dim, emb_dim) float64

    def __post_init__(self):
        if self.weights.shape != (self.v_dim, self.emb_dim):
            raise ParameterError(
                f"weights shape {self.weights.shape} does not match "
                f"({self.v_dim}, {self.emb_dim})")


def init_params(v_dim: int, emb_dim: int, seed: int) -> EncoderParams:
    """W ~ uniform(-1/sqrt(emb_dim), +1/sqrt(emb_dim)), PCG64 stream."""
    if v_dim < 1 or emb_dim < 1:
        raise ParameterError("v_dim and emb_dim must be >= 1")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(emb_dim)
    weights = rng.uniform(-bound, bound, size=(v_dim, emb_dim))
    return EncoderParams(v_dim=v_dim, emb_dim=emb_dim, seed=seed,
                         weights=weights)


def encode_sparse(params: EncoderParams, vec: SparseVector) -> np.ndarray:
    if vec.dim != params.v_dim:
        raise ParameterError(
            f"feature dim {vec.dim} does not match encoder v_dim "
            f"{params.v_dim}")
    if len(vec.indices) == 0:
        return np.zeros(params.emb_dim)
    return params.weights[vec.indices].T @ vec.values


def encode(params: EncoderParams, text: str) -> np.ndarray:
    return encode_sparse(params, featurize(text, params.v_dim))


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ParameterError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


class FeatureCache:
    """Memoized featurize over one v_dim; texts repeat heavily in training."""

    def __init__(self, v_dim: int):
        self.v_dim = v_dim
        self._cache: dict[str, SparseVector] = {}

    def get(self, text: str) -> SparseVector:
        vec = self._cache.get(text)
        if vec is None:
            vec = featurize(text, self.v_dim)
            self._cache[text] = vec
        return vec


def encode_corpus(params: EncoderParams, corpus: Corpus
                  ) -> tuple[list[str], np.ndarray]:
    """Embeddings for every document, rows ordered by ascending doc id."""
    ids = sorted(corpus)
    mat = np.zeros((len(ids), params.emb_dim))
    for row, doc_id in enumerate(ids):
        mat[row] = encode(params, corpus[doc_id].single_text())
    return ids, mat


# --------------------------------------------------------------------------
# checkpoint format: magic, header (v_dim, emb_dim, seed), then the weight
# matrix row-major as little-endian float64

_MAGIC = b"NMXE"
_HEADER = struct.Struct("<4sIIq")


def save_checkpoint(params: EncoderParams, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, params.v_dim, params.emb_dim,
                              params.seed))
        fh.write(np.ascontiguousarray(params.weights,
                                      dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> EncoderParams:
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ParseError(f"{path}: truncated checkpoint header")
        magic, v_dim, emb_dim, seed = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise ParseError(f"{path}: bad checkpoint magic {magic!r}")
        body = fh.read()
    expected = v_dim * emb_dim * 8
    if len(body) != expected:
        raise ParseError(
            f"{path}: checkpoint body has {len(body)} bytes, expected "
            f"{expected}")
    weights = np.frombuffer(body, dtype="<f8").reshape(v_dim, emb_dim)
    return EncoderParams(v_dim=v_dim, emb_dim=emb_dim, seed=seed,
                         weights=weights.astype(np.float64, copy=True))
