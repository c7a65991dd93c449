"""Contrastive training of the hashed dual encoder.

The loss per instance is softmax cross-entropy over one positive and its
negatives at temperature tau, computed with max-subtraction so extreme
score/temperature ratios stay finite.  Both the query and the documents
pass through the same weight matrix W, so the exact gradient of the score
s_j = (W^T x_q) . (W^T x_j) has two terms:

    ds_j/dW = x_q h_j^T + x_j h_q^T      with h = W^T x

Training is plain full-gradient descent over seeded shuffled batches.
During the first ``record_grad_epoch`` epochs every component of every
per-step gradient matrix streams through a uniform reservoir; the
population variance of that sample is the per-run gradient-noise figure
used to compare mixing strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import TrainInstance
from .encoder import EncoderParams, FeatureCache, init_params
from .errors import NumericError, ParameterError

RESERVOIR_SIZE = 100_000


@dataclass(frozen=True)
class TrainConfig:
    v_dim: int = 2 ** 15
    emb_dim: int = 64
    lr: float = 0.1
    batch_size: int = 4
    epochs: int = 5
    tau: float = 0.02
    seed: int = 0
    record_grad_epoch: int = 1
    reservoir_size: int = RESERVOIR_SIZE

    def __post_init__(self):
        if self.v_dim < 1 or self.emb_dim < 1:
            raise ParameterError("v_dim and emb_dim must be >= 1")
        if self.lr <= 0:
            raise ParameterError("lr must be > 0")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")
        if self.tau <= 0:
            raise ParameterError("tau must be > 0")
        if self.record_grad_epoch < 0:
            raise ParameterError("record_grad_epoch must be >= 0")
        if self.reservoir_size < 2:
            raise ParameterError("reservoir_size must be >= 2")


def infonce_loss(s_pos: float, s_negs: Sequence[float], tau: float) -> float:
    """-ln( e^{s_pos/tau} / (e^{s_pos/tau} + sum_j e^{s_j/tau}) )."""
    if tau <= 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    negs = np.asarray(s_negs, dtype=np.float64)
    if negs.size == 0:
        raise ParameterError("at least one negative score is required")
    logits = np.concatenate(([float(s_pos)], negs)) / tau
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite score passed to infonce_loss")
    m = logits.max()
    return float(m + math.log(np.exp(logits - m).sum()) - logits[0])


def _softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max()
    e = np.exp(logits - m)
    return e / e.sum()


def infonce_grad(params: EncoderParams, batch: Sequence[TrainInstance],
                 tau: float, cache: FeatureCache | None = None
                 ) -> tuple[np.ndarray, float]:
    """Exact gradient of the mean batch loss w.r.t. W, plus that loss.

    Accumulation follows batch order then document order, so the result is
    bit-reproducible for a given batch.
    """
    if tau <= 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    if not batch:
        raise ParameterError("batch must be non-empty")
    if cache is None:
        cache = FeatureCache(params.v_dim)
    grad = np.zeros_like(params.weights)
    total_loss = 0.0
    for inst in batch:
        if not inst.negatives:
            raise ParameterError(
                f"instance ({inst.query.query_id!r}, "
                f"{inst.positive.doc_id!r}) has no negatives")
        x_q = cache.get(inst.query.text)
        x_docs = [cache.get(inst.positive.single_text())]
        x_docs += [cache.get(neg.text) for neg in inst.negatives]
        h_q = (params.weights[x_q.indices].T @ x_q.values
               if len(x_q.indices) else np.zeros(params.emb_dim))
        h_docs = [(params.weights[x.indices].T @ x.values
                   if len(x.indices) else np.zeros(params.emb_dim))
                  for x in x_docs]
        scores = np.array([h_q @ h for h in h_docs])
        logits = scores / tau
        m = logits.max()
        total_loss += float(m + np.log(np.exp(logits - m).sum()) - logits[0])
        probs = _softmax(logits)
        g = probs.copy()
        g[0] -= 1.0
        g /= tau
        # dL/dW = x_q (sum_j g_j h_j)^T + sum_j g_j x_j h_q^T
        combo = np.zeros(params.emb_dim)
        for gj, h in zip(g, h_docs):
            combo += gj * h
        if len(x_q.indices):
            grad[x_q.indices] += np.outer(x_q.values, combo)
        for gj, x in zip(g, x_docs):
            if len(x.indices):
                grad[x.indices] += gj * np.outer(x.values, h_q)
    grad /= len(batch)
    return grad, total_loss / len(batch)


class Reservoir:
    """Uniform sample over a stream, vectorized over array chunks."""

    def __init__(self, size: int, rng: np.random.Generator):
        if size < 1:
            raise ParameterError("reservoir size must be >= 1")
        self.size = size
        self._rng = rng
        self._buf = np.empty(size, dtype=np.float64)
        self.filled = 0
        self.seen = 0

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64).ravel()
        if self.filled < self.size:
            take = min(self.size - self.filled, values.size)
            self._buf[self.filled:self.filled + take] = values[:take]
            self.filled += take
            self.seen += take
            values = values[take:]
        if values.size == 0:
            return
        # element i (1-based position in the stream) replaces a uniform
        # slot with probability size/i: classic algorithm R, chunked
        positions = self.seen + 1 + np.arange(values.size, dtype=np.float64)
        slots = (self._rng.random(values.size) * positions).astype(np.int64)
        accept = slots < self.size
        self._buf[slots[accept]] = values[accept]
        self.seen += values.size

    def samples(self) -> np.ndarray:
        return self._buf[:self.filled].copy()


def grad_variance(samples: np.ndarray) -> float:
    """Population variance sum((x - mean)^2) / n."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 2:
        raise ParameterError(
            f"need at least 2 samples, got {samples.size}")
    mean = samples.mean()
    return float(np.mean((samples - mean) ** 2))


@dataclass
class TrainingStats:
    losses: list[float] = field(default_factory=list)
    steps_per_epoch: list[int] = field(default_factory=list)
    grad_samples: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.float64))
    grad_components_seen: int = 0
    steps: int = 0

    @property
    def grad_variance(self) -> float | None:
        if self.grad_samples.size < 2:
            return None
        return grad_variance(self.grad_samples)

    def epoch_mean_losses(self) -> list[float]:
        out, start = [], 0
        for n in self.steps_per_epoch:
            out.append(float(np.mean(self.losses[start:start + n])))
            start += n
        return out

    def to_json_dict(self, cfg: TrainConfig | None = None) -> dict:
        d = {"losses": self.losses,
             "steps": self.steps,
             "grad_variance": self.grad_variance,
             "grad_samples_kept": int(self.grad_samples.size),
             "grad_components_seen": self.grad_components_seen}
        if cfg is not None:
            d["config"] = {
                "v_dim": cfg.v_dim, "emb_dim": cfg.emb_dim, "lr": cfg.lr,
                "batch_size": cfg.batch_size, "epochs": cfg.epochs,
                "tau": cfg.tau, "seed": cfg.seed,
                "record_grad_epoch": cfg.record_grad_epoch,
                "reservoir_size": cfg.reservoir_size}
        return d


def train(instances: Sequence[TrainInstance], cfg: TrainConfig
          ) -> tuple[EncoderParams, TrainingStats]:
    """Gradient descent from a seeded init; identical inputs give a
    bitwise-identical weight matrix.  Aborts with NumericError (carrying
    the step and the batch's instance ids) if any loss goes non-finite."""
    params = init_params(cfg.v_dim, cfg.emb_dim, cfg.seed)
    stats = TrainingStats()
    if cfg.epochs == 0 or not instances:
        return params, stats

    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    reservoir = Reservoir(cfg.reservoir_size,
                          np.random.default_rng([cfg.seed, 2]))
    cache = FeatureCache(cfg.v_dim)
    step = 0
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(instances))
        epoch_steps = 0
        for start in range(0, len(instances), cfg.batch_size):
            batch = [instances[int(i)]
                     for i in order[start:start + cfg.batch_size]]
            grad, loss = infonce_grad(params, batch, cfg.tau, cache)
            if not math.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at step {step}", step=step,
                    instance_ids=[f"{b.query.query_id}:{b.positive.doc_id}"
                                  for b in batch])
            stats.losses.append(loss)
            if epoch < cfg.record_grad_epoch:
                reservoir.add(grad)
            params.weights -= cfg.lr * grad
            step += 1
            epoch_steps += 1
        stats.steps_per_epoch.append(epoch_steps)
    stats.steps = step
    stats.grad_samples = reservoir.samples()
    stats.grad_components_seen = reservoir.seen
    return params, stats
