"""Skipgram-negative-sampling trainers for vectors and sense matrices.

Three variants share one update rule, gradient ascent on

    J = ln sigma(<target|context>) + sum_k ln sigma(-<target|negative_k>)

- sgns:       target is a single vector per word.
- ms_word2dm: target is one column of the word's d x m sense matrix, chosen
  per step as the column most similar to the summed context vector; only
  that column is updated.
- word2dm:    every column is updated every step (no selection).  The exact
  objective of this variant is defined in earlier work that this codebase
  does not reproduce; updating all columns is the documented stand-in.

Training is single-threaded and bitwise deterministic under a fixed seed.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .corpus import (
    ContextPair,
    Vocabulary,
    build_vocab,
    context_windows,
    iter_sentences,
    negative_sampler,
    subsample_filter,
)
from .errors import DataError, OOVError
from .linalg import DensityMatrix, SenseMatrix, build_density

VARIANTS = ("sgns", "word2dm", "ms_word2dm")
SENSE_METRICS = ("cosine", "euclidean")


@dataclass
class TrainConfig:
    dim: int = 50
    senses: int = 5
    negatives: int = 5
    window: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    epochs: int = 5
    seed: int = 1
    sense_metric: str = "cosine"
    variant: str = "sgns"
    min_count: int = 1
    subsample_threshold: float | None = 1e-5

    def __post_init__(self):
        if min(self.dim, self.senses, self.negatives, self.window, self.epochs) < 1:
            raise ValueError("TrainConfig: dim, senses, negatives, window, epochs must be >= 1")
        if not (0 < self.lr_end <= self.lr_start):
            raise ValueError("TrainConfig: need 0 < lr_end <= lr_start")
        if self.lr_end < 1e-4 * self.lr_start:
            raise ValueError("TrainConfig: lr_end must stay >= 1e-4 of lr_start")
        if self.variant not in VARIANTS:
            raise ValueError(f"TrainConfig: unknown variant {self.variant!r}")
        if self.sense_metric not in SENSE_METRICS:
            raise ValueError(f"TrainConfig: unknown sense_metric {self.sense_metric!r}")


@dataclass
class EmbeddingTable:
    """Target and context vectors, rows addressable by vocabulary id."""

    vocab: Vocabulary
    targets: np.ndarray  # V x d
    contexts: np.ndarray  # V x d

    @property
    def dim(self) -> int:
        return self.targets.shape[1]

    def vector(self, word: str) -> np.ndarray:
        return self.targets[self.vocab.id_of(word)]


@dataclass
class SenseTable:
    """Per-word sense columns (V x d x m) plus shared context vectors (V x d)."""

    vocab: Vocabulary
    senses: np.ndarray  # V x d x m
    contexts: np.ndarray  # V x d

    @property
    def dim(self) -> int:
        return self.senses.shape[1]

    @property
    def n_senses(self) -> int:
        return self.senses.shape[2]

    def sense_matrix(self, word: str) -> SenseMatrix:
        return SenseMatrix(self.senses[self.vocab.id_of(word)].copy())


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sgns_step(table: EmbeddingTable, pair: ContextPair, negatives: np.ndarray,
              lr: float) -> float:
    """One gradient-ascent step on J for a (target, contexts) pair.

    The objective sums over every context id in the pair, with one shared
    negative set.  All gradients are evaluated at the pre-step values and
    applied together.  Returns the pre-step objective value; empty-context
    pairs are skipped with J = 0.
    """
    ctx = pair.context_ids
    if ctx.size == 0:
        return 0.0
    t = table.targets[pair.target_id].copy()
    c_vecs = table.contexts[ctx]
    n_vecs = table.contexts[negatives]

    pos_scores = c_vecs @ t
    neg_scores = n_vecs @ t
    pos_sig = expit(pos_scores)
    neg_sig = expit(neg_scores)

    grad_t = (1.0 - pos_sig) @ c_vecs - neg_sig @ n_vecs
    table.targets[pair.target_id] += lr * grad_t
    np.add.at(table.contexts, ctx, lr * (1.0 - pos_sig)[:, None] * t)
    np.add.at(table.contexts, negatives, -lr * neg_sig[:, None] * t)

    return float(_log_sigmoid(pos_scores).sum() + _log_sigmoid(-neg_scores).sum())


def select_sense(B, c: np.ndarray, metric: str = "cosine") -> int:
    """Index of the column of B most similar to c; ties go to the lowest index.

    With a zero-norm c, cosine similarity is undefined, so that step falls
    back to euclidean distance.  Zero-norm columns never win under cosine.
    """
    cols = B.columns if isinstance(B, SenseMatrix) else np.asarray(B, dtype=np.float64)
    if metric not in SENSE_METRICS:
        raise ValueError(f"select_sense: unknown metric {metric!r}")
    c = np.asarray(c, dtype=np.float64)
    c_norm = math.sqrt(c @ c)
    if metric == "cosine" and c_norm > 0.0:
        col_norms = np.sqrt(np.add.reduce(cols * cols, axis=0))
        if col_norms.min() > 0.0:
            return int(np.argmax((c @ cols) / (col_norms * c_norm)))
        scores = np.full(cols.shape[1], -2.0)
        ok = col_norms > 0.0
        scores[ok] = (cols[:, ok].T @ c) / (col_norms[ok] * c_norm)
        return int(np.argmax(scores))
    diff = cols - c[:, None]
    dists = np.sqrt(np.add.reduce(diff * diff, axis=0))
    return int(np.argmin(dists))


def ms_word2dm_step(table: SenseTable, target_id: int, context_ids: np.ndarray,
                    negatives: np.ndarray, lr: float, metric: str = "cosine",
                    update_all: bool = False) -> float:
    """One step of the multi-sense update: c_t is the SUM of context vectors,
    the most similar sense column is the target, and only that column moves.

    With update_all=True every column takes the step (the plain all-columns
    variant).  Returns the pre-step objective value (summed over updated
    columns); empty contexts are skipped with J = 0.
    """
    if context_ids.size == 0:
        return 0.0
    contexts = table.contexts
    c_t = np.add.reduce(contexts[context_ids], axis=0)
    B = table.senses[target_id]
    n_vecs = contexts[negatives]

    if not update_all:
        # selection inline for the dominant case; odd cases (zero norms,
        # other metrics) take the general routine
        j = -1
        if metric == "cosine":
            c_norm = math.sqrt(c_t @ c_t)
            if c_norm > 0.0:
                col_norms = np.sqrt(np.add.reduce(B * B, axis=0))
                if col_norms.min() > 0.0:
                    j = int(np.argmax((c_t @ B) / (col_norms * c_norm)))
        if j < 0:
            j = select_sense(B, c_t, metric)
        b = B[:, j]
        pos_score = float(b @ c_t)
        neg_scores = n_vecs @ b
        pos_sig = expit(pos_score)
        neg_sig = expit(neg_scores)
        # materialize the context steps before b moves underneath them
        ctx_step = lr * ((1.0 - pos_sig) * b)
        neg_step = lr * (-neg_sig[:, None] * b)
        B[:, j] += lr * ((1.0 - pos_sig) * c_t - neg_sig @ n_vecs)
        # every context occurrence shares d(c_t)/d(v_c) = identity
        np.add.at(contexts, context_ids, ctx_step)
        np.add.at(contexts, negatives, neg_step)
        return float(_log_sigmoid(pos_score) + _log_sigmoid(-neg_scores).sum())

    ctx_grad = np.zeros(table.dim)
    neg_grad = np.zeros((negatives.size, table.dim))
    objective = 0.0
    col_grads = []
    for j in range(B.shape[1]):
        b = B[:, j]
        pos_score = float(b @ c_t)
        neg_scores = n_vecs @ b
        pos_sig = expit(pos_score)
        neg_sig = expit(neg_scores)
        col_grads.append((j, (1.0 - pos_sig) * c_t - neg_sig @ n_vecs))
        ctx_grad += (1.0 - pos_sig) * b
        neg_grad += -neg_sig[:, None] * b
        objective += float(_log_sigmoid(pos_score) + _log_sigmoid(-neg_scores).sum())

    for j, g in col_grads:
        B[:, j] += lr * g
    np.add.at(contexts, context_ids, lr * ctx_grad)
    np.add.at(contexts, negatives, lr * neg_grad)
    return objective


def _initialize(vocab: Vocabulary, config: TrainConfig, rng: np.random.Generator):
    V, d = len(vocab), config.dim
    scale = 0.5 / d
    if config.variant == "sgns":
        targets = rng.uniform(-scale, scale, size=(V, d))
        return EmbeddingTable(vocab, targets, np.zeros((V, d)))
    senses = rng.uniform(-scale, scale, size=(V, d, config.senses))
    return SenseTable(vocab, senses, np.zeros((V, d)))


def train(corpus, config: TrainConfig, vocab: Vocabulary | None = None,
          progress=None):
    """Train on a corpus (path, or iterable of sentences) under config.

    Emits one `epoch<TAB>mean_objective` line per epoch (to ``progress`` if
    given, else standard error).  Deterministic for a fixed seed: the same
    call produces bitwise-identical tables.
    """
    sentences = [s for s in iter_sentences(corpus)]
    if vocab is None:
        vocab = build_vocab(sentences, min_count=config.min_count)
    encoded = [vocab.encode(s) for s in sentences]
    encoded = [e for e in encoded if e.size > 0]
    if not encoded:
        raise DataError("train: corpus is empty after vocabulary filtering")
    total_positions = sum(e.size for e in encoded)

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(seeds[0])
    table = _initialize(vocab, config, init_rng)
    sampler = negative_sampler(vocab, seed=seeds[1])
    keep = (subsample_filter(vocab, threshold=config.subsample_threshold, seed=seeds[2])
            if config.subsample_threshold is not None else None)

    emit = progress if progress is not None else (
        lambda line: print(line, file=sys.stderr))
    schedule_span = config.epochs * total_positions
    seen_positions = 0
    for epoch in range(config.epochs):
        epoch_objective = 0.0
        epoch_steps = 0
        for sentence in encoded:
            lr = config.lr_start + (config.lr_end - config.lr_start) * (
                seen_positions / schedule_span)
            seen_positions += sentence.size
            ids = sentence[keep.mask(sentence)] if keep is not None else sentence
            if ids.size == 0:
                continue
            pairs = [p for p in context_windows(ids, config.window)
                     if p.context_ids.size]
            if not pairs:
                continue
            if config.variant == "sgns":
                for pair in pairs:
                    for cid in pair.context_ids:
                        negs = sampler.draw(config.negatives)
                        single = ContextPair(pair.target_id, np.array([cid]))
                        epoch_objective += sgns_step(table, single, negs, lr)
                        epoch_steps += 1
            else:
                # one draw per sentence: k consecutive draws of n ids read the
                # same generator stream as one draw of k * n
                k = config.negatives
                block = sampler.draw(k * len(pairs))
                for i, pair in enumerate(pairs):
                    epoch_objective += ms_word2dm_step(
                        table, pair.target_id, pair.context_ids,
                        block[i * k:(i + 1) * k], lr,
                        metric=config.sense_metric,
                        update_all=(config.variant == "word2dm"))
                epoch_steps += len(pairs)
        if epoch_steps == 0:
            raise DataError("train: no training pairs survived subsampling")
        emit(f"{epoch}\t{epoch_objective / epoch_steps:.6f}")
    return table


def finalize_density(table: SenseTable, word: str) -> DensityMatrix:
    """B B-transpose for the word's sense columns, trace-normalized."""
    if word not in table.vocab:
        raise OOVError([word])
    B = table.senses[table.vocab.id_of(word)]
    return build_density([(B[:, j], 1.0) for j in range(B.shape[1])])


def densities_from_table(table: SenseTable) -> list[tuple[str, DensityMatrix]]:
    """finalize_density over the whole vocabulary, skipping all-zero words."""
    out = []
    for word in table.vocab.tokens:
        B = table.senses[table.vocab.id_of(word)]
        if not np.any(B):
            continue
        out.append((word, finalize_density(table, word)))
    return out
