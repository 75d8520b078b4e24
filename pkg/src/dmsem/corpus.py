"""Corpus ingestion: vocabulary, context windows, subsampling, negative sampling.

Sentences are lines of a UTF-8 text file; tokens are assumed to be
pre-lemmatized.  Tokenization lowercases, strips punctuation, and splits on
whitespace.  Everything is deterministic: the vocabulary order is fixed by
(count desc, token asc) and the samplers are seeded.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DataError

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(line: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return line.lower().translate(_PUNCT_TABLE).split()


def iter_sentences(source) -> Iterator[list[str]]:
    """Yield token lists from a path, an open file, or an iterable of lines."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            for line in fh:
                yield tokenize(line)
    else:
        for line in source:
            yield tokenize(line) if isinstance(line, str) else list(line)


class Vocabulary:
    """Token -> dense id map with counts.

    Ids are assigned by descending count, ties broken by token string, so
    the build is deterministic and serializes byte-identically across runs.
    """

    def __init__(self, entries: list[tuple[str, int]]):
        if not entries:
            raise DataError("Vocabulary: no tokens survived the build")
        self.tokens = [t for t, _ in entries]
        self.counts = np.array([c for _, c in entries], dtype=np.int64)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self.total_count = int(self.counts.sum())

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id_of(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise DataError(f"token {token!r} not in vocabulary") from None

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Ids for the known tokens, silently dropping unknown ones."""
        idx = self.index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)

    def save_tsv(self, path) -> None:
        lines = [f"{t}\t{c}\n" for t, c in zip(self.tokens, self.counts)]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load_tsv(cls, path) -> "Vocabulary":
        entries = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected token<TAB>count")
            entries.append((parts[0], int(parts[1])))
        return cls(entries)


def build_vocab(token_stream, min_count: int = 1) -> Vocabulary:
    """Count tokens and keep those with count >= min_count.

    ``token_stream`` is an iterable of tokens or of token lists (sentences).
    Raises on an empty stream and when nothing survives the cutoff.
    """
    counts: Counter = Counter()
    for item in token_stream:
        if isinstance(item, str):
            counts[item] += 1
        else:
            counts.update(item)
    if not counts:
        raise DataError("build_vocab: empty token stream")
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    if not kept:
        raise DataError(f"build_vocab: no token reaches min_count={min_count}")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary(kept)


@dataclass(frozen=True)
class ContextPair:
    """A target position and the ids of the words inside its window."""

    target_id: int
    context_ids: np.ndarray


def context_windows(sentence: np.ndarray, window: int) -> list[ContextPair]:
    """One ContextPair per position, window truncated at sentence bounds.

    The target position itself is excluded from its context.  Positions with
    an empty context are still emitted (trainers skip them).
    """
    if window < 1:
        raise ValueError("context_windows: window must be >= 1")
    ids = np.asarray(sentence, dtype=np.int64)
    n = ids.shape[0]
    pairs = []
    for pos in range(n):
        lo = max(0, pos - window)
        hi = min(n, pos + window + 1)
        ctx = np.concatenate([ids[lo:pos], ids[pos + 1:hi]])
        pairs.append(ContextPair(int(ids[pos]), ctx))
    return pairs


class NegativeSampler:
    """Draws vocabulary ids with probability proportional to count^power."""

    def __init__(self, vocab: Vocabulary, power: float = 0.75, seed: int = 1):
        w = np.asarray(vocab.counts, dtype=np.float64) ** power
        self.probabilities = w / w.sum()
        self._cumulative = np.cumsum(self.probabilities)
        self._cumulative[-1] = 1.0
        self._rng = np.random.default_rng(seed)

    def draw(self, n: int) -> np.ndarray:
        u = self._rng.random(n)
        return np.searchsorted(self._cumulative, u, side="right").astype(np.int64)


def negative_sampler(vocab: Vocabulary, power: float = 0.75, seed: int = 1) -> NegativeSampler:
    return NegativeSampler(vocab, power=power, seed=seed)


class SubsampleFilter:
    """Keeps id i with probability min(1, sqrt(t / f_i)), f_i its relative frequency."""

    def __init__(self, vocab: Vocabulary, threshold: float = 1e-5, seed: int = 1):
        if threshold <= 0:
            raise ValueError("subsample threshold must be > 0")
        freq = vocab.counts / vocab.total_count
        self.keep_probability = np.minimum(1.0, np.sqrt(threshold / freq))
        self._rng = np.random.default_rng(seed)

    def __call__(self, token_id: int) -> bool:
        return bool(self._rng.random() < self.keep_probability[token_id])

    def mask(self, ids: np.ndarray) -> np.ndarray:
        """Vectorized keep-mask over a sentence; one rng draw per position."""
        return self._rng.random(len(ids)) < self.keep_probability[ids]


def subsample_filter(vocab: Vocabulary, threshold: float = 1e-5, seed: int = 1) -> SubsampleFilter:
    return SubsampleFilter(vocab, threshold=threshold, seed=seed)
