"""Sense induction without matrix-valued training.

Two routes to a density matrix:
- cluster the vectors of a word's context types (agglomerative, average
  linkage, cosine distance) and mix the cluster centroids weighted by size;
- ingest per-occurrence contextual vectors from an external encoder, reduce
  with PCA or SVD, and mix the reduced instances uniformly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import linkage

from .corpus import iter_sentences
from .errors import DataError
from .linalg import DensityMatrix, build_density


@dataclass(frozen=True)
class ContextSet:
    """A word's context vectors, one row per instance."""

    word: str
    instances: np.ndarray  # n x d

    def __post_init__(self):
        inst = np.asarray(self.instances, dtype=np.float64)
        if inst.ndim != 2 or inst.shape[0] == 0:
            raise DataError(f"ContextSet {self.word!r}: need a nonempty n x d array")
        object.__setattr__(self, "instances", inst)


@dataclass(frozen=True)
class ClusterResult:
    k: int
    clusters: list  # of (centroid: np.ndarray, size: int)


def collect_contexts(corpus, vectors, word: str, window: int = 5,
                     dedupe: bool = True) -> ContextSet:
    """Context vectors for every word type co-occurring with `word`.

    With dedupe (the default) each context type contributes one vector no
    matter how often it co-occurs; dedupe=False keeps one instance per
    co-occurrence.  Context words without a vector are skipped.
    """
    lookup = vectors.vector if hasattr(vectors, "vector") else vectors.__getitem__
    has = (lambda w: w in vectors.vocab) if hasattr(vectors, "vocab") else (
        lambda w: w in vectors)

    occurrences = 0
    context_tokens: list[str] = []
    for tokens in iter_sentences(corpus):
        for pos, tok in enumerate(tokens):
            if tok != word:
                continue
            occurrences += 1
            lo, hi = max(0, pos - window), min(len(tokens), pos + window + 1)
            context_tokens.extend(
                t for i, t in enumerate(tokens[lo:hi], start=lo) if i != pos)
    if occurrences == 0:
        raise DataError(f"collect_contexts: {word!r} never occurs in the corpus")

    if dedupe:
        context_tokens = sorted(set(context_tokens))
    rows = [np.asarray(lookup(t), dtype=np.float64)
            for t in context_tokens if has(t)]
    if not rows:
        raise DataError(f"collect_contexts: no context of {word!r} has a vector")
    return ContextSet(word, np.vstack(rows))


def _cosine_condensed(points: np.ndarray) -> np.ndarray:
    """Condensed pairwise cosine distances with a zero-vector convention:
    distance 0 between two zero vectors, 1 between zero and nonzero."""
    n = points.shape[0]
    norms = np.linalg.norm(points, axis=1)
    out = np.empty(n * (n - 1) // 2)
    idx = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            if norms[i] == 0.0 and norms[j] == 0.0:
                out[idx] = 0.0
            elif norms[i] == 0.0 or norms[j] == 0.0:
                out[idx] = 1.0
            else:
                cos = float(points[i] @ points[j]) / (norms[i] * norms[j])
                out[idx] = 1.0 - min(1.0, max(-1.0, cos))
            idx += 1
    return out


def _pick_k(heights: np.ndarray, k_min: int, k_max: int) -> int:
    """Largest relative gap in the merge-distance sequence.

    Stopping at k clusters means the last accepted merge had height
    h[n-k-1] (0-based) and the rejected one h[n-k]; the score is their
    relative gap, with 0/0 read as 0 so that degenerate all-equal inputs
    fall through to k_min.  Ties take the smallest k.
    """
    n = heights.size + 1
    best_k, best_score = k_min, -1.0
    for k in range(k_min, min(k_max, n - 1) + 1):
        accepted = heights[n - k - 1]
        rejected = heights[n - k]
        if accepted == 0.0:
            score = 0.0 if rejected == 0.0 else np.inf
        else:
            score = (rejected - accepted) / accepted
        if score > best_score:
            best_k, best_score = k, score
    return best_k


def agglomerative_cluster(points, k_min: int = 2, k_max: int = 10) -> ClusterResult:
    """Average-linkage clustering over cosine distance with automatic k.

    Rows are sorted lexicographically first, so the result does not depend
    on input order.  Exactly k clusters are formed by undoing the last k-1
    merges of the dendrogram.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DataError("agglomerative_cluster: need at least 2 points")
    if not (2 <= k_min <= k_max):
        raise DataError("agglomerative_cluster: need 2 <= k_min <= k_max")
    pts = pts[np.lexsort(pts.T[::-1])]
    n = pts.shape[0]

    Z = linkage(_cosine_condensed(pts), method="average")
    k = _pick_k(Z[:, 2], k_min, k_max)

    # replay the first n-k merges; cluster ids follow scipy's convention
    # (0..n-1 leaves, n+i for the cluster made by merge i)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for i in range(n - k):
        a, b = int(Z[i, 0]), int(Z[i, 1])
        members[n + i] = members.pop(a) + members.pop(b)

    groups = sorted(members.values(), key=min)
    clusters = [(pts[g].mean(axis=0), len(g)) for g in groups]
    return ClusterResult(k=len(clusters), clusters=clusters)


def context2dm(ctx: ContextSet, k_min: int = 2, k_max: int = 10) -> DensityMatrix:
    """Cluster the context set and mix centroids weighted by cluster size."""
    result = agglomerative_cluster(ctx.instances, k_min=k_min, k_max=k_max)
    return build_density([(centroid, float(size)) for centroid, size in result.clusters])


def principal_axes(instances: np.ndarray, method: str, d_out: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Top d_out axes (columns) and the offset subtracted before projection.

    pca centers the data first (unless there is a single instance, which
    centering would annihilate); svd works on the raw matrix.  Each axis is
    sign-fixed so its largest-magnitude component is positive.
    """
    X = np.asarray(instances, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("principal_axes: need a nonempty n x d matrix")
    if method not in ("pca", "svd"):
        raise DataError(f"principal_axes: unknown method {method!r}")
    if not (1 <= d_out <= X.shape[1]):
        raise DataError(f"principal_axes: d_out={d_out} outside [1, {X.shape[1]}]")

    if method == "pca" and X.shape[0] > 1:
        offset = X.mean(axis=0)
    else:
        offset = np.zeros(X.shape[1])
    _, _, vt = np.linalg.svd(X - offset, full_matrices=False)
    axes = np.zeros((X.shape[1], d_out))
    have = min(d_out, vt.shape[0])
    axes[:, :have] = vt[:have].T
    for j in range(axes.shape[1]):
        pivot = np.argmax(np.abs(axes[:, j]))
        if axes[pivot, j] < 0:
            axes[:, j] = -axes[:, j]
    return axes, offset


def reduce_dimensions(instances, method: str = "pca", d_out: int = 2) -> np.ndarray:
    """Project instances onto the top d_out principal (or singular) axes."""
    X = np.asarray(instances, dtype=np.float64)
    axes, offset = principal_axes(X, method, d_out)
    return (X - offset) @ axes


def contextual2dm(instances, method: str = "pca", d_out: int = 2) -> DensityMatrix:
    """Reduce contextual token vectors, then mix them uniformly."""
    X = np.asarray(instances, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("contextual2dm: need at least one instance")
    reduced = reduce_dimensions(X, method=method, d_out=d_out)
    return build_density([(row, 1.0) for row in reduced])


def load_contextual_instances(path) -> dict[str, np.ndarray]:
    """JSONL of `{word, vector}` objects, grouped by word in file order."""
    grouped: dict[str, list] = {}
    dims: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict) or "word" not in obj or "vector" not in obj:
                raise DataError(f"{path}:{lineno}: need fields 'word' and 'vector'")
            word = obj["word"]
            vector = obj["vector"]
            if (not isinstance(word, str) or not isinstance(vector, list)
                    or not vector
                    or not all(isinstance(v, (int, float)) for v in vector)):
                raise DataError(f"{path}:{lineno}: 'word' must be a string and "
                                "'vector' a nonempty list of numbers")
            if word in dims and dims[word] != len(vector):
                raise DataError(f"{path}:{lineno}: {word!r} has vectors of "
                                f"lengths {dims[word]} and {len(vector)}")
            dims[word] = len(vector)
            grouped.setdefault(word, []).append(vector)
    if not grouped:
        raise DataError(f"{path}: no instances")
    return {w: np.asarray(rows, dtype=np.float64) for w, rows in grouped.items()}
