"""Dense symmetric PSD linear algebra for density matrices.

A density matrix is a symmetric positive semi-definite matrix with unit
trace; it represents a word (or phrase) meaning as a probabilistic mixture
of sense vectors.  Everything here is real-valued float64 and pure: values
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NumericError

# Tolerances used by the constructors and checks below.
SYMMETRY_TOL = 1e-10
# Eigenvalues in [-EIG_CLAMP_REL * lambda_max, 0) are round-off and get
# clamped to zero; anything below that signals genuinely non-PSD input.
EIG_CLAMP_REL = 1e-8
TRACE_TOL = 1e-12
# Relative gap under which eigenvalues are considered degenerate and
# grouped into one eigenspace.
EIG_GROUP_REL = 1e-8


def _check_square_symmetric(data: np.ndarray, what: str) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise NumericError(f"{what}: expected a square matrix, got shape {data.shape}")
    if not np.isfinite(data).all():
        raise NumericError(f"{what}: non-finite entries")
    asym = np.abs(data - data.T).max() if data.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NumericError(f"{what}: not symmetric (max |A - A^T| = {asym:.3e})")
    return (data + data.T) / 2.0


def _clamped_eigh(data: np.ndarray, what: str):
    """eigh with the negative-eigenvalue policy: round-off clamped, worse rejected."""
    eigvals, eigvecs = np.linalg.eigh(data)
    lam_max = float(eigvals[-1])
    floor = -EIG_CLAMP_REL * max(lam_max, 0.0)
    if eigvals[0] < floor:
        raise NumericError(
            f"{what}: not positive semi-definite "
            f"(min eigenvalue {eigvals[0]:.3e} < {floor:.3e})"
        )
    return np.maximum(eigvals, 0.0), eigvecs


class DensityMatrix:
    """Symmetric PSD matrix, trace-normalized on construction.

    The stored array is read-only; ``dim`` and ``trace`` are plain floats.
    Use :func:`build_density` to assemble one from weighted sense vectors.
    """

    __slots__ = ("dim", "data", "trace")

    def __init__(self, data: np.ndarray):
        data = _check_square_symmetric(data, "DensityMatrix")
        raw_eigvals = np.linalg.eigvalsh(data)
        lam_max = float(raw_eigvals[-1])
        floor = -EIG_CLAMP_REL * max(lam_max, 0.0)
        if raw_eigvals[0] < floor:
            raise NumericError(
                f"DensityMatrix: not positive semi-definite "
                f"(min eigenvalue {raw_eigvals[0]:.3e} < {floor:.3e})"
            )
        if raw_eigvals[0] < 0.0:
            # Round-off negatives: rebuild from the clamped spectrum so the
            # PSD invariant holds exactly.
            eigvals, eigvecs = np.linalg.eigh(data)
            eigvals = np.maximum(eigvals, 0.0)
            data = (eigvecs * eigvals) @ eigvecs.T
            data = (data + data.T) / 2.0
        tr = float(np.trace(data))
        if tr <= TRACE_TOL:
            raise NumericError("DensityMatrix: trace is not positive, cannot normalize")
        data = data / tr
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dim", data.shape[0])
        object.__setattr__(self, "trace", float(np.trace(data)))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"

    @classmethod
    def pure(cls, vector: np.ndarray) -> "DensityMatrix":
        """Rank-1 density matrix |v><v| / <v|v>."""
        return build_density([(np.asarray(vector, dtype=np.float64), 1.0)])

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def from_columns(cls, columns: np.ndarray) -> "DensityMatrix":
        """B B^T from a d x m column matrix, trace-normalized."""
        cols = np.asarray(columns, dtype=np.float64)
        if cols.ndim != 2:
            raise NumericError("from_columns: expected a d x m matrix")
        return build_density([(cols[:, j], 1.0) for j in range(cols.shape[1])])


@dataclass(frozen=True)
class SenseMatrix:
    """d x m matrix whose columns are sense embeddings of one word."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.float64)
        if cols.ndim != 2 or cols.shape[1] < 1:
            raise NumericError("SenseMatrix: expected a d x m matrix with m >= 1")
        if not np.isfinite(cols).all():
            raise NumericError("SenseMatrix: non-finite entries")
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def senses(self) -> int:
        return self.columns.shape[1]

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_columns(self.columns)


@dataclass(frozen=True)
class EigenSystem:
    """Descending spectrum with degenerate eigenvalues grouped into eigenspaces.

    ``eigenspaces`` is a list of (eigenvalue, basis) pairs where ``basis`` is a
    d x k matrix with orthonormal columns spanning the eigenspace.  Grouping
    makes downstream spectral-projector composition independent of the
    arbitrary basis choice inside a degenerate subspace.
    """

    eigenvalues: np.ndarray
    eigenspaces: list = field(default_factory=list)

    def reconstruct(self) -> np.ndarray:
        d = self.eigenspaces[0][1].shape[0]
        out = np.zeros((d, d))
        for value, basis in self.eigenspaces:
            out += value * (basis @ basis.T)
        return out


def build_density(vectors) -> DensityMatrix:
    """Trace-normalized sum of weighted outer products.

    ``vectors`` is a sequence of (vector, weight) pairs with nonnegative
    weights.  Raises on dimension mismatch and on all-zero input (which has
    no finite normalization).
    """
    pairs = list(vectors)
    if not pairs:
        raise NumericError("build_density: no input vectors")
    dim = None
    acc = None
    for vec, weight in pairs:
        v = np.asarray(vec, dtype=np.float64)
        if v.ndim != 1:
            raise DimensionMismatchError("build_density: vectors must be 1-d")
        if dim is None:
            dim = v.shape[0]
            acc = np.zeros((dim, dim))
        elif v.shape[0] != dim:
            raise DimensionMismatchError(
                f"build_density: mixed dimensions {dim} and {v.shape[0]}"
            )
        w = float(weight)
        if w < 0.0:
            raise NumericError("build_density: negative weight")
        if w > 0.0:
            acc += w * np.outer(v, v)
    tr = float(np.trace(acc))
    if tr <= TRACE_TOL:
        raise NumericError("build_density: all-zero input, no finite normalization")
    return DensityMatrix(acc)


def _as_matrix(A) -> np.ndarray:
    return A.data if isinstance(A, DensityMatrix) else np.asarray(A, dtype=np.float64)


def eigendecompose(A) -> EigenSystem:
    """Eigendecomposition with clamped eigenvalues and degeneracy grouping.

    Eigenvalues within a relative gap of 1e-8 (of the largest) are merged
    into a single eigenspace; the group eigenvalue is their mean.
    """
    data = _check_square_symmetric(_as_matrix(A), "eigendecompose")
    eigvals, eigvecs = _clamped_eigh(data, "eigendecompose")
    # descending order
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    lam_max = float(eigvals[0])
    gap = EIG_GROUP_REL * max(lam_max, np.finfo(np.float64).tiny)
    spaces = []
    start = 0
    n = eigvals.shape[0]
    for i in range(1, n + 1):
        if i == n or eigvals[i - 1] - eigvals[i] > gap:
            group = eigvals[start:i]
            spaces.append((float(group.mean()), np.ascontiguousarray(eigvecs[:, start:i])))
            start = i
    return EigenSystem(eigenvalues=eigvals.copy(), eigenspaces=spaces)


def psd_sqrt(A) -> np.ndarray:
    """Symmetric PSD square root S with S @ S = A.

    Accepts any symmetric PSD matrix (not necessarily trace-1); negative
    round-off eigenvalues are clamped, genuinely negative ones raise.
    """
    data = _check_square_symmetric(_as_matrix(A), "psd_sqrt")
    eigvals, eigvecs = _clamped_eigh(data, "psd_sqrt")
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return (root + root.T) / 2.0


def von_neumann_entropy(A) -> float:
    """-sum(lambda * ln lambda) over the spectrum, in nats; 0 ln 0 = 0.

    Requires unit trace; the result lies in [0, ln d].
    """
    data = _as_matrix(A)
    tr = float(np.trace(data))
    if abs(tr - 1.0) > 1e-8:
        raise NumericError(f"von_neumann_entropy: trace {tr} is not 1")
    eigvals, _ = _clamped_eigh(_check_square_symmetric(data, "von_neumann_entropy"),
                               "von_neumann_entropy")
    positive = eigvals[eigvals > 0.0]
    return max(0.0, float(-(positive * np.log(positive)).sum()))


def similarity(A, B, mode: str = "trace") -> float:
    """Similarity of two density matrices.

    ``trace`` is the generalized inner product Tr(A^T B); for PSD trace-1
    inputs it lies in [0, 1] and equals 1/n for the maximally mixed state
    against itself, reflecting maximal ambiguity.  ``frobenius_cosine``
    additionally divides by the Frobenius norms, giving self-similarity 1.
    """
    a = _as_matrix(A)
    b = _as_matrix(B)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"similarity: shapes {a.shape} vs {b.shape}")
    inner = float((a * b).sum())
    if mode == "trace":
        return inner
    if mode in ("frobenius_cosine", "cosine"):
        denom = np.sqrt(float((a * a).sum()) * float((b * b).sum()))
        if denom == 0.0:
            raise NumericError("similarity: zero-norm operand in cosine mode")
        return inner / denom
    raise ValueError(f"similarity: unknown mode {mode!r}")
