"""On-disk formats: density-matrix stores, sense-table stores, vector text files.

A store is a directory holding ``manifest.json`` plus ``data.bin``.  The
manifest carries the format tag ("dm1" for d×d density matrices, "b1" for
d×m sense tables), the shape metadata, and the word order; the blob holds the
row-major matrices concatenated in word order.  All writes are atomic
(temp file + rename) and byte-identical for the same content, so reruns with
a fixed seed can be compared with ``cmp``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .linalg import DensityMatrix

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "data.bin"

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _dump_manifest(obj: dict) -> str:
    # sort_keys + fixed separators => byte-identical manifests across runs
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _load_manifest(directory: Path, expected_format: str) -> dict:
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"{directory}: missing {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if manifest.get("format") != expected_format:
        raise DataError(
            f"{manifest_path}: format {manifest.get('format')!r}, expected {expected_format!r}"
        )
    return manifest


def _read_blob(directory: Path, dtype: np.dtype, expected_count: int) -> np.ndarray:
    blob_path = directory / BLOB_NAME
    if not blob_path.is_file():
        raise DataError(f"{directory}: missing {BLOB_NAME}")
    raw = np.fromfile(blob_path, dtype=dtype)
    if raw.size != expected_count:
        raise DataError(
            f"{blob_path}: has {raw.size} values, manifest implies {expected_count}"
        )
    return raw


class DensityStore:
    """Ordered word -> d×d density matrix collection with dm1 persistence."""

    def __init__(self, dim: int, words: Sequence[str], stack: np.ndarray, dtype: str = "f64"):
        if dtype not in _DTYPES:
            raise DataError(f"dm1 dtype must be f32 or f64, got {dtype!r}")
        stack = np.ascontiguousarray(stack, dtype=np.float64)
        if stack.shape != (len(words), dim, dim):
            raise DataError(
                f"dm1 stack shape {stack.shape} does not match {len(words)} words of dim {dim}"
            )
        if len(set(words)) != len(words):
            raise DataError("dm1 store: duplicate words")
        self.dim = int(dim)
        self.dtype = dtype
        self.words = list(words)
        self.stack = stack
        self._index = {w: i for i, w in enumerate(self.words)}

    @classmethod
    def from_matrices(cls, items: Iterable[tuple[str, DensityMatrix]], dtype: str = "f64"):
        words, mats = [], []
        for word, dm in items:
            words.append(word)
            mats.append(dm.data)
        if not words:
            raise DataError("dm1 store: no matrices to save")
        dim = mats[0].shape[0]
        for w, m in zip(words, mats):
            if m.shape != (dim, dim):
                raise DataError(f"dm1 store: {w!r} has shape {m.shape}, expected ({dim},{dim})")
        return cls(dim, words, np.stack(mats), dtype=dtype)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def matrix(self, word: str) -> DensityMatrix:
        try:
            i = self._index[word]
        except KeyError:
            raise DataError(f"word {word!r} not in density store") from None
        return DensityMatrix(self.stack[i].copy())

    def raw(self, word: str) -> np.ndarray:
        """The stored d×d array without re-validation (already trace-1 PSD)."""
        return self.stack[self._index[word]]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": "dm1",
            "dim": self.dim,
            "dtype": self.dtype,
            "words": self.words,
        }
        atomic_write_text(directory / MANIFEST_NAME, _dump_manifest(manifest))
        blob = self.stack.astype(_DTYPES[self.dtype]).tobytes(order="C")
        atomic_write_bytes(directory / BLOB_NAME, blob)

    @classmethod
    def load(cls, directory) -> "DensityStore":
        directory = Path(directory)
        manifest = _load_manifest(directory, "dm1")
        try:
            dim = int(manifest["dim"])
            dtype = manifest["dtype"]
            words = list(manifest["words"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{directory}: malformed dm1 manifest ({exc})") from exc
        if dtype not in _DTYPES:
            raise DataError(f"{directory}: unknown dtype {dtype!r}")
        raw = _read_blob(directory, _DTYPES[dtype], len(words) * dim * dim)
        stack = raw.astype(np.float64).reshape(len(words), dim, dim)
        return cls(dim, words, stack, dtype=dtype)


class SenseStore:
    """Ordered word -> d×m sense table collection with b1 persistence (f64)."""

    def __init__(self, dim: int, senses: int, words: Sequence[str], stack: np.ndarray):
        stack = np.ascontiguousarray(stack, dtype=np.float64)
        if stack.shape != (len(words), dim, senses):
            raise DataError(
                f"b1 stack shape {stack.shape} does not match "
                f"{len(words)} words of shape ({dim},{senses})"
            )
        if len(set(words)) != len(words):
            raise DataError("b1 store: duplicate words")
        self.dim = int(dim)
        self.senses = int(senses)
        self.words = list(words)
        self.stack = stack
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def table(self, word: str) -> np.ndarray:
        try:
            return self.stack[self._index[word]]
        except KeyError:
            raise DataError(f"word {word!r} not in sense store") from None

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": "b1",
            "dim": self.dim,
            "senses": self.senses,
            "words": self.words,
        }
        atomic_write_text(directory / MANIFEST_NAME, _dump_manifest(manifest))
        atomic_write_bytes(directory / BLOB_NAME, self.stack.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, directory) -> "SenseStore":
        directory = Path(directory)
        manifest = _load_manifest(directory, "b1")
        try:
            dim = int(manifest["dim"])
            senses = int(manifest["senses"])
            words = list(manifest["words"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{directory}: malformed b1 manifest ({exc})") from exc
        raw = _read_blob(directory, _DTYPES["f64"], len(words) * dim * senses)
        return cls(dim, senses, words, raw.reshape(len(words), dim, senses))


def _format_float(x: float) -> str:
    return np.format_float_positional(x, unique=True, trim="0")


def save_vectors(path, words: Sequence[str], matrix: np.ndarray) -> None:
    """Write the `V d` header format: one `word v1 … vd` line per word."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(words):
        raise DataError(f"vector matrix shape {matrix.shape} does not match {len(words)} words")
    lines = [f"{len(words)} {matrix.shape[1]}\n"]
    for word, row in zip(words, matrix):
        lines.append(word + " " + " ".join(_format_float(v) for v in row) + "\n")
    atomic_write_text(path, "".join(lines))


def load_vectors(path) -> tuple[list[str], np.ndarray]:
    """Read vector text, with or without the `V d` header line.

    Headerless files (GloVe-style) are detected by the first line starting
    with a non-numeric token; the dimension is then inferred from it.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty vector file")

    first = lines[0].split()
    has_header = len(first) == 2 and all(tok.lstrip("+-").isdigit() for tok in first)
    if has_header:
        declared_v, dim = int(first[0]), int(first[1])
        body = lines[1:]
        if declared_v != len(body):
            raise DataError(f"{path}: header declares {declared_v} rows, found {len(body)}")
    else:
        body = lines
        dim = len(first) - 1
        if dim < 1:
            raise DataError(f"{path}: first line has no vector components")

    words: list[str] = []
    rows = np.empty((len(body), dim), dtype=np.float64)
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) != dim + 1:
            raise DataError(f"{path}: line {i + 1} of body has {len(parts) - 1} values, expected {dim}")
        words.append(parts[0])
        try:
            rows[i] = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise DataError(f"{path}: line {i + 1} of body: {exc}") from exc
    if len(set(words)) != len(words):
        raise DataError(f"{path}: duplicate words in vector file")
    return words, rows
