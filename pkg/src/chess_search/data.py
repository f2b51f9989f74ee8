"""Dataset loading, storage, and synthesis.

Two point kinds are supported: dense nonnegative real vectors, stored
on disk in the CHESSVEC binary format, and equal-length strings over
``A C G T -``, stored as plain text (FASTA headers tolerated).

CHESSVEC layout: magic ``CHESSVEC`` (8 ASCII bytes), version byte 0x01,
point count as u64 little-endian, per-point dimension as u64
little-endian, then ``n * dim`` IEEE-754 binary64 little-endian values,
row major.
"""

from __future__ import annotations

import enum
import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .metrics import STRING_ALPHABET, MetricKind, as_codes, as_vector

__all__ = [
    "Dataset",
    "DatasetKind",
    "load_dense",
    "save_dense",
    "load_sequences",
    "synth_manifold",
    "synth_line",
]

VEC_MAGIC = b"CHESSVEC"
VEC_VERSION = 1
_VEC_HEADER = struct.Struct("<8sBQQ")
_ALPHABET_CODES = np.frombuffer(STRING_ALPHABET, dtype=np.uint8)


class DatasetKind(enum.Enum):
    DENSE_VECTORS = "dense"
    ALIGNED_STRINGS = "strings"


@dataclass
class Dataset:
    """An ordered, fixed-shape point collection.

    Immutable under normal use; :meth:`append_point` exists only to
    support live insertion into an already-built tree and must not run
    concurrently with readers.
    """

    kind: DatasetKind
    values: np.ndarray  # (n, dim); float64 for vectors, uint8 for strings
    _hash: bytes | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {self.values.shape}")
        n, dim = self.values.shape
        if n < 1 or dim < 1:
            raise DimensionError(f"dataset must have n >= 1 and dim >= 1, got {n}x{dim}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def point(self, i: int) -> np.ndarray:
        return self.values[i]

    def string(self, i: int) -> str:
        if self.kind is not DatasetKind.ALIGNED_STRINGS:
            raise DimensionError("string() applies to string datasets only")
        return self.values[i].tobytes().decode("ascii")

    def compatible_with(self, metric: MetricKind) -> bool:
        return metric.for_vectors == (self.kind is DatasetKind.DENSE_VECTORS)

    def coerce_point(self, p) -> np.ndarray:
        """Validate and convert one external point to this dataset's shape."""
        arr = as_vector(p) if self.kind is DatasetKind.DENSE_VECTORS else as_codes(p)
        if arr.size != self.dim:
            raise DimensionError(
                f"point has dim {arr.size}, dataset has dim {self.dim}")
        return arr

    def append_point(self, p) -> int:
        """Append one point, returning its index. Invalidates the cached hash."""
        arr = self.coerce_point(p)
        self.values = np.vstack([self.values, arr[np.newaxis, :]])
        self._hash = None
        return self.n - 1

    def content_hash(self) -> bytes:
        """SHA-256 of the canonical serialized bytes of this dataset.

        For dense data this is the hash of the exact CHESSVEC stream; for
        strings, of the upper-case LF-terminated line serialization. A
        dataset saved by this package therefore hashes to the same value
        as its file.
        """
        if self._hash is None:
            self._hash = hashlib.sha256(self.to_canonical_bytes()).digest()
        return self._hash

    def to_canonical_bytes(self) -> bytes:
        if self.kind is DatasetKind.DENSE_VECTORS:
            return _dense_bytes(self)
        newlines = np.full((self.n, 1), ord("\n"), dtype=np.uint8)
        return np.hstack([self.values, newlines]).tobytes()

    @classmethod
    def from_vectors(cls, array) -> "Dataset":
        arr = np.ascontiguousarray(np.asarray(array, dtype=np.float64))
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise DimensionError("dense values must be finite")
        return cls(DatasetKind.DENSE_VECTORS, arr)

    @classmethod
    def from_strings(cls, records, deduplicate: bool = False) -> "Dataset":
        rows = [as_codes(r) for r in records]
        if not rows:
            raise DimensionError("dataset must contain at least one record")
        dim = rows[0].size
        for i, r in enumerate(rows):
            if r.size != dim:
                raise DimensionError(
                    f"record {i + 1} has length {r.size}, expected {dim}")
        if deduplicate:
            seen: dict[bytes, None] = {}
            for r in rows:
                seen.setdefault(r.tobytes())
            rows = [np.frombuffer(b, dtype=np.uint8) for b in seen]
        return cls(DatasetKind.ALIGNED_STRINGS, np.vstack(rows))


def _dense_bytes(dataset: Dataset) -> bytes:
    header = _VEC_HEADER.pack(VEC_MAGIC, VEC_VERSION, dataset.n, dataset.dim)
    return header + np.ascontiguousarray(dataset.values, dtype="<f8").tobytes()


def save_dense(dataset: Dataset, path) -> None:
    """Write a dense dataset as a CHESSVEC file (exact inverse of load_dense)."""
    if dataset.kind is not DatasetKind.DENSE_VECTORS:
        raise DimensionError("save_dense requires a dense-vector dataset")
    Path(path).write_bytes(_dense_bytes(dataset))


def load_dense(path) -> Dataset:
    """Read a CHESSVEC file, verifying magic, version, size, and finiteness."""
    raw = Path(path).read_bytes()
    if len(raw) < _VEC_HEADER.size:
        raise FormatError(f"{path}: truncated header at byte offset {len(raw)}")
    magic, version, n, dim = _VEC_HEADER.unpack_from(raw, 0)
    if magic != VEC_MAGIC:
        raise FormatError(f"{path}: bad magic at byte offset 0")
    if version != VEC_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 8")
    if n < 1 or dim < 1:
        raise FormatError(f"{path}: header promises empty dataset at byte offset 9")
    expected = _VEC_HEADER.size + 8 * n * dim
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload size mismatch (expected {expected} bytes, "
            f"got {len(raw)}) at byte offset {min(len(raw), expected)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_VEC_HEADER.size).reshape(n, dim)
    finite = np.isfinite(values)
    if not finite.all():
        flat = int(np.flatnonzero(~finite.ravel())[0])
        raise FormatError(
            f"{path}: non-finite value at byte offset {_VEC_HEADER.size + 8 * flat}")
    return Dataset(DatasetKind.DENSE_VECTORS, values.astype(np.float64, copy=True))


def load_sequences(path) -> Dataset:
    """Read aligned strings, one per line; FASTA ``>`` headers are skipped.

    Input is upper-cased, CRLF endings are tolerated, and duplicate
    records are dropped keeping the first occurrence.
    """
    text = Path(path).read_bytes().decode("utf-8")
    rows: list[np.ndarray] = []
    dim: int | None = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        record = line.rstrip("\r").upper()
        if not record or record.startswith(">"):
            continue
        arr = np.frombuffer(record.encode("ascii", errors="replace"), dtype=np.uint8)
        bad = ~np.isin(arr, _ALPHABET_CODES)
        if bad.any():
            col = int(np.flatnonzero(bad)[0])
            raise FormatError(
                f"{path}: illegal character {record[col]!r} at line {lineno}, "
                f"column {col + 1}")
        if dim is None:
            dim = arr.size
        elif arr.size != dim:
            raise FormatError(
                f"{path}: line {lineno} has length {arr.size}, expected {dim}")
        rows.append(arr)
    if not rows:
        raise FormatError(f"{path}: no records found")
    return Dataset.from_strings(rows, deduplicate=True)


def synth_manifold(n: int, embed_dim: int, intrinsic_dim: int, noise: float,
                   seed: int, *, density_power: float = 1.0) -> Dataset:
    """Sample points near a random affine subspace, shifted nonnegative.

    Points are drawn on a random ``intrinsic_dim``-dimensional affine
    subspace of ``embed_dim``-space, perturbed by Gaussian noise of
    scale ``noise``, then shifted so the minimum value is zero. The
    result is deterministic for a given seed.

    ``density_power`` reshapes the sampling density along the subspace:
    1.0 gives uniform coordinates, larger values concentrate mass near
    one end, which produces unbalanced cluster hierarchies like those of
    observational data.
    """
    if not 1 <= intrinsic_dim <= embed_dim:
        raise ValueError(f"need 1 <= intrinsic_dim <= embed_dim, "
                         f"got {intrinsic_dim} and {embed_dim}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if noise < 0 or not math.isfinite(noise):
        raise ValueError(f"noise must be finite and nonnegative, got {noise}")
    if density_power <= 0:
        raise ValueError(f"density_power must be positive, got {density_power}")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((embed_dim, intrinsic_dim)))
    coords = rng.random((n, intrinsic_dim)) ** density_power * 100.0
    points = coords @ basis.T
    if noise > 0:
        points = points + noise * rng.standard_normal((n, embed_dim))
    points -= points.min()
    return Dataset.from_vectors(points)


def synth_line(n: int, embed_dim: int, noise: float, seed: int,
               density_power: float = 3.0) -> Dataset:
    """Convenience wrapper: a one-dimensional manifold with skewed density."""
    return synth_manifold(n, embed_dim, 1, noise, seed, density_power=density_power)
