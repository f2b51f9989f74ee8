"""Distance functions, their properties, and comparison-count instrumentation.

Four distances are provided. Euclidean and cosine apply to dense real
vectors; Hamming and Levenshtein apply to aligned strings over the
alphabet ``A C G T -``. Euclidean, Hamming, and Levenshtein are true
metrics; cosine distance (1 - cosine similarity) violates the triangle
inequality and therefore cannot guarantee exact pruning.

Every distance evaluation that matters for cost accounting goes through
a :class:`ComparisonCounter`. Bulk evaluations of one query against many
stored points use the same per-row arithmetic as single-pair calls, so a
distance computed during a leaf scan is bit-identical to the same pair
computed in isolation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError

__all__ = [
    "MetricKind",
    "ComparisonCounter",
    "distance",
    "counted_distance",
    "distances_to",
    "as_vector",
    "as_codes",
]

#: Alphabet accepted for string points (gap character included).
STRING_ALPHABET = b"ACGT-"

_ALPHABET_SET = frozenset(STRING_ALPHABET)


class MetricKind(enum.Enum):
    """Identifies a distance function and its structural properties."""

    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    HAMMING = "hamming"
    LEVENSHTEIN = "levenshtein"

    @property
    def obeys_triangle_inequality(self) -> bool:
        return self is not MetricKind.COSINE

    @property
    def for_vectors(self) -> bool:
        """True when the distance applies to dense vectors, False for strings."""
        return self in (MetricKind.EUCLIDEAN, MetricKind.COSINE)

    @property
    def wire_id(self) -> int:
        """Stable one-byte identifier used by the on-disk tree format."""
        return _WIRE_IDS[self]

    @classmethod
    def from_name(cls, name: str) -> "MetricKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown metric {name!r}; expected one of "
                             f"{', '.join(m.value for m in cls)}") from None

    @classmethod
    def from_wire_id(cls, wire_id: int) -> "MetricKind":
        for kind, value in _WIRE_IDS.items():
            if value == wire_id:
                return kind
        raise ValueError(f"unknown metric id byte {wire_id}")


_WIRE_IDS = {
    MetricKind.EUCLIDEAN: 0,
    MetricKind.COSINE: 1,
    MetricKind.HAMMING: 2,
    MetricKind.LEVENSHTEIN: 3,
}


@dataclass
class ComparisonCounter:
    """Counts distance evaluations within one build or one query.

    Not thread safe; each concurrent operation owns its own counter.
    """

    count: int = 0

    def add(self, n: int = 1) -> None:
        self.count += n

    def reset(self) -> None:
        self.count = 0


def as_vector(p) -> np.ndarray:
    """Coerce a dense point to a 1-D float64 array."""
    try:
        arr = np.asarray(p, dtype=np.float64)
    except (TypeError, ValueError):
        raise DimensionError(
            f"expected a dense numeric vector, got {type(p).__name__}") from None
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a 1-D dense vector, got shape {arr.shape}")
    return arr


def as_codes(p) -> np.ndarray:
    """Coerce a string point to a 1-D uint8 array of character codes.

    Accepts ``str``, ``bytes``, or an existing uint8 array. Input letters
    are upper-cased; characters outside ``A C G T -`` are rejected.
    """
    if isinstance(p, str):
        p = p.upper().encode("ascii", errors="replace")
    if isinstance(p, (bytes, bytearray)):
        arr = np.frombuffer(bytes(p), dtype=np.uint8)
    else:
        arr = np.asarray(p)
        if arr.dtype != np.uint8:
            raise DimensionError(f"expected a string point, got dtype {arr.dtype}")
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a 1-D string point, got shape {arr.shape}")
    bad = [c for c in set(arr.tolist()) if c not in _ALPHABET_SET]
    if bad:
        raise DimensionError(
            f"illegal character {chr(bad[0])!r}; alphabet is A, C, G, T, -")
    return arr


def _levenshtein_row(points: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Edit distance from q to every row of points (classic DP, one row each)."""
    out = np.empty(len(points), dtype=np.float64)
    for i, row in enumerate(points):
        out[i] = _levenshtein_pair(row, q)
    return out


def _levenshtein_pair(a: np.ndarray, b: np.ndarray) -> int:
    if a.size < b.size:
        a, b = b, a
    n = b.size
    offsets = np.arange(1, n + 1)
    prev = np.arange(n + 1, dtype=np.int64)
    for i, ca in enumerate(a, start=1):
        # substitution/deletion first, then a prefix-min pass for insertions:
        # cur[j] = min over k<=j of cand[k] + (j - k).
        cand = np.minimum(prev[1:] + 1, prev[:-1] + (b != ca))
        cand = np.minimum(cand, i + offsets)
        cur = np.empty(n + 1, dtype=np.int64)
        cur[0] = i
        cur[1:] = np.minimum.accumulate(cand - offsets) + offsets
        prev = cur
    return int(prev[-1])


def distances_to(points: np.ndarray, q, kind: MetricKind,
                 counter: ComparisonCounter | None = None) -> np.ndarray:
    """Distances from a query point to every row of a 2-D point block.

    This is the single arithmetic path for all bulk and single-pair
    evaluations; the result for a given row does not depend on which
    other rows are in the block. The counter, when given, is charged one
    comparison per row.
    """
    if kind.for_vectors:
        q = as_vector(q)
        if points.ndim != 2 or points.shape[1] != q.size:
            raise DimensionError(
                f"dimension mismatch: points have dim {points.shape[-1]}, "
                f"query has dim {q.size}")
        if kind is MetricKind.EUCLIDEAN:
            diff = points - q
            result = np.sqrt((diff * diff).sum(axis=1))
        else:
            qn = math.sqrt(float((q * q).sum()))
            if qn == 0.0:
                raise DegenerateInputError("cosine distance undefined for the zero vector")
            norms = np.sqrt((points * points).sum(axis=1))
            if np.any(norms == 0.0):
                raise DegenerateInputError("cosine distance undefined for the zero vector")
            result = 1.0 - (points * q).sum(axis=1) / (norms * qn)
    else:
        q = as_codes(q)
        if points.ndim != 2:
            raise DimensionError("expected a 2-D block of string points")
        if kind is MetricKind.HAMMING:
            if points.shape[1] != q.size:
                raise DimensionError(
                    f"Hamming distance requires equal lengths: "
                    f"{points.shape[1]} vs {q.size}")
            result = (points != q).sum(axis=1).astype(np.float64)
        else:
            result = _levenshtein_row(points, q)
    if counter is not None:
        counter.add(len(points))
    return result


def distance(a, b, kind: MetricKind) -> float:
    """Distance between two points under the given kind.

    Nonnegative, symmetric, and zero on identical points. Euclidean is
    the L2 norm of the difference; cosine is one minus the cosine
    similarity; Hamming counts differing positions of equal-length
    strings; Levenshtein is the minimum number of single-character
    edits (lengths may differ).
    """
    if kind.for_vectors:
        a = as_vector(a)
        b = as_vector(b)
        if a.size != b.size:
            raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
        return float(distances_to(b[np.newaxis, :], a, kind)[0])
    a = as_codes(a)
    b = as_codes(b)
    if kind is MetricKind.HAMMING and a.size != b.size:
        raise DimensionError(
            f"Hamming distance requires equal lengths: {a.size} vs {b.size}")
    return float(distances_to(b[np.newaxis, :], a, kind)[0])


def counted_distance(a, b, kind: MetricKind, counter: ComparisonCounter) -> float:
    """Same as :func:`distance`, charging exactly one comparison."""
    value = distance(a, b, kind)
    counter.add(1)
    return value
