"""Shared corpora and oracles for the test suite.

The acceptance corpora are pinned by seed so every run sees identical
data: a one-dimensional manifold with skewed density for the dense
criteria, a noisier variant with wide angular spread for the cosine
runs, and a mutation-generated aligned-string corpus.
"""

from __future__ import annotations

import numpy as np
import pytest

from chess_search import Dataset, DatasetKind, synth_manifold

# corpus (a): dense 1-D manifold; rows beyond CORPUS_A_N feed the
# live-insertion criterion (same manifold, fresh points and queries)
CORPUS_A_N = 10_000
CORPUS_A_INSERTS = 100
CORPUS_A_FRESH_QUERIES = 20
CORPUS_A_SEED = 20250808

COSINE_CORPUS_SEED = 31337
STRINGS_SEED = 4242
HOLDOUT_SEED = 99

ALPHABET = np.frombuffer(b"ACGT-", dtype=np.uint8)


def synth_aligned_strings(n: int, length: int, n_ancestors: int,
                          sub_rate: float, seed: int) -> Dataset:
    """Unique aligned strings mutated from a handful of random ancestors."""
    rng = np.random.default_rng(seed)
    ancestors = ALPHABET[rng.integers(0, 5, size=(n_ancestors, length))]
    seen: set[bytes] = set()
    rows = []
    while len(rows) < n:
        row = ancestors[rng.integers(0, n_ancestors)].copy()
        k = int(rng.binomial(length, sub_rate))
        if k:
            positions = rng.choice(length, size=k, replace=False)
            row[positions] = ALPHABET[rng.integers(0, 5, size=k)]
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(row)
    return Dataset(DatasetKind.ALIGNED_STRINGS, np.vstack(rows))


def brute_force_knn(values: np.ndarray, q: np.ndarray, k: int,
                    dists: np.ndarray) -> list[int]:
    """The k nearest row indices, distance ties broken by lower index."""
    order = np.lexsort((np.arange(len(values)), dists))
    return [int(i) for i in order[:k]]


@pytest.fixture(scope="session")
def corpus_a_extended() -> Dataset:
    n = CORPUS_A_N + CORPUS_A_INSERTS + CORPUS_A_FRESH_QUERIES
    return synth_manifold(n, 100, 1, 0.0, seed=CORPUS_A_SEED, density_power=5.0)


@pytest.fixture(scope="session")
def corpus_a(corpus_a_extended) -> Dataset:
    return Dataset(DatasetKind.DENSE_VECTORS,
                   corpus_a_extended.values[:CORPUS_A_N].copy())


@pytest.fixture(scope="session")
def corpus_a_cosine() -> Dataset:
    return synth_manifold(CORPUS_A_N, 100, 1, 3.0, seed=COSINE_CORPUS_SEED,
                          density_power=1.0)


@pytest.fixture(scope="session")
def corpus_b() -> Dataset:
    return synth_aligned_strings(5_000, 500, 20, 0.005, seed=STRINGS_SEED)
