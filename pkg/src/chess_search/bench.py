"""Benchmark harness: held-out queries, per-depth sweeps, exactness audits.

The protocol holds out a seeded random sample of points as queries,
builds one tree per requested depth on the remainder, and runs both the
pruned search and the naive linear scan for every (query, radius) cell.
Speedup is reported on the comparison-count basis (naive comparisons
divided by pruned-search comparisons), which is hardware independent;
wall-clock time is reported alongside. Rows serialize to CSV with a
fixed header and parse back losslessly.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .data import Dataset
from .metrics import MetricKind
from .search import naive_search, rho_search
from .tree import BuildConfig, ClusterTree, build

__all__ = [
    "BenchmarkRow",
    "CSV_HEADER",
    "run_benchmark",
    "verify_exactness",
    "hold_out",
    "rows_to_csv",
    "rows_from_csv",
]

CSV_HEADER = ("depth,radius,metric,comparisons_mean,comparisons_std,"
              "time_mean_s,time_std_s,fraction_mean,fraction_std,"
              "speedup_mean,output_mean,output_std,false_pos,false_neg")


@dataclass
class BenchmarkRow:
    depth: int
    radius: float
    metric: str
    comparisons_mean: float
    comparisons_std: float
    time_mean_s: float
    time_std_s: float
    fraction_mean: float
    fraction_std: float
    speedup_mean: float
    output_mean: float
    output_std: float
    false_pos: int
    false_neg: int


def hold_out(dataset: Dataset, num_queries: int, seed: int,
             ) -> tuple[Dataset, np.ndarray]:
    """Split off a seeded random query sample; returns (held-in dataset,
    query rows)."""
    if not 0 < num_queries < dataset.n:
        raise ValueError(f"num_queries must be in (0, {dataset.n}), "
                         f"got {num_queries}")
    rng = np.random.default_rng(seed)
    query_idx = rng.choice(dataset.n, size=num_queries, replace=False)
    keep = np.ones(dataset.n, dtype=bool)
    keep[query_idx] = False
    held_in = Dataset(dataset.kind, dataset.values[keep].copy())
    return held_in, dataset.values[query_idx].copy()


def _single_leaf(tree: ClusterTree) -> ClusterTree:
    # depth-0 baseline: exact root statistics, no children, no pruning
    root = tree.root
    root.left = root.right = None
    root.members = np.arange(root.cardinality, dtype=np.int64)
    return tree


def _build_at_depth(dataset: Dataset, metric: MetricKind, depth: int,
                    min_size: int, seed: int) -> ClusterTree:
    if depth == 0:
        return _single_leaf(build(dataset, metric,
                                  BuildConfig(max_depth=1, min_size=min_size,
                                              seed=seed)))
    return build(dataset, metric,
                 BuildConfig(max_depth=depth, min_size=min_size, seed=seed))


def run_benchmark(dataset: Dataset, metric: MetricKind, radii, depths,
                  num_queries: int = 50, seed: int = 0, *, min_size: int = 10,
                  threads: int = 1) -> list[BenchmarkRow]:
    """One row per (depth, radius): comparison counts, wall times,
    fraction searched, speedup, output sizes, and exactness tallies."""
    radii = [float(r) for r in radii]
    if any(r < 0 for r in radii):
        raise ValueError("radii must be nonnegative")
    held_in, queries = hold_out(dataset, num_queries, seed)

    # the oracle does not depend on tree depth: one scan per (query, radius)
    naive = {r: [naive_search(held_in, q, r, metric) for q in queries]
             for r in radii}

    rows = []
    for depth in depths:
        tree = _build_at_depth(held_in, metric, depth, min_size, seed)
        for radius in radii:

            def run_query(q):
                return rho_search(tree, q, radius, held_in)

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    reports = list(pool.map(run_query, queries))
            else:
                reports = [run_query(q) for q in queries]

            oracle = naive[radius]
            comparisons = np.array([r.comparisons for r in reports], dtype=float)
            times = np.array([r.wall_time for r in reports])
            fractions = np.array([r.fraction_searched for r in reports])
            outputs = np.array([len(o.hits) for o in oracle], dtype=float)
            speedups = np.array([o.comparisons / r.comparisons
                                 for o, r in zip(oracle, reports)])
            false_pos = false_neg = 0
            for rep, orc in zip(reports, oracle):
                got, want = rep.hit_indices(), orc.hit_indices()
                false_pos += len(got - want)
                false_neg += len(want - got)
            rows.append(BenchmarkRow(
                depth=int(depth), radius=radius, metric=metric.value,
                comparisons_mean=float(comparisons.mean()),
                comparisons_std=float(comparisons.std()),
                time_mean_s=float(times.mean()), time_std_s=float(times.std()),
                fraction_mean=float(fractions.mean()),
                fraction_std=float(fractions.std()),
                speedup_mean=float(speedups.mean()),
                output_mean=float(outputs.mean()),
                output_std=float(outputs.std()),
                false_pos=false_pos, false_neg=false_neg))
    return rows


def verify_exactness(tree: ClusterTree, dataset: Dataset, queries, radii,
                     ) -> tuple[int, int, float]:
    """Count hit-set differences between the pruned search and the naive
    scan over all (query, radius) cells.

    Returns (false positives, false negatives, false-negative rate); the
    rate is false negatives over total naive hits, zero when there are
    no hits at all.
    """
    false_pos = false_neg = total_hits = 0
    for q in queries:
        for r in radii:
            got = rho_search(tree, q, float(r), dataset).hit_indices()
            want = naive_search(dataset, q, float(r), tree.metric).hit_indices()
            false_pos += len(got - want)
            false_neg += len(want - got)
            total_hits += len(want)
    rate = false_neg / total_hits if total_hits else 0.0
    return false_pos, false_neg, rate


def rows_to_csv(rows: list[BenchmarkRow]) -> str:
    """Render rows under the fixed header; floats use shortest-roundtrip
    formatting so parsing them back is lossless."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for row in rows:
        cells = []
        for f in fields(BenchmarkRow):
            value = getattr(row, f.name)
            cells.append(repr(value) if isinstance(value, float) else str(value))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def rows_from_csv(text: str) -> list[BenchmarkRow]:
    lines = [ln for ln in text.strip().split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized benchmark CSV header")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        kwargs = {}
        for f, cell in zip(fields(BenchmarkRow), cells):
            kwargs[f.name] = (int(cell) if f.type == "int"
                              else float(cell) if f.type == "float" else cell)
        rows.append(BenchmarkRow(**kwargs))
    return rows
