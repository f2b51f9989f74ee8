"""Divisive binary cluster hierarchy over a dataset.

The build picks two maximally separated seed points (poles) from a
random sample of roughly sqrt(m) members, assigns every member to the
nearer pole, and recurses. A node stops splitting at the configured
maximum depth, at or below the minimum size, or when its radius is zero
(all members identical). Per-node geometry is exact: the radius is the
maximum member distance to the center, and the local fractal dimension
is the log2 ratio of member counts within the full radius and half the
radius.

Member distances to the freshly chosen child center fall out of the
partitioning step, so radii and fractal dimensions cost no additional
distance evaluations; the total build cost stays within
``3 * (depth + 1) * n + n`` comparisons.

Each node draws randomness from its own seeded stream, so a tree is a
pure function of (dataset, metric, config) regardless of evaluation
order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .data import Dataset
from .errors import DimensionError, FormatError
from .metrics import ComparisonCounter, MetricKind, distances_to

__all__ = [
    "BuildConfig",
    "ClusterNode",
    "ClusterTree",
    "build",
    "select_poles",
    "partition",
    "local_fractal_dimension",
    "metric_entropy",
    "lfd_depth_profile",
    "insert_point",
    "serialize",
    "deserialize",
    "tree_to_bytes",
    "tree_from_bytes",
]

TREE_MAGIC = b"CHESSTREE"
TREE_VERSION = 1
_TREE_HEADER = struct.Struct("<9sBBQQQ32s")
_NODE_RECORD = struct.Struct("<BQddQ")
_U64 = struct.Struct("<Q")

#: Multiple of the leaf radius beyond which an inserted point starts a
#: new sibling cluster instead of joining the leaf.
DEFAULT_SPLIT_FACTOR = 2.0


@dataclass
class BuildConfig:
    """Build parameters; the seed is normalized to an unsigned 64-bit value."""

    max_depth: int = 50
    min_size: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_depth <= 0:
            raise ValueError(f"max_depth must be positive, got {self.max_depth}")
        if self.min_size <= 0:
            raise ValueError(f"min_size must be positive, got {self.min_size}")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF


@dataclass
class ClusterNode:
    """One cluster: a center point index, exact radius, and either two
    children or an explicit member list (leaves only)."""

    center: int
    radius: float
    cardinality: int
    lfd: float
    depth: int
    left: "ClusterNode | None" = None
    right: "ClusterNode | None" = None
    members: np.ndarray | None = None  # int64 point indices, leaves only

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def iter_nodes(self) -> Iterator["ClusterNode"]:
        """Pre-order traversal of this subtree."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def iter_leaves(self) -> Iterator["ClusterNode"]:
        for node in self.iter_nodes():
            if node.is_leaf:
                yield node

    def member_indices(self) -> np.ndarray:
        """All point indices in this cluster, gathered from descendant leaves."""
        if self.is_leaf:
            return self.members
        return np.concatenate([leaf.members for leaf in self.iter_leaves()])


@dataclass
class ClusterTree:
    root: ClusterNode
    metric: MetricKind
    config: BuildConfig
    dataset_hash: bytes
    build_comparisons: int = 0

    @property
    def depth(self) -> int:
        """Deepest leaf level actually reached."""
        return max(leaf.depth for leaf in self.root.iter_leaves())

    def leaf_radii(self) -> np.ndarray:
        return np.array([leaf.radius for leaf in self.root.iter_leaves()])

    def mean_leaf_radius(self) -> float:
        return float(self.leaf_radii().mean())

    def median_leaf_radius(self) -> float:
        return float(np.median(self.leaf_radii()))


def _node_rng(seed: int, stream: int) -> np.random.Generator:
    # one independent stream per node (heap numbering); stream 0 is
    # reserved for root-center selection
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, stream)))


def _sample_size(m: int) -> int:
    return min(m, max(2, math.isqrt(m - 1) + 1))  # ceil(sqrt(m)), clamped to [2, m]


def select_poles(member_indices, dataset: Dataset, metric: MetricKind,
                 counter: ComparisonCounter, rng: np.random.Generator,
                 ) -> tuple[int, int]:
    """Pick the two maximally separated points of a random member sample.

    Draws ``max(2, ceil(sqrt(m)))`` distinct seeds and returns the seed
    pair at maximum pairwise distance, ties broken toward the smallest
    point indices. The first element of the returned pair is always the
    lower point index.
    """
    idx = np.asarray(member_indices, dtype=np.int64)
    m = idx.size
    if m < 2:
        raise ValueError("select_poles requires at least 2 members")
    seeds = np.sort(rng.choice(idx, size=_sample_size(m), replace=False))
    values = dataset.values
    best_i = best_j = 0
    best_d = -1.0
    for i in range(seeds.size - 1):
        row = distances_to(values[seeds[i + 1:]], values[seeds[i]], metric, counter)
        j = int(np.argmax(row))
        if row[j] > best_d:
            best_d = float(row[j])
            best_i, best_j = i, i + 1 + j
    return int(seeds[best_i]), int(seeds[best_j])


def _partition_core(member_indices: np.ndarray, dataset: Dataset,
                    metric: MetricKind, counter: ComparisonCounter,
                    rng: np.random.Generator):
    """Partition members between two poles, returning each side's indices
    together with every member's distance to its own side's center."""
    idx = np.asarray(member_indices, dtype=np.int64)
    if idx.size < 2:
        raise ValueError("partition requires at least 2 members")
    left_center, right_center = select_poles(idx, dataset, metric, counter, rng)
    values = dataset.values
    pos_l = int(np.flatnonzero(idx == left_center)[0])
    pos_r = int(np.flatnonzero(idx == right_center)[0])
    rest = np.ones(idx.size, dtype=bool)
    rest[pos_l] = rest[pos_r] = False

    d_left = np.zeros(idx.size)
    d_right = np.zeros(idx.size)
    if rest.any():
        rest_rows = values[idx[rest]]
        d_left[rest] = distances_to(rest_rows, values[left_center], metric, counter)
        d_right[rest] = distances_to(rest_rows, values[right_center], metric, counter)

    goes_left = d_left <= d_right  # ties go left
    goes_left[pos_l] = True
    goes_left[pos_r] = False
    return (idx[goes_left], idx[~goes_left], left_center, right_center,
            d_left[goes_left], d_right[~goes_left])


def partition(member_indices, dataset: Dataset, metric: MetricKind,
              counter: ComparisonCounter, rng: np.random.Generator):
    """Split members between two poles chosen by :func:`select_poles`.

    A member goes left when its distance to the left pole is less than
    or equal to its distance to the right pole; each pole always lands
    on its own side. Returns (left_indices, right_indices, left_center,
    right_center).
    """
    left_idx, right_idx, lc, rc, _, _ = _partition_core(
        np.asarray(member_indices, dtype=np.int64), dataset, metric, counter, rng)
    return left_idx, right_idx, lc, rc


def _lfd_from_dists(cardinality: int, radius: float, dists: np.ndarray) -> float:
    if cardinality <= 1 or radius == 0.0:
        return 0.0
    inner = int(np.count_nonzero(dists <= radius / 2.0))
    return math.log2(cardinality / inner)


def build(dataset: Dataset, metric: MetricKind, config: BuildConfig) -> ClusterTree:
    """Cluster the dataset into a binary hierarchy.

    The root center is the sampled point minimizing the summed distance
    to a sqrt(n) sample (an approximate geometric median); child centers
    are the poles of their parent's partition. Identical inputs produce
    identical trees.
    """
    if not dataset.compatible_with(metric):
        raise DimensionError(
            f"metric {metric.value} does not apply to {dataset.kind.value} data")
    counter = ComparisonCounter()
    n = dataset.n
    all_idx = np.arange(n, dtype=np.int64)

    if n == 1:
        root = ClusterNode(center=0, radius=0.0, cardinality=1, lfd=0.0,
                           depth=0, members=all_idx)
        return ClusterTree(root, metric, config, dataset.content_hash(),
                           counter.count)

    values = dataset.values
    rng0 = _node_rng(config.seed, 0)
    seeds = np.sort(rng0.choice(all_idx, size=_sample_size(n), replace=False))
    s = seeds.size
    pair = np.zeros((s, s))
    for i in range(s - 1):
        row = distances_to(values[seeds[i + 1:]], values[seeds[i]], metric, counter)
        pair[i, i + 1:] = row
        pair[i + 1:, i] = row
    root_center = int(seeds[int(np.argmin(pair.sum(axis=1)))])

    root_dists = np.zeros(n)
    others = all_idx != root_center
    root_dists[others] = distances_to(values[others], values[root_center],
                                      metric, counter)

    def grow(idx: np.ndarray, center: int, dists: np.ndarray,
             depth: int, stream: int) -> ClusterNode:
        cardinality = idx.size
        radius = float(dists.max())
        lfd = _lfd_from_dists(cardinality, radius, dists)
        node = ClusterNode(center=center, radius=radius,
                           cardinality=cardinality, lfd=lfd, depth=depth)
        if (depth >= config.max_depth or cardinality <= config.min_size
                or radius == 0.0):
            node.members = idx
            return node
        left_idx, right_idx, lc, rc, dl, dr = _partition_core(
            idx, dataset, metric, counter, _node_rng(config.seed, stream))
        node.left = grow(left_idx, lc, dl, depth + 1, 2 * stream)
        node.right = grow(right_idx, rc, dr, depth + 1, 2 * stream + 1)
        return node

    root = grow(all_idx, root_center, root_dists, 0, 1)
    return ClusterTree(root, metric, config, dataset.content_hash(), counter.count)


def local_fractal_dimension(node: ClusterNode, dataset: Dataset,
                            metric: MetricKind) -> float:
    """log2 of the member count within the node radius over the count
    within half the radius, both balls centered on the node center and
    counting node members only. Zero for singletons and zero-radius
    clusters."""
    members = node.member_indices()
    if members.size <= 1 or node.radius == 0.0:
        return 0.0
    dists = distances_to(dataset.values[members], dataset.values[node.center],
                         metric)
    return _lfd_from_dists(members.size, node.radius, dists)


def metric_entropy(tree: ClusterTree) -> int:
    """Number of leaf clusters."""
    return sum(1 for _ in tree.root.iter_leaves())


def lfd_depth_profile(tree: ClusterTree) -> list[tuple[int, int, float]]:
    """Mean local fractal dimension per (depth, decile).

    Clusters at each depth are ranked by fractal dimension and split
    into ten rank buckets; empty buckets are omitted. Rows are sorted by
    depth then decile, and decile means are nondecreasing within a
    depth by construction.
    """
    by_depth: dict[int, list[float]] = {}
    for node in tree.root.iter_nodes():
        by_depth.setdefault(node.depth, []).append(node.lfd)
    rows: list[tuple[int, int, float]] = []
    for depth in sorted(by_depth):
        ranked = np.sort(np.array(by_depth[depth]))
        for decile, bucket in enumerate(np.array_split(ranked, 10)):
            if bucket.size:
                rows.append((depth, decile, float(bucket.mean())))
    return rows


def insert_point(tree: ClusterTree, point, dataset: Dataset,
                 split_factor: float = DEFAULT_SPLIT_FACTOR) -> ClusterTree:
    """Add one point to the dataset and thread it into the tree.

    Descends from the root following the nearer child center (ties going
    left), updating cardinality and radius along the path. When the
    point lands farther than ``split_factor`` times the leaf radius from
    the leaf center (and the radius is positive), the leaf is split into
    the old leaf plus a new singleton under a fresh internal node.

    Requires exclusive access: no concurrent searches during mutation.
    """
    arr = dataset.coerce_point(point)
    new_index = dataset.append_point(arr)
    values = dataset.values

    def dist_to(center: int) -> float:
        return float(distances_to(values[center][np.newaxis, :], arr,
                                  tree.metric)[0])

    parent: ClusterNode | None = None
    node = tree.root
    while not node.is_leaf:
        node.cardinality += 1
        node.radius = max(node.radius, dist_to(node.center))
        parent = node
        node = (node.left
                if dist_to(node.left.center) <= dist_to(node.right.center)
                else node.right)

    d_leaf = dist_to(node.center)
    if node.radius > 0.0 and d_leaf > split_factor * node.radius:
        singleton = ClusterNode(center=new_index, radius=0.0, cardinality=1,
                                lfd=0.0, depth=node.depth + 1,
                                members=np.array([new_index], dtype=np.int64))
        replacement = ClusterNode(center=node.center,
                                  radius=max(node.radius, d_leaf),
                                  cardinality=node.cardinality + 1,
                                  lfd=0.0, depth=node.depth,
                                  left=node, right=singleton)
        node.depth += 1
        replacement.lfd = local_fractal_dimension(replacement, dataset, tree.metric)
        if parent is None:
            tree.root = replacement
        elif parent.left is node:
            parent.left = replacement
        else:
            parent.right = replacement
    else:
        node.members = np.append(node.members, np.int64(new_index))
        node.cardinality += 1
        node.radius = max(node.radius, d_leaf)

    tree.dataset_hash = dataset.content_hash()
    return tree


def tree_to_bytes(tree: ClusterTree) -> bytes:
    """Serialize to the CHESSTREE wire format (pre-order node records)."""
    chunks = [_TREE_HEADER.pack(TREE_MAGIC, TREE_VERSION, tree.metric.wire_id,
                                tree.config.max_depth, tree.config.min_size,
                                tree.config.seed, tree.dataset_hash)]
    for node in tree.root.iter_nodes():
        flags = 0 if node.is_leaf else 1
        chunks.append(_NODE_RECORD.pack(flags, node.center, node.radius,
                                        node.lfd, node.cardinality))
        if node.is_leaf:
            chunks.append(_U64.pack(node.members.size))
            chunks.append(np.ascontiguousarray(node.members, dtype="<u8").tobytes())
    return b"".join(chunks)


def tree_from_bytes(raw: bytes, offset: int = 0) -> tuple[ClusterTree, int]:
    """Parse a CHESSTREE byte stream; returns the tree and the end offset.

    The returned tree is not yet bound to a dataset: callers are
    responsible for checking ``dataset_hash`` (see :func:`deserialize`).
    """
    if len(raw) - offset < _TREE_HEADER.size:
        raise FormatError(f"truncated tree header at byte offset {len(raw)}")
    magic, version, metric_id, max_depth, min_size, seed, digest = \
        _TREE_HEADER.unpack_from(raw, offset)
    if magic != TREE_MAGIC:
        raise FormatError(f"bad tree magic at byte offset {offset}")
    if version != TREE_VERSION:
        raise FormatError(f"unsupported tree version {version} at byte offset "
                          f"{offset + len(TREE_MAGIC)}")
    try:
        metric = MetricKind.from_wire_id(metric_id)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    config = BuildConfig(max_depth=max_depth, min_size=min_size, seed=seed)
    pos = offset + _TREE_HEADER.size

    def read_node(depth: int) -> ClusterNode:
        nonlocal pos
        if len(raw) - pos < _NODE_RECORD.size:
            raise FormatError(f"truncated node record at byte offset {len(raw)}")
        flags, center, radius, lfd, cardinality = _NODE_RECORD.unpack_from(raw, pos)
        pos += _NODE_RECORD.size
        node = ClusterNode(center=center, radius=radius, cardinality=cardinality,
                           lfd=lfd, depth=depth)
        if flags & 1:
            node.left = read_node(depth + 1)
            node.right = read_node(depth + 1)
        else:
            if len(raw) - pos < _U64.size:
                raise FormatError(f"truncated member count at byte offset {len(raw)}")
            (count,) = _U64.unpack_from(raw, pos)
            pos += _U64.size
            if len(raw) - pos < 8 * count:
                raise FormatError(f"truncated member list at byte offset {len(raw)}")
            node.members = np.frombuffer(raw, dtype="<u8", count=count,
                                         offset=pos).astype(np.int64)
            pos += 8 * count
        return node

    root = read_node(0)
    return ClusterTree(root, metric, config, digest), pos


def serialize(tree: ClusterTree, path) -> None:
    Path(path).write_bytes(tree_to_bytes(tree))


def deserialize(path, dataset: Dataset) -> ClusterTree:
    """Load a CHESSTREE file, refusing trees built over a different dataset."""
    tree, end = tree_from_bytes(Path(path).read_bytes())
    if tree.dataset_hash != dataset.content_hash():
        raise FormatError(
            f"{path}: tree was built over a different dataset "
            f"(hash {tree.dataset_hash.hex()[:16]}..., "
            f"dataset {dataset.content_hash().hex()[:16]}...)")
    if not dataset.compatible_with(tree.metric):
        raise FormatError(f"{path}: metric {tree.metric.value} does not apply "
                          f"to {dataset.kind.value} data")
    return tree
