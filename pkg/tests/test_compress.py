import zlib

import numpy as np
import pytest

from chess_search import (BuildConfig, ChessError, Dataset, DatasetKind,
                          FormatError, MetricKind, Quantizer, build,
                          compress_tree, decode_leaf, decompress, dequantize,
                          encode_leaf, naive_search, quantize, save_dense,
                          synth_manifold)
from chess_search.compress import DEFAULT_QUANTUM, LeafDeltaBlock, _quantize_block

from conftest import synth_aligned_strings

E = MetricKind.EUCLIDEAN
H = MetricKind.HAMMING


def grid(values: np.ndarray, quantum: float) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) / quantum + 0.5) * quantum


def test_default_quantum_value():
    assert DEFAULT_QUANTUM == 10.0 ** (-12.2 / 2.5)
    assert Quantizer().quantum == DEFAULT_QUANTUM


def test_quantize_examples():
    assert quantize(0.0, 0.5) == 0
    q = 0.37
    assert quantize(3 * q + q / 4, q) == 3
    # halves round away from zero
    assert quantize(0.5 * q, q) == 1
    assert quantize(-0.5 * q, q) == -1
    assert quantize(-3 * q - q / 4, q) == -3


def test_quantize_rejects_bad_input():
    with pytest.raises(ValueError):
        quantize(float("nan"), 1.0)
    with pytest.raises(ValueError):
        quantize(1.0, 0.0)
    with pytest.raises(ValueError):
        Quantizer(-1e-3)


def test_quantize_roundtrip_error_bound():
    rng = np.random.default_rng(7)
    values = rng.uniform(-1e4, 1e4, size=1_000_000)
    q = DEFAULT_QUANTUM * 50
    grid_vals = _quantize_block(values, q) * q
    assert np.abs(values - grid_vals).max() <= q / 2
    # the vectorized path agrees with the scalar contract
    for x in values[:200]:
        assert dequantize(quantize(float(x), q), q) == grid_vals[np.flatnonzero(values == x)[0]]


def test_encode_all_members_equal_center_is_tiny():
    ds = Dataset.from_vectors(np.tile([3.0, 4.0, 5.0], (50, 1)))
    tree = build(ds, E, BuildConfig(seed=0))
    leaf = tree.root
    block = encode_leaf(leaf, ds, Quantizer())
    assert block.member_count == 50
    assert len(block.compressed_body) < 40  # deflate of 150 zero varints
    decoded = decode_leaf(block, ds, Quantizer())
    assert np.array_equal(decoded, grid(ds.values, DEFAULT_QUANTUM))


def test_string_edit_list_length_equals_hamming_distance():
    rows = ["ACGTACGT", "ACGAACGT", "ACGTAC--", "ACGTACGT"[::-1]]
    ds = Dataset.from_strings(rows)
    tree = build(ds, H, BuildConfig(min_size=10, seed=0))
    leaf = tree.root
    block = encode_leaf(leaf, ds, Quantizer())
    decoded = decode_leaf(block, ds, Quantizer())
    assert np.array_equal(decoded, ds.values)
    # per-member edit counts are the Hamming distances to the center
    body = zlib.decompress(block.compressed_body, wbits=-15)
    center = ds.values[leaf.center]
    pos = 0
    for idx in leaf.members.tolist():
        count = body[pos]  # single-byte varints here
        expected = int((ds.values[idx] != center).sum())
        assert count == expected
        pos += 1 + 5 * count


def test_edit_bound_violation_is_detected():
    ds = Dataset.from_strings(["AAAA", "CCCC"])
    tree = build(ds, H, BuildConfig(seed=0))
    leaf = tree.root
    leaf.radius = 1.0  # lie: member at Hamming distance 4
    with pytest.raises(ChessError, match="exceed leaf radius"):
        encode_leaf(leaf, ds, Quantizer())


def test_dense_roundtrip_lands_on_grid_and_is_idempotent(tmp_path):
    ds = synth_manifold(400, 12, 2, 0.3, seed=17)
    tree = build(ds, E, BuildConfig(max_depth=12, min_size=6, seed=1))
    path = tmp_path / "a.chess"
    compress_tree(tree, ds, Quantizer(), path)
    once = decompress(path)
    assert np.array_equal(once.values, grid(ds.values, DEFAULT_QUANTUM))
    tree2 = build(once, E, BuildConfig(max_depth=12, min_size=6, seed=1))
    path2 = tmp_path / "b.chess"
    compress_tree(tree2, once, Quantizer(), path2)
    twice = decompress(path2)
    assert np.array_equal(twice.values, once.values)


def test_strings_roundtrip_bit_exact(tmp_path):
    ds = synth_aligned_strings(600, 80, 6, 0.02, seed=23)
    tree = build(ds, H, BuildConfig(max_depth=20, min_size=8, seed=2))
    path = tmp_path / "s.chess"
    compress_tree(tree, ds, Quantizer(), path)
    back = decompress(path)
    assert back.kind is DatasetKind.ALIGNED_STRINGS
    assert np.array_equal(back.values, ds.values)


def test_duplicate_rich_archive_beats_raw_and_deflate(tmp_path):
    rng = np.random.default_rng(29)
    base = rng.uniform(0, 1000, size=(300, 24))
    copies = (base[None, :, :]
              + rng.normal(0, 25 * DEFAULT_QUANTUM, size=(12, 300, 24)))
    ds = Dataset.from_vectors(copies.reshape(3600, 24))
    tree = build(ds, E, BuildConfig(max_depth=40, min_size=10, seed=3))
    raw_path, arc_path = tmp_path / "raw.vec", tmp_path / "arc.chess"
    save_dense(ds, raw_path)
    compress_tree(tree, ds, Quantizer(), arc_path)
    raw = raw_path.stat().st_size
    archived = arc_path.stat().st_size
    assert archived < raw
    assert archived < len(zlib.compress(raw_path.read_bytes(), 6))


def test_corrupt_block_is_rejected(tmp_path):
    ds = synth_manifold(150, 6, 1, 0.1, seed=31)
    tree = build(ds, E, BuildConfig(max_depth=8, min_size=5, seed=4))
    path = tmp_path / "c.chess"
    compress_tree(tree, ds, Quantizer(), path)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF  # flip a byte inside the final block's payload/crc
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        decompress(path)


def test_compress_requires_matching_dataset(tmp_path):
    ds = synth_manifold(100, 5, 1, 0.1, seed=37)
    other = synth_manifold(100, 5, 1, 0.1, seed=38)
    tree = build(ds, E, BuildConfig(seed=5))
    with pytest.raises(ValueError, match="not built over"):
        compress_tree(tree, other, Quantizer(), tmp_path / "x.chess")


def test_block_wire_roundtrip():
    ds = Dataset.from_vectors(np.arange(12.0).reshape(4, 3))
    tree = build(ds, E, BuildConfig(min_size=10, seed=0))
    block = encode_leaf(tree.root, ds, Quantizer())
    raw = block.to_bytes()
    parsed, end = LeafDeltaBlock.from_bytes(raw, 0)
    assert end == len(raw)
    assert parsed == block


def test_search_agrees_on_decompressed_corpus(tmp_path):
    # pick a radius in a wide gap of the distance distribution so the
    # quantum-sized displacements cannot flip any membership decision
    ds = synth_manifold(500, 10, 1, 0.05, seed=41)
    tree = build(ds, E, BuildConfig(max_depth=15, min_size=6, seed=6))
    path = tmp_path / "g.chess"
    compress_tree(tree, ds, Quantizer(), path)
    back = decompress(path)
    q = ds.values[11]
    dists = np.sort(np.linalg.norm(ds.values - q, axis=1))
    gaps = np.diff(dists)
    safe = DEFAULT_QUANTUM * np.sqrt(ds.dim) * 4
    i = int(np.argmax(gaps > safe))
    radius = float((dists[i] + dists[i + 1]) / 2)
    assert radius >= DEFAULT_QUANTUM * np.sqrt(ds.dim)
    got = naive_search(back, q, radius, E).hit_indices()
    want = naive_search(ds, q, radius, E).hit_indices()
    assert got == want
