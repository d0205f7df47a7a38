import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsrmv import kernels as kn
from rsrmv import matcore as mc
from rsrmv import preproc as pp
from rsrmv.errors import DimensionMismatch, HeterogeneousSiblings

from conftest import random_packed


def _rel_err(y, ref, ent, v):
    # guard only exact zeros; scale floor from the row condition number
    cond = np.abs(ent.astype(np.float64)) @ np.abs(v.astype(np.float64))
    denom = np.maximum(np.abs(ref), 1e-12 * (1.0 + cond))
    return float(np.max(np.abs(y - ref) / denom)) if len(ref) else 0.0


# ---------------------------------------------------------------------------
# rsr_matvec

@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 200),
       st.integers(1, 9), st.sampled_from([mc.BINARY, mc.TERNARY]),
       st.sampled_from([None, 48]))
def test_int_path_matches_oracle(seed, m_, n_, k, bw, tile):
    rng = np.random.default_rng(seed)
    ent, m = random_packed(rng, m_, n_, bw)
    a = pp.preprocess(m, k, tile_width=tile)
    v = rng.integers(-128, 128, n_).astype(np.int8)
    y = kn.rsr_matvec(a, v)
    assert y.dtype == np.int32
    assert np.array_equal(y, mc.naive_matvec(m, v))


@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 200),
       st.integers(1, 9), st.sampled_from([mc.BINARY, mc.TERNARY]))
def test_float_path_within_tolerance(seed, m_, n_, k, bw):
    rng = np.random.default_rng(seed)
    ent, m = random_packed(rng, m_, n_, bw)
    a = pp.preprocess(m, k)
    v = rng.standard_normal(n_).astype(np.float32)
    y = kn.rsr_matvec(a, v)
    assert y.dtype == np.float32
    assert _rel_err(y, mc.naive_matvec(m, v), ent, v) <= 1e-5


def test_int_path_saturating_inputs():
    # worst-case magnitudes cannot overflow the int32 accumulator
    n = 4096
    ent = np.ones((3, n), np.int8)
    a = pp.preprocess(mc.encode(ent, 3, n, mc.BINARY), 3)
    v = np.full(n, -128, np.int8)
    assert list(kn.rsr_matvec(a, v)) == [-128 * n] * 3


def test_vector_validation():
    _, m = random_packed(np.random.default_rng(0), 4, 8, mc.BINARY)
    a = pp.preprocess(m, 2)
    with pytest.raises(DimensionMismatch):
        kn.rsr_matvec(a, np.zeros(9, np.int8))
    with pytest.raises(DimensionMismatch):
        kn.rsr_matvec(a, np.zeros(8, np.int16))
    with pytest.raises(DimensionMismatch):
        kn.rsr_matvec(a, np.zeros((2, 4), np.int8))


def test_parallel_twin_is_bit_identical():
    rng = np.random.default_rng(1)
    _, m = random_packed(rng, 57, 301, mc.TERNARY)
    a = pp.preprocess(m, 5, tile_width=100)
    v = rng.integers(-128, 128, 301).astype(np.int8)
    serial = kn.rsr_matvec(a, v, threads=1)
    parallel = kn.rsr_matvec(a, v, threads=4)
    assert np.array_equal(serial, parallel)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("RSR_THREADS", "3")
    assert kn.thread_count() == 3
    monkeypatch.setenv("RSR_THREADS", "junk")
    assert kn.thread_count() == 1
    monkeypatch.delenv("RSR_THREADS")
    assert kn.thread_count() == 1


# ---------------------------------------------------------------------------
# counters

def test_counter_matches_structure_and_accumulates():
    rng = np.random.default_rng(2)
    _, m = random_packed(rng, 16, 64, mc.TERNARY)
    a = pp.preprocess(m, 4)
    c = kn.OpCounter()
    v = rng.integers(-10, 10, 64).astype(np.int8)
    kn.rsr_matvec(a, v, c)
    assert (c.gather_adds, c.scatter_adds, c.groups_visited) == a.op_totals()
    kn.rsr_matvec(a, v, c)
    g, s, ng = a.op_totals()
    assert (c.gather_adds, c.scatter_adds, c.groups_visited) == (2*g, 2*s, 2*ng)


def test_counts_beat_dense_on_redundant_matrix():
    # two distinct columns repeated: gather n adds, scatter is tiny
    ent = np.tile(np.array([[1, 0], [1, 1]], np.int8), (1, 32))
    a = pp.preprocess(mc.encode(ent, 2, 64, mc.BINARY), 2)
    g, s, ng = a.op_totals()
    assert g == 64 and ng == 2 and s == 3
    assert g + s < 2 * 64  # dense multiply-add count


# ---------------------------------------------------------------------------
# fused path

@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 150))
def test_fused_equals_composed_pipeline(seed, m_, n_):
    rng = np.random.default_rng(seed)
    ent, m = random_packed(rng, m_, n_, mc.TERNARY, weight_scale=0.37)
    a = pp.preprocess(m, 4)
    v = (rng.standard_normal(n_) * 3).astype(np.float32)
    fused = kn.rsr_matvec_fused(a, v)
    q = mc.quantize_activations(v)
    composed = (kn.rsr_matvec(a, q.values).astype(np.float64)
                * (0.37 / q.scale)).astype(np.float32)
    assert fused.dtype == np.float32
    assert np.array_equal(fused, composed)


def test_fused_known_values():
    m = mc.PackedMatrix(2, 3, mc.TERNARY,
                        mc.encode(np.array([[1, -1, 0], [0, 1, 1]], np.int8),
                                  2, 3, mc.TERNARY).data, 0.5)
    a = pp.preprocess(m, 2)
    y = kn.rsr_matvec_fused(a, np.array([2.0, 3.0, 5.0], np.float32))
    # scale = 127/5 = 25.4; q = [51, 76, 127]; int result [-25, 203]
    exp = (np.array([-25, 203], np.float64) * (0.5 / 25.4)).astype(np.float32)
    assert np.array_equal(y, exp)


def test_fused_requires_ternary():
    _, m = random_packed(np.random.default_rng(3), 4, 8, mc.BINARY)
    a = pp.preprocess(m, 2)
    with pytest.raises(ValueError):
        kn.rsr_matvec_fused(a, np.zeros(8, np.float32))


# ---------------------------------------------------------------------------
# sibling batching

def test_batched_preprocess_matches_per_matrix():
    rng = np.random.default_rng(4)
    mats = [random_packed(rng, h, 48, mc.TERNARY)[1] for h in (8, 5, 12)]
    art, offs = kn.batched_preprocess(mats, 3)
    assert offs == [0, 8, 13, 25]
    assert art.weight_scale == 1.0
    v = rng.integers(-20, 20, 48).astype(np.int8)
    y = kn.rsr_matvec(art, v)
    for i, m in enumerate(mats):
        assert np.array_equal(y[offs[i]:offs[i + 1]], mc.naive_matvec(m, v))


def test_batched_preprocess_can_merge_blocks_across_matrices():
    # heights 2+2 at k=4 share one block: fewer groups than two artifacts
    rng = np.random.default_rng(5)
    mats = [random_packed(rng, 2, 64, mc.BINARY)[1] for _ in range(2)]
    art, _ = kn.batched_preprocess(mats, 4)
    assert art.plan.block_count == 1


def test_batched_rejects_heterogeneous():
    rng = np.random.default_rng(6)
    a = random_packed(rng, 4, 16, mc.TERNARY)[1]
    b = random_packed(rng, 4, 17, mc.TERNARY)[1]
    c = random_packed(rng, 4, 16, mc.BINARY)[1]
    with pytest.raises(HeterogeneousSiblings):
        kn.batched_preprocess([a, b], 2)
    with pytest.raises(HeterogeneousSiblings):
        kn.batched_preprocess([a, c], 2)
    with pytest.raises(HeterogeneousSiblings):
        kn.batched_preprocess([], 2)


# ---------------------------------------------------------------------------
# multiplier kinds

def test_multiplier_int_agreement_all_kinds():
    rng = np.random.default_rng(7)
    ent, m = random_packed(rng, 24, 96, mc.TERNARY, weight_scale=0.8)
    v = rng.integers(-128, 128, 96).astype(np.int8)
    outs = [kn.Multiplier(kind, m, k=4).multiply(v)
            for kind in (kn.NAIVE_F32, kn.NAIVE_I8, kn.RSR_TERNARY)]
    for y in outs[1:]:
        assert np.array_equal(np.asarray(outs[0], np.int32), y)


def test_multiplier_float_agreement_with_scale():
    rng = np.random.default_rng(8)
    _, m = random_packed(rng, 32, 128, mc.TERNARY, weight_scale=0.37)
    v = rng.standard_normal(128).astype(np.float32)
    ref = kn.Multiplier(kn.NAIVE_F32, m).multiply(v)
    y_i8 = kn.Multiplier(kn.NAIVE_I8, m).multiply(v)
    y_rsr = kn.Multiplier(kn.RSR_TERNARY, m, k=4).multiply(v)
    assert np.array_equal(y_i8, y_rsr)  # same quantized math
    scale = float(np.abs(ref).max()) or 1.0
    assert np.allclose(y_rsr, ref, atol=0.02 * scale, rtol=0.02)


def test_multiplier_binary_float_path():
    rng = np.random.default_rng(9)
    ent, m = random_packed(rng, 16, 200, mc.BINARY, weight_scale=0.25)
    v = rng.standard_normal(200).astype(np.float32)
    ref = kn.Multiplier(kn.NAIVE_F32, m).multiply(v)
    y = kn.Multiplier(kn.RSR_BINARY, m, k=5).multiply(v)
    assert _rel_err(y, ref, ent * 0.25, v) <= 1e-5


def test_multiplier_kind_checks():
    _, mb = random_packed(np.random.default_rng(10), 4, 8, mc.BINARY)
    _, mt = random_packed(np.random.default_rng(10), 4, 8, mc.TERNARY)
    with pytest.raises(ValueError):
        kn.Multiplier("turbo", mb)
    with pytest.raises(ValueError):
        kn.Multiplier(kn.RSR_BINARY, mt)
    with pytest.raises(ValueError):
        kn.Multiplier(kn.RSR_TERNARY, mb)


def test_multiplier_multiply_function_form():
    rng = np.random.default_rng(11)
    _, m = random_packed(rng, 8, 32, mc.BINARY)
    mul = kn.Multiplier(kn.RSR_BINARY, m, k=3)
    v = rng.integers(-5, 5, 32).astype(np.int8)
    c = kn.OpCounter()
    assert np.array_equal(kn.multiplier_multiply(mul, v, c), mul.multiply(v))
    assert c.gather_adds == mul.artifact.op_totals()[0]
