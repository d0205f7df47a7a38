import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsrmv import artifact_io as aio
from rsrmv import matcore as mc
from rsrmv import preproc as pp
from rsrmv.errors import CorruptArtifact

from conftest import random_packed

# Hand-assembled file for the 2x4 binary matrix [[1,0,1,0],[1,1,0,0]] at k=2:
# header (24B) + one cell: group_count=3, perm_len=3, three packed words,
# perm [2,1,0] (u16) + 2 zero pad bytes.
GOLDEN_HEADER = struct.pack("<4sBBBBIIIf", b"RSRA", 1, 0, 2, 0, 2, 4, 4, 1.0)
GOLDEN_BODY = (
    struct.pack("<II", 3, 3)
    + struct.pack("<3Q", 0x0000000100010000, 0x0000000200010001,
                  0x0000000300010002)
    + struct.pack("<3H", 2, 1, 0) + b"\x00\x00"
)
GOLDEN = GOLDEN_HEADER + GOLDEN_BODY


def golden_matrix():
    return mc.encode(np.array([[1, 0, 1, 0], [1, 1, 0, 0]], np.int8),
                     2, 4, mc.BINARY)


def test_save_produces_golden_bytes(tmp_path):
    a = pp.preprocess(golden_matrix(), 2)
    p = tmp_path / "a.rsra"
    aio.save(a, p)
    assert p.read_bytes() == GOLDEN
    assert len(GOLDEN) == 64 == a.file_bytes()


def test_load_golden_bytes(tmp_path):
    p = tmp_path / "a.rsra"
    p.write_bytes(GOLDEN)
    a = aio.load(p)
    assert (a.m, a.n, a.k, a.bitwidth) == (2, 4, 2, mc.BINARY)
    assert list(a.perm) == [2, 1, 0]
    assert a.sort_steps is None
    assert np.array_equal(mc.decode(pp.reconstruct(a)),
                          mc.decode(golden_matrix()))


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 80),
       st.integers(1, 8), st.sampled_from([mc.BINARY, mc.TERNARY]))
def test_round_trip_byte_identical(tmp_path_factory, seed, m_, n_, k, bw):
    tmp = tmp_path_factory.mktemp("rt")
    rng = np.random.default_rng(seed)
    _, m = random_packed(rng, m_, n_, bw, weight_scale=0.5)
    a = pp.preprocess(m, k)
    p1, p2 = tmp / "one.rsra", tmp / "two.rsra"
    aio.save(a, p1)
    loaded = aio.load(p1)
    aio.save(loaded, p2)   # save . load . save is byte-identical
    assert p1.read_bytes() == p2.read_bytes()
    assert np.array_equal(loaded.words, a.words)
    assert np.array_equal(loaded.perm, a.perm)
    assert loaded.weight_scale == np.float32(0.5)


def test_empty_artifact_round_trip(tmp_path):
    a = pp.preprocess(mc.encode(np.zeros((4, 6), np.int8), 4, 6, mc.TERNARY), 2)
    p = tmp_path / "z.rsra"
    aio.save(a, p)
    b = aio.load(p)
    assert b.words.size == 0 and b.perm.size == 0
    assert b.cells == 2
    # header + 2 cells of (group_count=0, perm_len=0)
    assert p.stat().st_size == 24 + 2 * 8


def test_multi_tile_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    _, m = random_packed(rng, 9, 200, mc.TERNARY)
    a = pp.preprocess(m, 4, tile_width=64)
    p = tmp_path / "mt.rsra"
    aio.save(a, p)
    b = aio.load(p)
    assert b.plan.tile_count == 4
    assert np.array_equal(mc.decode(pp.reconstruct(b)), mc.decode(m))


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.rsra"
    p.write_bytes(b"XXXX" + GOLDEN[4:])
    with pytest.raises(CorruptArtifact) as ei:
        aio.load(p)
    assert "magic" in str(ei.value)


def test_load_rejects_unknown_version(tmp_path):
    p = tmp_path / "bad.rsra"
    p.write_bytes(GOLDEN[:4] + b"\x02" + GOLDEN[5:])
    with pytest.raises(CorruptArtifact) as ei:
        aio.load(p)
    assert "version" in str(ei.value)


def test_load_rejects_bad_bitwidth_code(tmp_path):
    p = tmp_path / "bad.rsra"
    p.write_bytes(GOLDEN[:5] + b"\x05" + GOLDEN[6:])
    with pytest.raises(CorruptArtifact):
        aio.load(p)


@pytest.mark.parametrize("cut", [10, 25, 33, 63])
def test_load_rejects_truncation(tmp_path, cut):
    p = tmp_path / "bad.rsra"
    p.write_bytes(GOLDEN[:cut])
    with pytest.raises(CorruptArtifact):
        aio.load(p)


def test_load_rejects_trailing_garbage(tmp_path):
    p = tmp_path / "bad.rsra"
    p.write_bytes(GOLDEN + b"\x00")
    with pytest.raises(CorruptArtifact):
        aio.load(p)


def test_load_rejects_nonzero_padding(tmp_path):
    raw = bytearray(GOLDEN)
    raw[-1] = 7  # alignment pad must be zero
    p = tmp_path / "bad.rsra"
    p.write_bytes(bytes(raw))
    with pytest.raises(CorruptArtifact):
        aio.load(p)


def test_load_rejects_tampered_structure(tmp_path):
    # duplicate a perm entry: structural audit must catch it
    raw = bytearray(GOLDEN)
    off = len(GOLDEN_HEADER) + 8 + 24  # start of the perm array
    raw[off:off + 2] = raw[off + 2:off + 4]
    p = tmp_path / "bad.rsra"
    p.write_bytes(bytes(raw))
    with pytest.raises(CorruptArtifact):
        aio.load(p)


def test_save_refuses_invalid_artifact(tmp_path):
    a = pp.preprocess(golden_matrix(), 2)
    a.perm = np.array([9, 9, 9], np.uint16)  # out of range for the tile
    with pytest.raises(CorruptArtifact):
        aio.save(a, tmp_path / "x.rsra")
