"""Offline preprocessing: per-block column-pattern grouping.

A matrix is cut into horizontal blocks of k rows and (for wide matrices)
vertical tiles of at most 65536 columns, so permutation indices fit u16.
Within each (tile, block) cell, columns sharing the same k-row pattern form
a group: the multiply later sums each group's vector entries once and
scatters the sum to rows through two bitmasks. Columns whose pattern is
all-zero are dropped entirely.

Grouping is a counting sort over the pattern space (2^k binary, 4^k ternary
codes), O(n + buckets) per block. The bucket array is allocated once per
preprocess call; each block's prefix sweep dirties every bucket up to its
own pattern-space size, so the per-block reset sweeps that same range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _native
from .errors import CorruptArtifact, DimensionMismatch, KTooLarge, TileTooWide
from .matcore import BINARY, TERNARY, PackedMatrix, encode

MAX_TILE_WIDTH = 65536
DEFAULT_WIDE_TILE = 32768
K_CAP = {BINARY: 16, TERNARY: 10}


def pack_group(perm_start: int, perm_len: int, pos_mask: int, neg_mask: int) -> int:
    """Pack one group record into its 64-bit word.

    Layout (little-endian storage): bits [0,16) perm_start, [16,32) perm_len,
    [32,48) pos_mask, [48,64) neg_mask.
    """
    for name, val in (("perm_start", perm_start), ("perm_len", perm_len),
                      ("pos_mask", pos_mask), ("neg_mask", neg_mask)):
        if not 0 <= val <= 0xFFFF:
            raise ValueError(f"{name}={val} does not fit u16")
    return perm_start | (perm_len << 16) | (pos_mask << 32) | (neg_mask << 48)


def unpack_group(word: int) -> tuple[int, int, int, int]:
    """Inverse of pack_group: (perm_start, perm_len, pos_mask, neg_mask)."""
    word = int(word)
    return (word & 0xFFFF, (word >> 16) & 0xFFFF,
            (word >> 32) & 0xFFFF, (word >> 48) & 0xFFFF)


@dataclass(frozen=True)
class GroupRecord:
    """One column group: a permutation segment plus its scatter masks."""

    perm_start: int
    perm_len: int
    pos_mask: int
    neg_mask: int


@dataclass(frozen=True)
class BlockMeta:
    """Grouping of one (block, tile) cell.

    perm holds tile-local column indices, group-contiguous and strictly
    ascending within each group; zero-pattern columns are absent.
    """

    perm: np.ndarray
    groups: tuple[GroupRecord, ...]


@dataclass
class StepCounter:
    """Counts elementary preprocessing steps (column visits + bucket ops)."""

    steps: int = 0


@dataclass(frozen=True)
class BlockPlan:
    k: int
    block_count: int
    last_block_height: int
    tile_width: int
    tile_count: int

    def __post_init__(self):
        if not 1 <= self.k <= 16:
            raise ValueError(f"k={self.k} outside [1, 16]")
        if not 1 <= self.tile_width <= MAX_TILE_WIDTH:
            raise TileTooWide(f"tile_width={self.tile_width}", n_tile=self.tile_width)
        if not 1 <= self.last_block_height <= self.k:
            raise ValueError("last block height inconsistent with k")


def make_plan(m_rows: int, n_cols: int, k: int, bitwidth: str,
              tile_width: int | None = None) -> BlockPlan:
    """Validate caps and lay out blocks/tiles for an m x n matrix."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > K_CAP[bitwidth]:
        raise KTooLarge(k, bitwidth)
    if tile_width is None:
        tile_width = n_cols if n_cols <= MAX_TILE_WIDTH else DEFAULT_WIDE_TILE
    if not 1 <= tile_width <= MAX_TILE_WIDTH:
        raise TileTooWide(
            f"tile_width={tile_width} outside [1, {MAX_TILE_WIDTH}]",
            n_tile=tile_width,
        )
    bc = -(-m_rows // k)
    tc = -(-n_cols // tile_width)
    lbh = m_rows - k * (bc - 1)
    return BlockPlan(k, bc, lbh, tile_width, tc)


class RsrArtifact:
    """Preprocessed form of one matrix, flat-array layout.

    words/perm hold every cell's group records and permutation back to back;
    group_offsets/perm_offsets (length cells+1) bound each cell, with cells
    ordered tile-major: cell = tile * block_count + block. sort_steps carries
    per-cell preprocessing step counts and is None on loaded artifacts.
    """

    def __init__(self, m, n, k, bitwidth, weight_scale, plan,
                 words, perm, group_offsets, perm_offsets, sort_steps=None):
        self.m = m
        self.n = n
        self.k = k
        self.bitwidth = bitwidth
        self.weight_scale = weight_scale
        self.plan = plan
        self.words = words
        self.perm = perm
        self.group_offsets = group_offsets
        self.perm_offsets = perm_offsets
        self.sort_steps = sort_steps

    @property
    def cells(self) -> int:
        return self.plan.tile_count * self.plan.block_count

    def cell_index(self, tile: int, block: int) -> int:
        return tile * self.plan.block_count + block

    def block_meta(self, tile: int, block: int) -> BlockMeta:
        """Materialize one cell's BlockMeta view."""
        c = self.cell_index(tile, block)
        g0, g1 = self.group_offsets[c], self.group_offsets[c + 1]
        p0, p1 = self.perm_offsets[c], self.perm_offsets[c + 1]
        groups = tuple(GroupRecord(*unpack_group(w)) for w in self.words[g0:g1])
        return BlockMeta(self.perm[p0:p1].copy(), groups)

    def op_totals(self) -> tuple[int, int, int]:
        """(gather adds, scatter adds, groups) one multiply performs."""
        g, s, n = _native.count_ops(self.words, self.group_offsets,
                                    self.plan.block_count, self.plan.tile_count)
        return int(g), int(s), int(n)

    def file_bytes(self) -> int:
        """Serialized `.rsra` size without writing the file."""
        total = 24
        for c in range(self.cells):
            gc = int(self.group_offsets[c + 1] - self.group_offsets[c])
            pl = int(self.perm_offsets[c + 1] - self.perm_offsets[c])
            total += 8 + 8 * gc + 2 * pl
            total += (-(2 * pl)) % 4
        return total


def _scratch(k: int, bitwidth: str, tn_max: int):
    buckets = (1 << k) if bitwidth == BINARY else (1 << (2 * k))
    keys = np.empty(tn_max, np.uint32)
    tkeys = np.empty(tn_max, np.uint32)
    tidx = np.empty(tn_max, np.uint16)
    counts = np.zeros(buckets, np.uint32)
    wbuf = np.empty(max(1, min(tn_max, buckets - 1)), np.uint64)
    pbuf = np.empty(max(1, tn_max), np.uint16)
    return keys, tkeys, tidx, counts, wbuf, pbuf


def pattern_key(m: PackedMatrix, block_rows: range, col: int) -> int:
    """Pattern key of one column within a block: sum of entry codes weighted
    by 2^i (binary) or 4^i (ternary) over block rows i."""
    if not 0 <= col < m.cols:
        raise DimensionMismatch(f"column {col} outside 0..{m.cols - 1}")
    key = 0
    if m.bitwidth == BINARY:
        for i, r in enumerate(block_rows):
            bit = (m.data[r, col >> 3] >> (col & 7)) & 1
            key |= int(bit) << i
    else:
        for i, r in enumerate(block_rows):
            code = (m.data[r, col >> 2] >> ((col & 3) << 1)) & 3
            key |= int(code) << (2 * i)
    return key


def preprocess_block(m: PackedMatrix, block_rows: range, tile_cols: range,
                     counter: StepCounter | None = None) -> BlockMeta:
    """Group the columns of one (block, tile) cell.

    Args:
        m: packed source matrix.
        block_rows: k consecutive row indices (height 1..16, ternary <= 10).
        tile_cols: consecutive column indices, at most 65536.
        counter: optional StepCounter receiving the elementary step count.

    Returns:
        BlockMeta with one GroupRecord per distinct nonzero pattern, in
        ascending key order.
    """
    h = len(block_rows)
    if h < 1:
        raise ValueError("empty block")
    if h > K_CAP[m.bitwidth]:
        raise KTooLarge(h, m.bitwidth)
    tn = len(tile_cols)
    if not 1 <= tn <= MAX_TILE_WIDTH:
        raise TileTooWide(f"tile of {tn} columns", n_tile=tn)
    keys, tkeys, tidx, counts, wbuf, pbuf = _scratch(h, m.bitwidth, tn)
    core = (_native.group_block_binary if m.bitwidth == BINARY
            else _native.group_block_ternary)
    ng, nret, steps = core(m.data, block_rows.start, h, tile_cols.start, tn,
                           keys, tkeys, tidx, counts, wbuf, pbuf)
    if ng < 0:
        raise TileTooWide(
            f"a group of identical columns exceeds {0xFFFF} entries; "
            f"use a tile_width of {DEFAULT_WIDE_TILE} or less",
            n_tile=tn,
        )
    if counter is not None:
        counter.steps += int(steps)
    groups = tuple(GroupRecord(*unpack_group(w)) for w in wbuf[:ng])
    return BlockMeta(pbuf[:nret].copy(), groups)


def preprocess(m: PackedMatrix, k: int, tile_width: int | None = None) -> RsrArtifact:
    """Preprocess a packed matrix into an RsrArtifact.

    Deterministic: identical inputs produce byte-identical artifacts. The
    artifact's reconstruct() recovers the matrix exactly.

    Raises:
        KTooLarge: k over the bitwidth cap (16 binary, 10 ternary).
        TileTooWide: tile_width over 65536, or a pathological single group
            wider than a u16 permutation length can express.
    """
    plan = make_plan(m.rows, m.cols, k, m.bitwidth, tile_width)
    bc, tc, tw = plan.block_count, plan.tile_count, plan.tile_width
    tn_max = min(tw, m.cols)
    keys, tkeys, tidx, counts, wbuf, pbuf = _scratch(k, m.bitwidth, tn_max)
    core = (_native.group_block_binary if m.bitwidth == BINARY
            else _native.group_block_ternary)

    words_parts = []
    perm_parts = []
    go = np.zeros(tc * bc + 1, np.int64)
    po = np.zeros(tc * bc + 1, np.int64)
    steps = np.zeros(tc * bc, np.int64)
    cell = 0
    for t in range(tc):
        c0 = t * tw
        tn = min(tw, m.cols - c0)
        for b in range(bc):
            r0 = b * k
            h = min(k, m.rows - r0)
            ng, nret, st = core(m.data, r0, h, c0, tn, keys, tkeys, tidx,
                                counts, wbuf, pbuf)
            if ng < 0:
                raise TileTooWide(
                    f"a group of identical columns exceeds {0xFFFF} entries; "
                    f"use a tile_width of {DEFAULT_WIDE_TILE} or less",
                    n_tile=tn,
                )
            words_parts.append(wbuf[:ng].copy())
            perm_parts.append(pbuf[:nret].copy())
            go[cell + 1] = go[cell] + ng
            po[cell + 1] = po[cell] + nret
            steps[cell] = st
            cell += 1

    words = (np.concatenate(words_parts) if words_parts
             else np.zeros(0, np.uint64))
    perm = (np.concatenate(perm_parts) if perm_parts
            else np.zeros(0, np.uint16))
    return RsrArtifact(m.rows, m.cols, k, m.bitwidth, m.weight_scale, plan,
                       words, perm, go, po, sort_steps=steps)


def _cell_key_array(words: np.ndarray, bitwidth: str) -> np.ndarray:
    """Pattern keys of a cell's groups, recovered from the scatter masks."""
    pos = ((words >> np.uint64(32)) & np.uint64(0xFFFF)).astype(np.int64)
    neg = ((words >> np.uint64(48)) & np.uint64(0xFFFF)).astype(np.int64)
    if bitwidth == BINARY:
        return pos
    key = np.zeros(words.size, np.int64)
    for i in range(16):
        code = ((pos >> i) & 1) + 2 * ((neg >> i) & 1)
        key += code << (2 * i)
    return key


def validate_artifact(a: RsrArtifact) -> None:
    """Structural audit; raises CorruptArtifact on any invariant violation.

    Checks header consistency, offset monotonicity, mask disjointness,
    ascending group keys, consecutive permutation ranges, strictly
    ascending columns within groups, and per-cell column uniqueness.
    """
    def fail(msg):
        raise CorruptArtifact(msg)

    if a.bitwidth not in (BINARY, TERNARY):
        fail(f"bad bitwidth {a.bitwidth!r}")
    if a.m < 1 or a.n < 1:
        fail("empty matrix dimensions")
    if not 1 <= a.k <= K_CAP[a.bitwidth]:
        fail(f"k={a.k} outside caps for {a.bitwidth}")
    p = a.plan
    if p.block_count != -(-a.m // a.k) or p.tile_count != -(-a.n // p.tile_width):
        fail("plan grid inconsistent with matrix shape")
    cells = a.cells
    go, po = a.group_offsets, a.perm_offsets
    if len(go) != cells + 1 or len(po) != cells + 1:
        fail("offset arrays do not match the cell grid")
    if go[0] != 0 or po[0] != 0 or go[-1] != len(a.words) or po[-1] != len(a.perm):
        fail("offset bounds do not match array lengths")
    if (np.diff(go) < 0).any() or (np.diff(po) < 0).any():
        fail("offsets not monotone")

    for t in range(p.tile_count):
        tn = min(p.tile_width, a.n - t * p.tile_width)
        for b in range(p.block_count):
            c = a.cell_index(t, b)
            h = min(a.k, a.m - b * a.k)
            w = a.words[go[c]:go[c + 1]]
            seg = a.perm[po[c]:po[c + 1]]
            if w.size == 0:
                if seg.size:
                    fail(f"cell {c}: permutation without groups")
                continue
            ps = (w & np.uint64(0xFFFF)).astype(np.int64)
            pl = ((w >> np.uint64(16)) & np.uint64(0xFFFF)).astype(np.int64)
            pos = ((w >> np.uint64(32)) & np.uint64(0xFFFF)).astype(np.int64)
            neg = ((w >> np.uint64(48)) & np.uint64(0xFFFF)).astype(np.int64)
            if (pl < 1).any():
                fail(f"cell {c}: empty group")
            if ps[0] != 0 or (ps[1:] != ps[:-1] + pl[:-1]).any():
                fail(f"cell {c}: permutation ranges not consecutive")
            if ps[-1] + pl[-1] != seg.size:
                fail(f"cell {c}: group ranges do not cover the permutation")
            if ((pos & neg) != 0).any():
                fail(f"cell {c}: overlapping scatter masks")
            if ((pos | neg) == 0).any():
                fail(f"cell {c}: stored zero pattern")
            if h < 16 and ((pos | neg) >> h != 0).any():
                fail(f"cell {c}: mask bits beyond block height {h}")
            if a.bitwidth == BINARY and (neg != 0).any():
                fail(f"cell {c}: negative mask in a binary artifact")
            keys = _cell_key_array(w, a.bitwidth)
            if (np.diff(keys) <= 0).any():
                fail(f"cell {c}: group keys not strictly ascending")
            if seg.size and int(seg.max()) >= tn:
                fail(f"cell {c}: column index beyond tile width {tn}")
            if np.unique(seg).size != seg.size:
                fail(f"cell {c}: duplicate column in permutation")
            for s, l in zip(ps, pl):
                col = seg[s:s + l]
                if l > 1 and (np.diff(col.astype(np.int64)) <= 0).any():
                    fail(f"cell {c}: columns not ascending within a group")


def reconstruct(a: RsrArtifact) -> PackedMatrix:
    """Rebuild the source matrix from an artifact (audit first).

    Raises:
        CorruptArtifact: if the artifact violates structural invariants.
    """
    validate_artifact(a)
    dense = np.zeros((a.m, a.n), np.int8)
    p = a.plan
    for t in range(p.tile_count):
        c0 = t * p.tile_width
        for b in range(p.block_count):
            c = a.cell_index(t, b)
            r0 = b * a.k
            h = min(a.k, a.m - r0)
            seg = a.perm[a.perm_offsets[c]:a.perm_offsets[c + 1]]
            for word in a.words[a.group_offsets[c]:a.group_offsets[c + 1]]:
                ps, pl, pos, neg = unpack_group(word)
                cols = c0 + seg[ps:ps + pl].astype(np.int64)
                for i in range(h):
                    if (pos >> i) & 1:
                        dense[r0 + i, cols] = 1
                    elif (neg >> i) & 1:
                        dense[r0 + i, cols] = -1
    out = encode(dense, a.m, a.n, a.bitwidth)
    return PackedMatrix(a.m, a.n, a.bitwidth, out.data, weight_scale=a.weight_scale)
