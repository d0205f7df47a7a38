"""Serialization of preprocessed artifacts (`.rsra` files).

Layout, all little-endian, fixed offsets (no variable-length index lists):

    "RSRA"  magic, 4 bytes
    u8      version (1)
    u8      bitwidth (0 binary, 1 ternary)
    u8      k
    u8      reserved (0)
    u32     m
    u32     n
    u32     tile_width
    f32     weight_scale

then for each (tile, block) cell in ascending tile-major order:

    u32     group_count
    u32     perm_len
    u64[group_count]   packed group words
    u16[perm_len]      permutation, zero-padded to 4-byte alignment

Loading re-runs the full structural audit, so a corrupt file never produces
a usable artifact.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptArtifact, RsrError
from .matcore import BINARY, TERNARY
from .preproc import RsrArtifact, make_plan, validate_artifact

_MAGIC = b"RSRA"
_VERSION = 1
_HEADER = struct.Struct("<4sBBBBIIIf")


def save(a: RsrArtifact, path) -> None:
    """Write an artifact; the byte stream is canonical for its contents."""
    validate_artifact(a)
    out = bytearray()
    out += _HEADER.pack(
        _MAGIC, _VERSION,
        0 if a.bitwidth == BINARY else 1,
        a.k, 0, a.m, a.n, a.plan.tile_width, a.weight_scale,
    )
    go, po = a.group_offsets, a.perm_offsets
    for c in range(a.cells):
        words = a.words[go[c]:go[c + 1]]
        seg = a.perm[po[c]:po[c + 1]]
        out += struct.pack("<II", words.size, seg.size)
        out += words.astype("<u8", copy=False).tobytes()
        body = seg.astype("<u2", copy=False).tobytes()
        out += body
        out += b"\x00" * ((-len(body)) % 4)
    with open(path, "wb") as f:
        f.write(out)


def load(path) -> RsrArtifact:
    """Read and audit an `.rsra` file.

    Raises:
        CorruptArtifact: malformed header, truncated body, trailing bytes,
            or any structural invariant violation.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
        raise CorruptArtifact(f"{path}: not an .rsra file")
    magic, version, bw, k, reserved, m, n, tw, scale = _HEADER.unpack(
        blob[:_HEADER.size]
    )
    if version != _VERSION:
        raise CorruptArtifact(f"{path}: unsupported version {version}")
    if bw not in (0, 1):
        raise CorruptArtifact(f"{path}: bad bitwidth byte {bw}")
    bitwidth = BINARY if bw == 0 else TERNARY
    try:
        plan = make_plan(m, n, k, bitwidth, tw)
    except (RsrError, ValueError) as e:
        raise CorruptArtifact(f"{path}: invalid header: {e}") from e

    cells = plan.tile_count * plan.block_count
    words_parts = []
    perm_parts = []
    go = np.zeros(cells + 1, np.int64)
    po = np.zeros(cells + 1, np.int64)
    off = _HEADER.size
    for c in range(cells):
        if off + 8 > len(blob):
            raise CorruptArtifact(f"{path}: truncated at cell {c}")
        gc, pl = struct.unpack_from("<II", blob, off)
        off += 8
        need = 8 * gc + 2 * pl + ((-2 * pl) % 4)
        if off + need > len(blob):
            raise CorruptArtifact(f"{path}: truncated at cell {c}")
        words_parts.append(np.frombuffer(blob, "<u8", gc, off).astype(np.uint64))
        off += 8 * gc
        perm_parts.append(np.frombuffer(blob, "<u2", pl, off).astype(np.uint16))
        off += 2 * pl
        pad = (-2 * pl) % 4
        if blob[off:off + pad] != b"\x00" * pad:
            raise CorruptArtifact(f"{path}: nonzero padding at cell {c}")
        off += pad
        go[c + 1] = go[c] + gc
        po[c + 1] = po[c] + pl
    if off != len(blob):
        raise CorruptArtifact(f"{path}: {len(blob) - off} trailing bytes")

    a = RsrArtifact(
        m, n, k, bitwidth, float(scale), plan,
        np.concatenate(words_parts) if words_parts else np.zeros(0, np.uint64),
        np.concatenate(perm_parts) if perm_parts else np.zeros(0, np.uint16),
        go, po,
    )
    validate_artifact(a)
    return a
