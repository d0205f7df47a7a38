"""Low-bit matrix and vector representations, quantizers, and the naive oracle.

Binary matrices hold entries in {0, 1} packed one bit per entry; ternary
matrices hold entries in {-1, 0, +1} packed two bits per entry with codes
0 -> 00, +1 -> 01, -1 -> 10 (code 11 is reserved and never appears in valid
storage). Packing is row-major and LSB-first within each byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptArtifact, DimensionMismatch, NonFinite, OutOfAlphabet

BINARY = "binary"
TERNARY = "ternary"

_RSRM_MAGIC = b"RSRM"
_RSRM_VERSION = 1

# ternary entry -> 2-bit storage code
_TERN_CODE = {0: 0, 1: 1, -1: 2}
_CODE_TERN = np.array([0, 1, -1, 0], dtype=np.int8)  # index 3 unused


def _check_bitwidth(bitwidth: str) -> None:
    if bitwidth not in (BINARY, TERNARY):
        raise ValueError(f"unknown bitwidth {bitwidth!r}")


@dataclass(frozen=True)
class PackedMatrix:
    """A bit-packed low-precision matrix.

    data is uint8 with shape (rows, row_bytes): ceil(cols/8) bytes per row
    for binary, ceil(cols/4) for ternary. weight_scale is the dequantization
    factor beta attached by ternarize_weights (1.0 when unscaled).
    """

    rows: int
    cols: int
    bitwidth: str
    data: np.ndarray
    weight_scale: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionMismatch(
                f"matrix must be at least 1x1, got {self.rows}x{self.cols}"
            )
        _check_bitwidth(self.bitwidth)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True)
class QuantizedVector:
    """int8 activations plus the scale that maps them back to reals."""

    values: np.ndarray
    scale: float

    def __post_init__(self):
        if self.values.dtype != np.int8:
            raise TypeError("quantized values must be int8")

    @property
    def len(self) -> int:
        return self.values.shape[0]


def _row_bytes(cols: int, bitwidth: str) -> int:
    return (cols + 7) // 8 if bitwidth == BINARY else (cols + 3) // 4


def encode(entries, rows: int, cols: int, bitwidth: str) -> PackedMatrix:
    """Pack an integer entry list/array into a PackedMatrix.

    Args:
        entries: length rows*cols iterable (row-major) or (rows, cols) array.
        rows, cols: target shape.
        bitwidth: "binary" or "ternary".

    Raises:
        OutOfAlphabet: for the first row-major entry outside the alphabet.
        DimensionMismatch: entry count does not match rows*cols.
    """
    _check_bitwidth(bitwidth)
    arr = np.asarray(entries)
    if arr.ndim == 2 and arr.shape != (rows, cols):
        raise DimensionMismatch(
            f"got a {arr.shape[0]}x{arr.shape[1]} array for a "
            f"{rows}x{cols} matrix"
        )
    if arr.size != rows * cols:
        raise DimensionMismatch(
            f"got {arr.size} entries for a {rows}x{cols} matrix"
        )
    arr = arr.reshape(rows, cols)

    if bitwidth == BINARY:
        bad = (arr != 0) & (arr != 1)
    else:
        bad = (arr != 0) & (arr != 1) & (arr != -1)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise OutOfAlphabet(int(r), int(c), arr[r, c])

    if bitwidth == BINARY:
        data = np.packbits(arr.astype(np.uint8), axis=1, bitorder="little")
    else:
        codes = np.zeros((rows, cols), np.uint8)
        codes[arr == 1] = 1
        codes[arr == -1] = 2
        pad = (-cols) % 4
        if pad:
            codes = np.concatenate([codes, np.zeros((rows, pad), np.uint8)], axis=1)
        c4 = codes.reshape(rows, -1, 4)
        data = (c4[:, :, 0] | (c4[:, :, 1] << 2) | (c4[:, :, 2] << 4)
                | (c4[:, :, 3] << 6)).astype(np.uint8)
    return PackedMatrix(rows, cols, bitwidth, data)


def decode(m: PackedMatrix) -> np.ndarray:
    """Unpack to an int8 (rows, cols) array. Inverse of encode."""
    if m.bitwidth == BINARY:
        bits = np.unpackbits(m.data, axis=1, bitorder="little")[:, : m.cols]
        return bits.astype(np.int8)
    b = m.data
    codes = np.empty((m.rows, b.shape[1] * 4), np.uint8)
    codes[:, 0::4] = b & 3
    codes[:, 1::4] = (b >> 2) & 3
    codes[:, 2::4] = (b >> 4) & 3
    codes[:, 3::4] = (b >> 6) & 3
    codes = codes[:, : m.cols]
    if (codes == 3).any():
        raise CorruptArtifact("reserved ternary code 11 in storage")
    return _CODE_TERN[codes]


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero (not banker's)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def ternarize_weights(w) -> PackedMatrix:
    """Absmean-ternarize a real matrix.

    beta = mean(|w|) (1.0 for an all-zero matrix); each entry becomes
    clamp(round_half_away(w_ij / beta), -1, 1). beta is stored as the
    matrix's weight_scale.

    Raises:
        NonFinite: on the first row-major NaN/inf entry.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionMismatch("ternarize_weights expects a 2-D matrix")
    finite = np.isfinite(w)
    if not finite.all():
        r, c = np.argwhere(~finite)[0]
        raise NonFinite(f"non-finite weight at ({r}, {c})", row=int(r), col=int(c))
    beta = float(np.mean(np.abs(w)))
    if beta == 0.0:
        beta = 1.0
    q = np.clip(round_half_away(w / beta), -1, 1).astype(np.int8)
    m = encode(q, w.shape[0], w.shape[1], TERNARY)
    return PackedMatrix(m.rows, m.cols, TERNARY, m.data, weight_scale=beta)


def quantize_activations(v) -> QuantizedVector:
    """Absmax-quantize a real vector to int8 in [-127, 127].

    scale = 127 / max|v| (1.0 for the zero vector); q_i is
    clamp(round_half_away(v_i * scale), -127, 127), so |q_i/scale - v_i|
    never exceeds 0.5/scale.

    Raises:
        NonFinite: on the first NaN/inf element.
    """
    v = np.asarray(v)
    finite = np.isfinite(v)
    if not finite.all():
        i = int(np.flatnonzero(~finite)[0])
        raise NonFinite(f"non-finite activation at index {i}", index=i)
    amax = float(np.max(np.abs(v))) if v.size else 0.0
    scale = 1.0 if amax == 0.0 else 127.0 / amax
    q = np.clip(round_half_away(v.astype(np.float64) * scale), -127, 127)
    return QuantizedVector(q.astype(np.int8), scale)


def naive_matvec(m: PackedMatrix, v) -> np.ndarray:
    """Reference M @ v; the oracle every kernel is checked against.

    Integer vectors accumulate in int32 (exact for |v_i| <= 127 and
    n <= 2^16); real vectors accumulate in float64.

    Raises:
        DimensionMismatch: len(v) != m.cols.
    """
    v = np.asarray(v)
    if v.shape != (m.cols,):
        raise DimensionMismatch(
            f"vector length {v.shape} does not match {m.cols} columns"
        )
    dense = decode(m)
    if np.issubdtype(v.dtype, np.integer):
        return dense.astype(np.int32) @ v.astype(np.int32)
    return dense.astype(np.float64) @ v.astype(np.float64)


def save_rsrm(m: PackedMatrix, path) -> None:
    """Write the raw unpacked `.rsrm` form: 18-byte header + int8 entries."""
    header = struct.pack(
        "<4sBBIIf",
        _RSRM_MAGIC,
        _RSRM_VERSION,
        0 if m.bitwidth == BINARY else 1,
        m.rows,
        m.cols,
        m.weight_scale,
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(decode(m).tobytes())


def load_rsrm(path) -> PackedMatrix:
    """Read a `.rsrm` file written by save_rsrm.

    Raises:
        CorruptArtifact: bad magic, version, size, or alphabet.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 18 or blob[:4] != _RSRM_MAGIC:
        raise CorruptArtifact(f"{path}: not an .rsrm file")
    _, version, bw, rows, cols, scale = struct.unpack("<4sBBIIf", blob[:18])
    if version != _RSRM_VERSION:
        raise CorruptArtifact(f"{path}: unsupported version {version}")
    if bw not in (0, 1):
        raise CorruptArtifact(f"{path}: bad bitwidth byte {bw}")
    body = np.frombuffer(blob[18:], dtype=np.int8)
    if body.size != rows * cols:
        raise CorruptArtifact(
            f"{path}: expected {rows * cols} entries, found {body.size}"
        )
    bitwidth = BINARY if bw == 0 else TERNARY
    try:
        m = encode(body, rows, cols, bitwidth)
    except OutOfAlphabet as e:
        raise CorruptArtifact(f"{path}: {e}") from e
    return PackedMatrix(rows, cols, bitwidth, m.data, weight_scale=scale)
