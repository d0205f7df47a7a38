"""Online multiply kernels and the multiplier abstraction.

Integer path: int8 activations, int32 accumulation, bit-exact against the
naive oracle. Float path: float32 group sums and row accumulation, within
reassociation distance of the float64 oracle. The fused path quantizes,
multiplies in the integer domain, and rescales by weight_scale/scale in one
jitted call; it is the production route for ternary weights on real inputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _native
from .errors import DimensionMismatch, HeterogeneousSiblings
from .matcore import (BINARY, TERNARY, PackedMatrix, decode, naive_matvec,
                      quantize_activations)
from .preproc import RsrArtifact, preprocess

NAIVE_F32 = "NaiveF32"
NAIVE_I8 = "NaiveI8"
RSR_BINARY = "RsrBinary"
RSR_TERNARY = "RsrTernary"
KINDS = (NAIVE_F32, NAIVE_I8, RSR_BINARY, RSR_TERNARY)


@dataclass
class OpCounter:
    """Add/visit counts for one or more multiplies (accumulating)."""

    gather_adds: int = 0
    scatter_adds: int = 0
    groups_visited: int = 0


def thread_count() -> int:
    """Kernel thread count; RSR_THREADS overrides the single-thread default."""
    try:
        t = int(os.environ.get("RSR_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, t)


def _kernel_args(a: RsrArtifact):
    return (a.words, a.group_offsets, a.perm, a.perm_offsets)


def _check_vec(a: RsrArtifact, v: np.ndarray) -> None:
    if v.ndim != 1 or v.shape[0] != a.n:
        raise DimensionMismatch(
            f"vector of length {v.size} against {a.n} columns"
        )


def rsr_matvec(a: RsrArtifact, v, counter: OpCounter | None = None,
               threads: int | None = None) -> np.ndarray:
    """Multiply a preprocessed matrix by v.

    int8 vectors take the exact integer path (int32 result); real vectors
    take the float32 path. Gather/scatter counts, which are structural
    properties of the artifact, are added to counter when given.

    Args:
        a: artifact from preprocess() or artifact_io.load().
        v: length-n vector, int8 or float.
        counter: optional OpCounter to accumulate into.
        threads: override thread count (default: RSR_THREADS env or 1).

    Returns:
        int32 vector for int8 input, float32 otherwise.
    """
    v = np.asarray(v)
    _check_vec(a, v)
    if counter is not None:
        g, s, ng = a.op_totals()
        counter.gather_adds += g
        counter.scatter_adds += s
        counter.groups_visited += ng
    p = a.plan
    if np.issubdtype(v.dtype, np.integer):
        if v.dtype != np.int8:
            raise DimensionMismatch("integer vectors must be int8")
        y = np.zeros(a.m, np.int32)
        t = thread_count() if threads is None else threads
        if t > 1:
            import numba
            numba.set_num_threads(min(t, numba.config.NUMBA_NUM_THREADS))
            _native.matvec_i8_par(*_kernel_args(a), v, y, a.m, a.k,
                                  p.block_count, p.tile_count, p.tile_width)
        else:
            _native.matvec_i8(*_kernel_args(a), v, y, a.m, a.k,
                              p.block_count, p.tile_count, p.tile_width)
        return y
    vf = v.astype(np.float32, copy=False)
    y = np.zeros(a.m, np.float64)
    _native.matvec_f32(*_kernel_args(a), vf, y, a.m, a.k,
                       p.block_count, p.tile_count, p.tile_width)
    return y.astype(np.float32)


def rsr_matvec_fused(a: RsrArtifact, v, counter: OpCounter | None = None) -> np.ndarray:
    """Quantize v to int8, multiply exactly, rescale by weight_scale/scale.

    Equals (weight_scale / scale) * rsr_matvec(a, quantize(v)) bit for bit;
    the whole pipeline runs as one jitted call with no intermediate
    full-precision matvec.
    """
    if a.bitwidth != TERNARY:
        raise ValueError("fused path requires a ternary artifact")
    v = np.asarray(v)
    _check_vec(a, v)
    if counter is not None:
        g, s, ng = a.op_totals()
        counter.gather_adds += g
        counter.scatter_adds += s
        counter.groups_visited += ng
    vf = v.astype(np.float32, copy=False)
    p = a.plan
    return _native.fused_matvec(*_kernel_args(a), vf, a.m, a.k,
                                p.block_count, p.tile_count, p.tile_width,
                                float(a.weight_scale))


def batched_preprocess(mats: list[PackedMatrix], k: int,
                       tile_width: int | None = None) -> tuple[RsrArtifact, list[int]]:
    """Stack sibling matrices sharing an input vector into one artifact.

    The stacked artifact exposes a larger pool of row blocks to the kernels.
    Its weight_scale is 1.0; callers keep per-matrix scales and apply them
    after splitting the output at the returned row offsets.

    Returns:
        (artifact, offsets) with offsets[i]:offsets[i+1] delimiting matrix
        i's rows in the stacked output.

    Raises:
        HeterogeneousSiblings: mixed column counts or bitwidths.
    """
    if not mats:
        raise HeterogeneousSiblings("no matrices to batch")
    n = mats[0].cols
    bw = mats[0].bitwidth
    for mm in mats[1:]:
        if mm.cols != n or mm.bitwidth != bw:
            raise HeterogeneousSiblings(
                f"expected all {bw} matrices with {n} columns, "
                f"got {mm.bitwidth} with {mm.cols}"
            )
    stacked = PackedMatrix(
        sum(mm.rows for mm in mats), n, bw,
        np.vstack([mm.data for mm in mats]),
    )
    offsets = [0]
    for mm in mats:
        offsets.append(offsets[-1] + mm.rows)
    return preprocess(stacked, k, tile_width), offsets


class Multiplier:
    """One matrix bound to one multiplication strategy.

    Naive kinds cache a dense copy of the matrix; RSR kinds hold the
    preprocessed artifact. For real input every kind computes
    weight_scale * (M @ v) (the naive f32 kind in float64 accumulation, the
    int8 kinds through activation quantization); for int8 input every kind
    returns the raw int32 product.
    """

    def __init__(self, kind: str, matrix: PackedMatrix, k: int = 4,
                 tile_width: int | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown multiplier kind {kind!r}")
        if kind == RSR_BINARY and matrix.bitwidth != BINARY:
            raise ValueError("RsrBinary needs a binary matrix")
        if kind == RSR_TERNARY and matrix.bitwidth != TERNARY:
            raise ValueError("RsrTernary needs a ternary matrix")
        self.kind = kind
        self.matrix = matrix
        self.artifact: RsrArtifact | None = None
        self._dense_i32: np.ndarray | None = None
        self._dense_f64: np.ndarray | None = None
        if kind in (RSR_BINARY, RSR_TERNARY):
            self.artifact = preprocess(matrix, k, tile_width)
        elif kind == NAIVE_F32:
            self._dense_f64 = decode(matrix).astype(np.float64)
        else:
            self._dense_i32 = decode(matrix).astype(np.int32)

    def multiply(self, v, counter: OpCounter | None = None) -> np.ndarray:
        """Compute the matrix-vector product for this kind (see class doc)."""
        v = np.asarray(v)
        if v.ndim != 1 or v.shape[0] != self.matrix.cols:
            raise DimensionMismatch(
                f"vector of length {v.size} against {self.matrix.cols} columns"
            )
        beta = self.matrix.weight_scale
        is_int = np.issubdtype(v.dtype, np.integer)
        if self.kind == NAIVE_F32:
            if is_int:
                return self._dense_f64.astype(np.int32) @ v.astype(np.int32)
            return beta * (self._dense_f64 @ v.astype(np.float64))
        if self.kind == NAIVE_I8:
            if is_int:
                return self._dense_i32 @ v.astype(np.int32)
            q = quantize_activations(v)
            y = self._dense_i32 @ q.values.astype(np.int32)
            return ((beta / q.scale) * y.astype(np.float64)).astype(np.float32)
        if is_int:
            return rsr_matvec(self.artifact, v, counter)
        if self.kind == RSR_TERNARY:
            return rsr_matvec_fused(self.artifact, v, counter)
        y = rsr_matvec(self.artifact, v, counter)
        return y if beta == 1.0 else (beta * y.astype(np.float64)).astype(np.float32)


def multiplier_multiply(mul: Multiplier, v, counter: OpCounter | None = None) -> np.ndarray:
    """Dispatch v through a multiplier (function form of Multiplier.multiply)."""
    return mul.multiply(v, counter)


def naive_reference(matrix: PackedMatrix, v) -> np.ndarray:
    """Convenience alias for the oracle (kept here for discoverability)."""
    return naive_matvec(matrix, v)
