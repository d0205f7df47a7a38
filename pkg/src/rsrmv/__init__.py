"""rsrmv: exact low-bit matrix-vector multiplication via segment reduction.

Binary and ternary matrices are preprocessed once per shape: within each
k-row block, columns sharing the same pattern collapse into a group whose
vector sum is computed once and scattered to output rows through bitmasks.
The online multiply then does one add per retained column plus one add per
(group, set mask bit), exactly reproducing the dense integer product.
"""

from .artifact_io import load, save
from .bench import BenchConfig, BenchReport, autotune_k, cost_model, run_bench
from .errors import (BadTokenId, CorruptArtifact, DimensionMismatch,
                     HeterogeneousSiblings, InvalidDepth, KTooLarge,
                     NonFinite, OutOfAlphabet, RsrError, TileTooWide)
from .kernels import (Multiplier, OpCounter, batched_preprocess,
                      multiplier_multiply, rsr_matvec, rsr_matvec_fused)
from .matcore import (BINARY, TERNARY, PackedMatrix, QuantizedVector, decode,
                      encode, load_rsrm, naive_matvec, quantize_activations,
                      save_rsrm, ternarize_weights)
from .preproc import (BlockPlan, GroupRecord, RsrArtifact, make_plan,
                      preprocess, reconstruct, validate_artifact)
from .toyrt import DecodeStats, ToyModel, build_toy_model, greedy_decode

try:
    from importlib.metadata import version as _version
    __version__ = _version("rsrmv")
except Exception:  # pragma: no cover
    __version__ = "0+unknown"

__all__ = [
    "BINARY", "TERNARY",
    "PackedMatrix", "QuantizedVector", "RsrArtifact", "BlockPlan",
    "GroupRecord", "Multiplier", "OpCounter", "BenchConfig", "BenchReport",
    "ToyModel", "DecodeStats",
    "encode", "decode", "ternarize_weights", "quantize_activations",
    "naive_matvec", "save_rsrm", "load_rsrm",
    "make_plan", "preprocess", "reconstruct", "validate_artifact",
    "save", "load",
    "rsr_matvec", "rsr_matvec_fused", "batched_preprocess",
    "multiplier_multiply",
    "run_bench", "autotune_k", "cost_model",
    "build_toy_model", "greedy_decode",
    "RsrError", "DimensionMismatch", "OutOfAlphabet", "NonFinite",
    "KTooLarge", "TileTooWide", "CorruptArtifact", "HeterogeneousSiblings",
    "BadTokenId", "InvalidDepth",
]
