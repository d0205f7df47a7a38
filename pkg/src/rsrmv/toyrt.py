"""Desk-scale ternary model runtime: fused layers, sibling batching, decode.

The model is an MLP stack, not a transformer: each depth unit is a sibling
triple of d x d ternary layers sharing the unit's input (batched into one
stacked artifact), a d x d mid layer, and a squared-ReLU; a d x V head
produces logits. A small tanh feedback of the previous hidden state keeps
generated sequences from collapsing to a fixed point.

Both backends quantize with the same expressions and multiply exactly in
the integer domain, so their logits are bit-identical and greedy token
sequences match literally, not just approximately.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BadTokenId, InvalidDepth
from .kernels import batched_preprocess, rsr_matvec, rsr_matvec_fused
from .matcore import (PackedMatrix, naive_matvec, quantize_activations,
                      ternarize_weights)
from .preproc import RsrArtifact, preprocess

NAIVE = "naive"
RSR = "rsr"
BACKENDS = (NAIVE, RSR)

STATE_FEEDBACK = np.float32(0.5)


@dataclass
class DecodeStats:
    tokens_generated: int
    tokens_per_second: float
    backend: str


@dataclass
class ToyModel:
    seed: int
    d: int
    V: int
    depth: int
    k: int
    layers: list[PackedMatrix]
    sibling_groups: list[list[int]]
    mid_layers: list[int]          # layer index of each unit's d->d mid layer
    head_layer: int
    # rsr-backend state: one stacked artifact per sibling group, one plain
    # artifact per mid layer and for the head
    sibling_artifacts: list[RsrArtifact] = field(default_factory=list)
    sibling_offsets: list[list[int]] = field(default_factory=list)
    mid_artifacts: list[RsrArtifact] = field(default_factory=list)
    head_artifact: RsrArtifact | None = None

    def digest(self) -> str:
        """SHA-256 over every layer's packed payload and scale."""
        h = hashlib.sha256()
        for m in self.layers:
            h.update(np.float32(m.weight_scale).tobytes())
            h.update(m.data.tobytes())
        return h.hexdigest()


def build_toy_model(seed: int, d: int, V: int, depth: int, k: int = 4) -> ToyModel:
    """Deterministic model: seeded gaussian weights, ternarized per layer.

    Layer order per depth unit: three siblings (d x d), one mid (d x d);
    the d x V head comes last. Sibling triples are preprocessed as one
    stacked artifact; mid and head layers get their own.
    """
    if depth < 1:
        raise InvalidDepth(f"depth must be at least 1, got {depth}")
    if d < 2 or V < 2:
        raise ValueError("d and V must be at least 2")
    rng = np.random.default_rng(seed)
    layers: list[PackedMatrix] = []
    groups: list[list[int]] = []
    mids: list[int] = []
    for _ in range(depth):
        base = len(layers)
        for _ in range(3):
            layers.append(ternarize_weights(rng.standard_normal((d, d))))
        groups.append([base, base + 1, base + 2])
        layers.append(ternarize_weights(rng.standard_normal((d, d))))
        mids.append(base + 3)
    layers.append(ternarize_weights(rng.standard_normal((V, d))))
    head = len(layers) - 1

    model = ToyModel(seed, d, V, depth, k, layers, groups, mids, head)
    for g in groups:
        art, offs = batched_preprocess([layers[i] for i in g], k)
        model.sibling_artifacts.append(art)
        model.sibling_offsets.append(offs)
    for i in mids:
        model.mid_artifacts.append(preprocess(layers[i], k))
    model.head_artifact = preprocess(layers[head], k)
    return model


def _embed(seed: int, d: int, token: int) -> np.ndarray:
    """Hash-style embedding: a gaussian vector keyed by (seed, token)."""
    return np.random.default_rng([seed, token]).standard_normal(d).astype(np.float32)


def _dequant1(y: np.ndarray, beta: float, scale: float) -> np.ndarray:
    # mirrors the fused kernel's epilogue exactly: f64 product, f32 result
    return (y.astype(np.float64) * (beta / scale)).astype(np.float32)


def _dequant3(y0, y1, y2, b0, b1, b2, scale) -> np.ndarray:
    acc = (y0.astype(np.float64) * b0 + y1.astype(np.float64) * b1
           - y2.astype(np.float64) * b2)
    return (acc / scale).astype(np.float32)


def _forward(model: ToyModel, backend: str, token: int, pos: int,
             state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One token through the stack; returns (logits, new hidden state)."""
    # the position term keeps greedy decoding off trivial fixed points
    h = (_embed(model.seed, model.d, token)
         + STATE_FEEDBACK * np.tanh(state)
         + np.float32(0.25) * _embed(model.seed ^ 0x9E3779B9, model.d, pos % 64))
    for u in range(model.depth):
        g = model.sibling_groups[u]
        b0, b1, b2 = (model.layers[i].weight_scale for i in g)
        q = quantize_activations(h)
        if backend == RSR:
            stacked = rsr_matvec(model.sibling_artifacts[u], q.values)
            o = model.sibling_offsets[u]
            y0, y1, y2 = (stacked[o[i]:o[i + 1]] for i in range(3))
        else:
            y0, y1, y2 = (naive_matvec(model.layers[i], q.values) for i in g)
        h = _dequant3(y0, y1, y2, b0, b1, b2, q.scale)

        mid = model.layers[model.mid_layers[u]]
        if backend == RSR:
            h = rsr_matvec_fused(model.mid_artifacts[u], h)
        else:
            qm = quantize_activations(h)
            h = _dequant1(naive_matvec(mid, qm.values), mid.weight_scale, qm.scale)
        h = np.square(np.maximum(h, np.float32(0)))
    state = h

    head = model.layers[model.head_layer]
    if backend == RSR:
        logits = rsr_matvec_fused(model.head_artifact, h)
    else:
        qh = quantize_activations(h)
        logits = _dequant1(naive_matvec(head, qh.values), head.weight_scale, qh.scale)
    return logits, state


def greedy_decode(model: ToyModel, backend: str, prompt: list[int],
                  steps: int) -> tuple[list[int], DecodeStats]:
    """Generate steps tokens by argmax; ties break to the smallest id.

    The prompt is consumed before the clock starts; tokens_per_second
    covers generation only.

    Raises:
        BadTokenId: any prompt id outside [0, V).
        ValueError: unknown backend or steps < 1.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    ids = list(prompt) if prompt else [0]
    for t in ids:
        if not 0 <= t < model.V:
            raise BadTokenId(f"token {t} outside vocabulary of {model.V}")

    state = np.zeros(model.d, np.float32)
    logits = None
    pos = 0
    for t in ids:
        logits, state = _forward(model, backend, t, pos, state)
        pos += 1

    out: list[int] = []
    t0 = time.perf_counter_ns()
    for _ in range(steps):
        nxt = int(np.argmax(logits))  # first max = smallest id on ties
        out.append(nxt)
        logits, state = _forward(model, backend, nxt, pos, state)
        pos += 1
    elapsed = max(time.perf_counter_ns() - t0, 1)
    return out, DecodeStats(steps, steps * 1e9 / elapsed, backend)
