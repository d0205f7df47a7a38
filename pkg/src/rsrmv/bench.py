"""Microbenchmark harness, k sweep, autotuner, and analytic cost model.

Timing discipline: monotonic clock around the multiply call only, warmup
iterations excluded, median/p10/p90 over the timed reps. Preprocessing is
timed separately; it is one-time work. BLAS baselines run under a thread
limit matching the configured kernel thread count so single-thread numbers
compare algorithms, not thread pools.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import RsrError
from .kernels import NAIVE_F32, NAIVE_I8, RSR_BINARY, RSR_TERNARY, Multiplier
from .matcore import BINARY, TERNARY, PackedMatrix, encode
from .preproc import K_CAP

log = logging.getLogger(__name__)

# one row per (kind, k); naive kinds carry k = None
ROW_FIELDS = ("kind", "m", "n", "bitwidth", "k", "ns_median", "ns_p10",
              "ns_p90", "gather_adds", "scatter_adds", "preprocess_ms",
              "artifact_bytes", "best_k", "env")

DEFAULT_DENSITY = 0.5  # binary p(1); ternary p(+1) = p(-1) = density/2


@dataclass
class BenchConfig:
    m: int
    n: int
    bitwidth: str
    k_list: list[int] = field(default_factory=lambda: [2, 4, 8])
    reps: int = 30
    warmup: int = 3
    seed: int = 0
    threads: int = 1
    baselines: tuple[str, ...] = (NAIVE_F32, NAIVE_I8)
    density: float = DEFAULT_DENSITY
    tile_width: int | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.warmup < 0:
            raise ValueError("warmup cannot be negative")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        bad = set(self.baselines) - {NAIVE_F32, NAIVE_I8}
        if bad:
            raise ValueError(f"unknown baselines {sorted(bad)}")


@dataclass
class BenchReport:
    rows: list[dict]
    errors: list[dict]
    best_k: int | None
    env: dict

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(
            {"env": self.env, "best_k": self.best_k,
             "rows": self.rows, "errors": self.errors},
            indent=indent,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=ROW_FIELDS)
        w.writeheader()
        for r in self.rows:
            flat = dict(r)
            flat["best_k"] = self.best_k
            flat["env"] = json.dumps(self.env)
            w.writerow(flat)
        return buf.getvalue()


def cpu_model() -> str:
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return os.uname().machine


def random_matrix(m: int, n: int, bitwidth: str, seed: int,
                  density: float = DEFAULT_DENSITY) -> PackedMatrix:
    """I.i.d. matrix over the alphabet; density is the nonzero probability."""
    rng = np.random.default_rng(seed)
    if bitwidth == BINARY:
        ent = (rng.random((m, n)) < density).astype(np.int8)
    else:
        u = rng.random((m, n))
        ent = np.zeros((m, n), np.int8)
        ent[u < density / 2] = 1
        ent[u > 1 - density / 2] = -1
    return encode(ent, m, n, bitwidth)


def random_vector(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed ^ 0x5EED).standard_normal(n).astype(np.float32)


def _time_reps(fn, reps: int, warmup: int) -> tuple[float, float, float]:
    for _ in range(warmup):
        fn()
    samples = np.empty(reps, np.float64)
    for i in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples[i] = time.perf_counter_ns() - t0
    return (float(np.median(samples)),
            float(np.percentile(samples, 10)),
            float(np.percentile(samples, 90)))


def _stats_row(kind, cfg, k, med, p10, p90, gather, scatter, pre_ms, art_bytes):
    return {
        "kind": kind, "m": cfg.m, "n": cfg.n, "bitwidth": cfg.bitwidth,
        "k": k, "ns_median": med, "ns_p10": p10, "ns_p90": p90,
        "gather_adds": gather, "scatter_adds": scatter,
        "preprocess_ms": pre_ms, "artifact_bytes": art_bytes,
    }


def run_bench(cfg: BenchConfig) -> BenchReport:
    """Sweep k over one seeded matrix; time baselines on the same inputs.

    The matrix and vector are fully determined by cfg.seed, so reruns see
    identical inputs. A k that fails (e.g. over the bitwidth cap) produces
    an entry in report.errors; the remaining configurations still run.
    """
    env = {"cpu": cpu_model(), "threads": cfg.threads}
    matrix = random_matrix(cfg.m, cfg.n, cfg.bitwidth, cfg.seed, cfg.density)
    v = random_vector(cfg.n, cfg.seed)
    rsr_kind = RSR_BINARY if cfg.bitwidth == BINARY else RSR_TERNARY

    rows: list[dict] = []
    errors: list[dict] = []
    old_threads = os.environ.get("RSR_THREADS")
    os.environ["RSR_THREADS"] = str(cfg.threads)
    try:
        with threadpool_limits(limits=max(1, cfg.threads)):
            for k in cfg.k_list:
                try:
                    t0 = time.perf_counter_ns()
                    mul = Multiplier(rsr_kind, matrix, k=k,
                                     tile_width=cfg.tile_width)
                    pre_ms = (time.perf_counter_ns() - t0) / 1e6
                    mul.multiply(v)  # compile before the clock starts
                    med, p10, p90 = _time_reps(lambda: mul.multiply(v),
                                               cfg.reps, cfg.warmup)
                    g, s, _ = mul.artifact.op_totals()
                    rows.append(_stats_row(
                        "rsr", cfg, k, med, p10, p90, g, s, pre_ms,
                        mul.artifact.file_bytes()))
                except RsrError as e:
                    errors.append({"k": k, "error": e.kind, "message": str(e)})

            for kind in cfg.baselines:
                t0 = time.perf_counter_ns()
                mul = Multiplier(kind, matrix)
                pre_ms = (time.perf_counter_ns() - t0) / 1e6
                mul.multiply(v)
                med, p10, p90 = _time_reps(lambda: mul.multiply(v),
                                           cfg.reps, cfg.warmup)
                dense_adds = cfg.m * cfg.n
                art = cfg.m * cfg.n * (4 if kind == NAIVE_F32 else 1)
                rows.append(_stats_row(
                    "naive_f32" if kind == NAIVE_F32 else "naive_i8",
                    cfg, None, med, p10, p90, dense_adds, 0, pre_ms, art))
    finally:
        if old_threads is None:
            os.environ.pop("RSR_THREADS", None)
        else:
            os.environ["RSR_THREADS"] = old_threads

    rsr_rows = [r for r in rows if r["kind"] == "rsr"]
    best_k = None
    if rsr_rows:
        best = min(rsr_rows, key=lambda r: (r["ns_median"], r["k"]))
        best_k = best["k"]
    for r in rows:
        r["best_k"] = best_k
        r["env"] = env
    return BenchReport(rows, errors, best_k, env)


def cost_model(m: int, n: int, k: int, bitwidth: str,
               density: float = DEFAULT_DENSITY) -> float:
    """Expected online multiply-adds; an estimate for pruning, no guarantee.

    Per block: retained columns (gather) plus groups times expected mask
    popcount (scatter), under i.i.d. entries and uniformly occupied
    patterns. Expected distinct groups is the occupancy of the nonzero
    pattern space by the retained columns, never above min(n, buckets - 1).
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if density == 0.0:
        return 0.0
    blocks = math.ceil(m / k)
    z = 1.0 - density
    u = 1.0 - z ** k                       # P(column retained in a block)
    retained = n * u
    buckets_nz = (2 ** k if bitwidth == BINARY else 3 ** k) - 1
    if buckets_nz <= 0:
        groups = 0.0
    else:
        # occupancy of buckets_nz urns by `retained` uniform throws
        groups = buckets_nz * (1.0 - (1.0 - 1.0 / buckets_nz) ** retained)
    popcount = k * density
    return blocks * (retained + groups * popcount)


def feasible_k(bitwidth: str) -> range:
    return range(1, K_CAP[bitwidth] + 1)


def autotune_k(m: int, n: int, bitwidth: str, budget_ms: float = 2000.0,
               seed: int = 0, density: float = DEFAULT_DENSITY) -> int:
    """Pick the block height with the lowest measured multiply latency.

    Candidates are the feasible k whose analytic cost is within 2x of the
    analytic minimum; each gets at least one timed rep even if the budget
    is blown, then reps accumulate round-robin until the budget runs out.
    Ties break toward smaller k.
    """
    costs = {k: cost_model(m, n, k, bitwidth, density)
             for k in feasible_k(bitwidth)}
    floor = min(costs.values())
    candidates = [k for k, c in costs.items() if c <= 2.0 * floor or c == floor]
    log.info("autotune m=%d n=%d %s: candidates %s (cost floor %.3g)",
             m, n, bitwidth, candidates, floor)

    matrix = random_matrix(m, n, bitwidth, seed, density)
    v = random_vector(n, seed)
    rsr_kind = RSR_BINARY if bitwidth == BINARY else RSR_TERNARY
    muls = {k: Multiplier(rsr_kind, matrix, k=k) for k in candidates}
    for mul in muls.values():
        mul.multiply(v)  # compile + warm

    deadline = time.perf_counter_ns() + budget_ms * 1e6
    samples: dict[int, list[float]] = {k: [] for k in candidates}
    max_reps = 30
    for rep in range(max_reps):
        for k in candidates:
            t0 = time.perf_counter_ns()
            muls[k].multiply(v)
            samples[k].append(time.perf_counter_ns() - t0)
        if time.perf_counter_ns() >= deadline:
            break

    medians = {k: float(np.median(s)) for k, s in samples.items()}
    best = min(candidates, key=lambda k: (medians[k], k))
    log.info("autotune medians (ns): %s -> k=%d",
             {k: round(v) for k, v in medians.items()}, best)
    return best
