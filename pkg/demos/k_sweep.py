"""Sweep block height and watch the latency/structure trade-off.

Small k means few patterns but many blocks (more gather passes over the
columns); large k means fewer blocks but a pattern space that outgrows
the column count, so groups stop amortizing. The sweet spot sits where
the analytic cost model bottoms out, and the measured medians agree.
"""

import numpy as np

from rsrmv import BenchConfig, autotune_k, cost_model, run_bench

M, N, BW = 1024, 2048, "ternary"

print(f"{BW} {M}x{N}, analytic adds per multiply:")
for k in range(1, 11):
    print(f"  k={k:2d}  {cost_model(M, N, k, BW):12.0f}")

cfg = BenchConfig(m=M, n=N, bitwidth=BW, k_list=[1, 2, 3, 4, 6, 8],
                  reps=30, warmup=5, seed=0)
report = run_bench(cfg)

print(f"\nmeasured on {report.env['cpu']}:")
print(f"  {'kind':10s} {'k':>4s} {'median us':>10s} {'adds':>9s} {'bytes':>9s}")
for r in report.rows:
    k = "-" if r["k"] is None else str(r["k"])
    adds = r["gather_adds"] + r["scatter_adds"]
    print(f"  {r['kind']:10s} {k:>4s} {r['ns_median'] / 1e3:>10.1f} "
          f"{adds:>9d} {r['artifact_bytes']:>9d}")

best = autotune_k(M, N, BW, budget_ms=1000.0, seed=0)
print(f"\nsweep best_k={report.best_k}, autotuner picks k={best}")
