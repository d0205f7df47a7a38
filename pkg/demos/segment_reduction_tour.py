"""Walk through one multiply at a size small enough to read.

Build a ternary matrix whose columns repeat on purpose, preprocess it,
dump the group structure of the first block, then run the gather /
aggregate / scatter multiply and check it against the dense product.
"""

import numpy as np

from rsrmv import OpCounter, encode, naive_matvec, preprocess, rsr_matvec
from rsrmv.preproc import unpack_group

rng = np.random.default_rng(7)

# 6 distinct ternary columns, each repeated 8 times, shuffled
distinct = rng.integers(-1, 2, (6, 6)).astype(np.int8)
order = rng.permutation(48)
entries = np.repeat(distinct, 8, axis=1)[:, order]
matrix = encode(entries, 6, 48, "ternary")

art = preprocess(matrix, k=3)
print(f"matrix 6x48 ternary, k=3 -> {art.plan.block_count} blocks, "
      f"{art.file_bytes()} artifact bytes")

print("\nblock 0 groups (pattern, sign masks, member columns):")
g0, g1 = art.group_offsets[0], art.group_offsets[1]
p0 = art.perm_offsets[0]
for g in range(g0, g1):
    ps, pl, pos, neg = unpack_group(int(art.words[g]))
    cols = art.perm[p0 + ps:p0 + ps + pl]
    print(f"  +rows {pos:03b}  -rows {neg:03b}  "
          f"{pl:2d} columns {list(map(int, cols))}")

v = rng.integers(-20, 21, 48).astype(np.int8)
counter = OpCounter()
y = rsr_matvec(art, v, counter)
dense = naive_matvec(matrix, v)

print(f"\ny            = {y.tolist()}")
print(f"dense oracle = {dense.tolist()}")
assert np.array_equal(y, dense)

dense_adds = matrix.rows * matrix.cols
rsr_adds = counter.gather_adds + counter.scatter_adds
print(f"\nadds: dense {dense_adds}, rsr {rsr_adds} "
      f"(gather {counter.gather_adds} + scatter {counter.scatter_adds}), "
      f"{dense_adds / rsr_adds:.1f}x fewer")
print("repeated columns collapse into one gather sum per group; the more "
      "redundant the pattern space, the shorter the online loop.")
