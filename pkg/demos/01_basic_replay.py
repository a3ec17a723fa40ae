"""
Replaying a request trace against classical eviction policies
=============================================================

A cache holds k pages; every request for an absent page costs one miss and
forces an eviction once the cache is full. This script replays one small
trace against LRU, the randomized marking policy, and the offline optimum,
and reports each cost relative to the optimum.
"""

import numpy as np

from cachesim import Trace, build_policy, opt_cost, simulate

# A looping request pattern with a little locality. Page ids are just ints.
rng = np.random.default_rng(7)
pages = []
for _ in range(400):
    if rng.random() < 0.7 and pages:
        pages.append(pages[-int(rng.integers(1, min(6, len(pages)) + 1))])
    else:
        pages.append(int(rng.integers(0, 12)))
trace = Trace(pages)
k = 4

print(f"trace: {len(trace)} requests over {trace.universe_size} distinct pages, k={k}")

# The offline optimum (computed by simulating furthest-in-future eviction)
# is the yardstick every policy is measured against.
opt = opt_cost(trace, k)
print(f"offline optimum: {opt} misses\n")

for name in ("lru", "marker", "belady"):
    result = simulate(build_policy(name), trace, k, seed=0, opt_misses=opt)
    print(f"{name:8s} {result.misses:4d} misses  ratio {result.ratio:.3f}")

# belady replays the optimum online (it is given the future), so its ratio
# is exactly 1; lru and marker pay more whenever the past mispredicts reuse.

# Every simulation is deterministic given its seed; the randomized marker
# policy gives slightly different costs under different seeds:
costs = [simulate(build_policy("marker"), trace, k, seed=s, opt_misses=opt).misses
         for s in range(5)]
print(f"\nmarker misses across seeds: {costs}")
