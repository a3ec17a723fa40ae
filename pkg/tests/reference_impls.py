"""Small, deliberately naive reference implementations used by the tests.

Everything here trades speed for obviousness: quadratic scans and direct
simulations that can be checked by eye, so the package's optimized versions
have something independent to agree with.
"""

from __future__ import annotations

import numpy as np

from cachesim import Trace


def quadratic_next_occurrence(pages: list[int]) -> list[int]:
    """Next request index for each position by forward scan; n+1 sentinel."""
    n = len(pages)
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if pages[j] == pages[i]:
                out.append(j + 1)
                break
        else:
            out.append(n + 1)
    return out


def lru_misses(pages: list[int], k: int) -> int:
    """Plain LRU simulation on a list-backed cache."""
    cache: list[int] = []
    misses = 0
    for p in pages:
        if p in cache:
            cache.remove(p)
            cache.append(p)
            continue
        misses += 1
        if len(cache) == k:
            cache.pop(0)
        cache.append(p)
    return misses


def belady_misses_naive(pages: list[int], k: int) -> int:
    """Furthest-in-future eviction with a forward scan per eviction."""
    n = len(pages)
    cache: set[int] = set()
    misses = 0
    for i, p in enumerate(pages):
        if p in cache:
            continue
        misses += 1
        if len(cache) == k:
            best, best_next = None, -1
            for q in sorted(cache):
                nxt = n + 1
                for j in range(i + 1, n):
                    if pages[j] == q:
                        nxt = j + 1
                        break
                if nxt > best_next:
                    best, best_next = q, nxt
            cache.discard(best)
        cache.add(p)
    return misses


def random_trace(rng: np.random.Generator, n: int, universe: int,
                 burst_prob: float = 0.3) -> Trace:
    """Random request sequence over a fixed universe with short reuse bursts."""
    pages: list[int] = []
    while len(pages) < n:
        p = int(rng.integers(universe))
        if rng.random() < burst_prob:
            pages.extend([p] * int(rng.integers(1, 4)))
        else:
            pages.append(p)
    return Trace(pages[:n])
