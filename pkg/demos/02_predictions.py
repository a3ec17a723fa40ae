"""
Prediction bundles and prediction-following policies
====================================================

Policies can consume three kinds of predictions: next-request times (when
will this page be requested again?), binary eviction labels (would the
optimum evict it?), and a queryable furthest-in-future choice function.
This script builds each kind, measures its error, and shows how the blind
next-request-time follower degrades as synthetic noise grows.
"""

import numpy as np

from cachesim import (
    Trace,
    build_policy,
    measure_error,
    noisy_fitf,
    perfect_labels,
    perfect_nrt,
    pleco,
    popu,
    simulate,
    synthetic_nrt,
)

rng = np.random.default_rng(21)
pages = [int(p) for p in rng.integers(0, 15, size=2000)]
trace = Trace(pages)
k = 5

# --- exact predictions reproduce the offline optimum ------------------------
bundle = perfect_nrt(trace)
res = simulate(build_policy("blind_oracle"), trace, k, bundle)
print(f"blind follower with exact next-request times: ratio {res.ratio:.3f}")

res = simulate(build_policy("lrb"), trace, k, perfect_labels(trace, k))
print(f"label follower with exact eviction labels:    ratio {res.ratio:.3f}")

res = simulate(build_policy("fitf"), trace, k, noisy_fitf(trace, k, 0.0))
print(f"choice follower answering exactly:            ratio {res.ratio:.3f}")

# --- noise degrades the follower smoothly ------------------------------------
print("\nsigma   l1 error   ratio")
for sigma in (0.0, 0.5, 1.0, 2.0, 4.0):
    bundle = synthetic_nrt(trace, sigma, seed=1)
    err = measure_error(bundle, trace)
    res = simulate(build_policy("blind_oracle"), trace, k, bundle)
    print(f"{sigma:5.1f}  {err.eta_t:9.0f}   {res.ratio:.3f}")

# --- history-based predictors need no future at all ---------------------------
# pleco weights past occurrences by a power law of their age; popu just uses
# request frequency. Both emit next-request-time estimates from the history
# seen so far, so they can run on live streams.
for name, make in (("pleco", pleco), ("popu", popu)):
    bundle = make(trace)
    err = measure_error(bundle, trace)
    res = simulate(build_policy("blind_oracle"), trace, k, bundle)
    print(f"\n{name}: l1 error {err.eta_t:.0f}, follower ratio {res.ratio:.3f}")
