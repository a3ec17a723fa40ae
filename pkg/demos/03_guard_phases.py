"""
Shielding a misled policy with the guarded wrapper
==================================================

A prediction-following policy can be driven arbitrarily far from the optimum:
on the pinning trace below, inverted predictions make the blind follower
evict exactly the page that is requested next, every time. Wrapping the
follower in guard: detects each such mistake (a page re-requested after being
evicted in the same phase), re-admits the page shielded from further
eviction, and redirects the eviction to a random not-yet-requested page.
"""

from cachesim import (
    adversarial_pinning_trace,
    build_policy,
    inverted_nrt,
    opt_cost,
    phase_report,
    phase_stats_csv,
    robustness_bound,
    simulate,
)

trace = adversarial_pinning_trace(400)
k = 2
opt = opt_cost(trace, k)
bundle = inverted_nrt(trace)

raw = simulate(build_policy("blind_oracle"), trace, k, bundle, opt_misses=opt)
print(f"raw follower:     {raw.misses:3d} misses, ratio {raw.ratio:7.2f}")

guard = build_policy("guard:blind_oracle")
res = simulate(guard, trace, k, bundle, opt_misses=opt)
print(f"guarded follower: {res.misses:3d} misses, ratio {res.ratio:7.2f}")
print(f"shield events: {guard.guard_events}, worst-case bound {robustness_bound(k):.2f}\n")

# Phases are the wrapper's clock: a phase ends once every page cached at its
# start has been requested or evicted. Per phase the wrapper counts distinct
# new pages (c_q) and splits eviction-causing misses by whether the page and
# the victim were in the phase-start snapshot.
print(phase_stats_csv(res.phase_stats))

# phase_report checks the counter inequalities the wrapper guarantees:
# n_q <= 2*c_q, n_q_old <= c_q per phase, and sum(c_q)/2 <= opt overall.
report = phase_report(res)
print(f"counter violations: {report.violations or 'none'}")
print(f"sum(c_q) = {report.c_sum}, sum(n_q_old) = {report.n_old_sum}, opt = {opt}")

# With good predictions the wrapper stays completely silent: the guarded run
# costs exactly what the base follower would cost alone, and no page is ever
# shielded.
from cachesim import perfect_nrt  # noqa: E402

guard = build_policy("guard:blind_oracle")
res = simulate(guard, trace, k, perfect_nrt(trace), opt_misses=opt)
print(f"\nwith exact predictions: ratio {res.ratio:.2f}, shield events {guard.guard_events}")
