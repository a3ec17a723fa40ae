"""Eviction policies and the request-replay engine.

A policy sees every request through `on_request` (if it asks for the hook) and
is consulted through `choose_victim` whenever a miss hits a full cache. The
engine owns the cache set, per-page recency, and the prediction value attached
to each page at its most recent request; policies only pick victims from the
candidate set they are offered.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .oracle import opt_cost
from .predict import PredictionBundle, PredictionError, PredictionKind, measure_error
from .trace import PageId, Trace


class ContractViolation(RuntimeError):
    """A policy broke the engine contract (e.g. evicted a non-candidate)."""


class EvictionContext:
    """State handed to `choose_victim`; fields reference live engine state."""

    __slots__ = (
        "now",
        "requested",
        "cached",
        "candidates",
        "predictions",
        "last_prediction_of",
        "last_used",
    )

    def __init__(self, now, requested, cached, candidates, predictions,
                 last_prediction_of, last_used):
        self.now = now
        self.requested = requested
        self.cached = cached
        self.candidates = candidates
        self.predictions = predictions
        self.last_prediction_of = last_prediction_of
        self.last_used = last_used


class Policy:
    """Base eviction policy. Subclasses override `choose_victim` and may hook
    `on_request` / `on_evict` for bookkeeping; one instance serves one run."""

    name = "policy"
    requires = PredictionKind.NONE
    needs_request_hook = False

    def begin_run(self, trace: Trace, k: int, bundle: PredictionBundle | None,
                  rng: np.random.Generator) -> None:
        """Called once before the first request of a run."""

    def choose_victim(self, ctx: EvictionContext, rng: np.random.Generator) -> PageId:
        raise NotImplementedError

    def on_request(self, page: PageId, now: int, hit: bool) -> None:
        """Observes every request (after the page is cached, on misses)."""

    def on_evict(self, page: PageId) -> None:
        """Observes every eviction, including ones forced by a wrapper."""


class LRUPolicy(Policy):
    name = "lru"

    def choose_victim(self, ctx, rng):
        return min(ctx.candidates, key=ctx.last_used.__getitem__)


class MarkerPolicy(Policy):
    """Randomized marking: pages are marked on request; when a miss finds all
    cached pages marked, all marks drop (a new marking phase) and the victim
    is drawn uniformly from the unmarked candidates."""

    name = "marker"
    needs_request_hook = True

    def begin_run(self, trace, k, bundle, rng):
        self.marked: set[PageId] = set()

    def choose_victim(self, ctx, rng):
        marked = self.marked
        if marked >= ctx.cached:
            marked.clear()
        pool = sorted(p for p in ctx.candidates if p not in marked)
        if not pool:
            pool = sorted(ctx.candidates)
        return pool[int(rng.integers(len(pool)))]

    def on_request(self, page, now, hit):
        self.marked.add(page)

    def on_evict(self, page):
        self.marked.discard(page)


class BeladyPolicy(Policy):
    """Offline baseline: evicts the true furthest-in-the-future candidate."""

    name = "belady"

    def begin_run(self, trace, k, bundle, rng):
        self._nxt = trace.next_occurrence

    def choose_victim(self, ctx, rng):
        nxt = self._nxt
        lu = ctx.last_used
        return max(ctx.candidates, key=lambda p: (nxt[lu[p] - 1], -lu[p], p))


class BlindOraclePolicy(Policy):
    """Trusts next-request-time predictions outright: evicts the candidate
    whose prediction (attached at its most recent request) is largest.
    Ties break least-recently-used first, then larger page id."""

    name = "blind_oracle"
    requires = PredictionKind.NRT

    def choose_victim(self, ctx, rng):
        pred = ctx.last_prediction_of
        lu = ctx.last_used
        try:
            return max(ctx.candidates, key=lambda p: (pred[p], -lu[p], p))
        except KeyError as exc:
            raise ContractViolation(f"no prediction attached for cached page {exc}") from None


class LRBFollowerPolicy(Policy):
    """Follows binary eviction labels: evicts a uniformly random candidate
    whose attached label is 1, falling back to uniform over all candidates."""

    name = "lrb"
    requires = PredictionKind.BINARY

    def choose_victim(self, ctx, rng):
        pred = ctx.last_prediction_of
        try:
            pool = sorted(p for p in ctx.candidates if pred[p])
        except KeyError as exc:
            raise ContractViolation(f"no label attached for cached page {exc}") from None
        if not pool:
            pool = sorted(ctx.candidates)
        return pool[int(rng.integers(len(pool)))]


class FitFFollowerPolicy(Policy):
    """Delegates each eviction to a furthest-in-the-future choice function."""

    name = "fitf"
    requires = PredictionKind.FITF

    def choose_victim(self, ctx, rng):
        return ctx.predictions.fitf_choice(ctx.candidates, ctx.now)


class _Lane:
    """Private virtual simulation of one sub-policy inside a combiner."""

    __slots__ = ("policy", "k", "cache", "last_used", "page_pred", "vals",
                 "hook", "ctx", "misses", "last_evict_t", "last_evict_victim")

    def __init__(self, policy: Policy):
        self.policy = policy

    def begin(self, trace, k, bundle, rng):
        self.policy.begin_run(trace, k, bundle, rng)
        self.k = k
        self.cache: set[PageId] = set()
        self.last_used: dict[PageId, int] = {}
        self.page_pred: dict[PageId, int] = {}
        self.vals = None
        if bundle is not None:
            if bundle.kind is PredictionKind.NRT:
                self.vals = bundle.nrt
            elif bundle.kind is PredictionKind.BINARY:
                self.vals = bundle.labels
        self.hook = self.policy.on_request if self.policy.needs_request_hook else None
        self.ctx = EvictionContext(0, -1, self.cache, self.cache, bundle,
                                   self.page_pred, self.last_used)
        self.misses = 0
        self.last_evict_t = 0
        self.last_evict_victim: PageId | None = None

    def step(self, i: int, p: PageId, rng) -> bool:
        """Serve one request on the lane's private cache; True on a miss."""
        if self.vals is not None:
            self.page_pred[p] = self.vals[i - 1]
        cache = self.cache
        if p in cache:
            self.last_used[p] = i
            if self.hook is not None:
                self.hook(p, i, True)
            return False
        self.misses += 1
        if len(cache) == self.k:
            ctx = self.ctx
            ctx.now = i
            ctx.requested = p
            victim = self.policy.choose_victim(ctx, rng)
            if victim not in cache:
                raise ContractViolation(
                    f"{self.policy.name} chose non-candidate victim {victim!r} at t={i}"
                )
            cache.discard(victim)
            self.policy.on_evict(victim)
            self.last_evict_t = i
            self.last_evict_victim = victim
        cache.add(p)
        self.last_used[p] = i
        if self.hook is not None:
            self.hook(p, i, False)
        return True


class _CombinerBase(Policy):
    """Runs two sub-policies on private virtual caches over the same requests
    and mirrors the currently active one onto the real cache: on a real
    eviction the active lane's victim for this request is used when it is a
    candidate, otherwise the least-recently-used candidate."""

    needs_request_hook = True

    def __init__(self, a: Policy, b: Policy):
        kinds = {a.requires, b.requires} - {PredictionKind.NONE}
        if len(kinds) > 1:
            raise ValueError(
                f"sub-policies {a.name!r} and {b.name!r} need different prediction kinds"
            )
        self.requires = kinds.pop() if kinds else PredictionKind.NONE
        self.lanes = (_Lane(a), _Lane(b))
        self.active = 0

    def begin_run(self, trace, k, bundle, rng):
        for lane in self.lanes:
            lane.begin(trace, k, bundle, rng)
        self._pages = trace.pages
        self._rng = rng
        self._processed = 0
        self.active = 0

    def _advance(self, now: int) -> None:
        lanes = self.lanes
        pages = self._pages
        rng = self._rng
        i = self._processed
        while i < now:
            i += 1
            p = pages[i - 1]
            m0 = lanes[0].step(i, p, rng)
            m1 = lanes[1].step(i, p, rng)
            self._after_step(m0, m1)
        self._processed = i

    def _after_step(self, miss_a: bool, miss_b: bool) -> None:
        raise NotImplementedError

    def _select_active(self, rng) -> None:
        """Hook invoked at each real eviction before the victim is mapped."""

    def on_request(self, page, now, hit):
        self._advance(now)

    def choose_victim(self, ctx, rng):
        self._advance(ctx.now)
        self._select_active(rng)
        lane = self.lanes[self.active]
        if lane.last_evict_t == ctx.now and lane.last_evict_victim in ctx.candidates:
            return lane.last_evict_victim
        return min(ctx.candidates, key=ctx.last_used.__getitem__)


class SwitchDeterministicPolicy(_CombinerBase):
    """Deterministic switching: control moves to the passive sub-policy as
    soon as the active one's virtual miss count exceeds bound x the passive's."""

    def __init__(self, a: Policy, b: Policy, bound: float = 1.0):
        if bound <= 0:
            raise ValueError("bound must be positive")
        super().__init__(a, b)
        self.bound = bound
        self.name = f"switch_det({a.name},{b.name},{_fmt_num(bound)})"

    def _after_step(self, miss_a, miss_b):
        active, passive = self.active, 1 - self.active
        if self.lanes[active].misses > self.bound * self.lanes[passive].misses:
            self.active = passive


class SwitchRandomizedPolicy(_CombinerBase):
    """Multiplicative-weights switching: each sub-policy's weight shrinks by
    beta on its own virtual misses, and the active policy is resampled
    proportionally to the weights at every real eviction."""

    def __init__(self, a: Policy, b: Policy, beta: float = 0.99):
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie strictly between 0 and 1")
        super().__init__(a, b)
        self.beta = beta
        self.name = f"switch_rand({a.name},{b.name},{_fmt_num(beta)})"

    def begin_run(self, trace, k, bundle, rng):
        super().begin_run(trace, k, bundle, rng)
        self.weights = [1.0, 1.0]

    def _after_step(self, miss_a, miss_b):
        if miss_a:
            self.weights[0] *= self.beta
        if miss_b:
            self.weights[1] *= self.beta

    def _select_active(self, rng):
        w0, w1 = self.weights
        self.active = 0 if float(rng.random()) < w0 / (w0 + w1) else 1


def _fmt_num(x: float) -> str:
    return f"{x:g}"


POLICY_FACTORIES: dict[str, type[Policy]] = {
    "lru": LRUPolicy,
    "marker": MarkerPolicy,
    "belady": BeladyPolicy,
    "blind_oracle": BlindOraclePolicy,
    "lrb": LRBFollowerPolicy,
    "fitf": FitFFollowerPolicy,
}


def _split_args(body: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {body!r}")
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    if depth:
        raise ValueError(f"unbalanced parentheses in {body!r}")
    parts.append(body[start:])
    return [p.strip() for p in parts]


def build_policy(spec: str) -> Policy:
    """Build a policy from its name string.

    Grammar: ``lru | marker | belady | blind_oracle | lrb | fitf |
    switch_det(a,b[,bound]) | switch_rand(a,b[,beta])``, each optionally
    prefixed with ``guard:`` to wrap it in the guarded robustification layer.
    """
    spec = spec.strip()
    if spec.startswith("guard:"):
        from .guard import GuardPolicy  # local import avoids a module cycle

        return GuardPolicy(build_policy(spec[len("guard:"):]))
    for prefix, cls, default in (
        ("switch_det(", SwitchDeterministicPolicy, 1.0),
        ("switch_rand(", SwitchRandomizedPolicy, 0.99),
    ):
        if spec.startswith(prefix):
            if not spec.endswith(")"):
                raise ValueError(f"malformed policy spec {spec!r}")
            args = _split_args(spec[len(prefix):-1])
            if len(args) not in (2, 3):
                raise ValueError(f"{prefix[:-1]} takes 2 or 3 arguments, got {len(args)}")
            param = float(args[2]) if len(args) == 3 else default
            return cls(build_policy(args[0]), build_policy(args[1]), param)
    cls = POLICY_FACTORIES.get(spec)
    if cls is None:
        raise ValueError(f"unknown policy spec {spec!r}")
    return cls()


@dataclass
class RunResult:
    """Outcome of one simulated run (one policy, one trace, one seed)."""

    policy: str
    misses: int
    opt_misses: int | None
    seed: int
    wall_ms: float
    predictor: str = ""
    param: float | str | None = None
    error: PredictionError | None = None
    phase_stats: list | None = None

    @property
    def ratio(self) -> float | None:
        if self.opt_misses is None or self.opt_misses == 0:
            return None
        return self.misses / self.opt_misses


def _check_bundle(policy: Policy, bundle: PredictionBundle | None, n: int) -> None:
    required = policy.requires
    if required is PredictionKind.NONE:
        return
    if bundle is None:
        raise ValueError(f"policy {policy.name!r} requires {required.value} predictions")
    if bundle.kind is not required:
        raise ValueError(
            f"policy {policy.name!r} requires {required.value} predictions, "
            f"got {bundle.kind.value}"
        )
    if required is PredictionKind.NRT and len(bundle.nrt) != n:
        raise ValueError("prediction stream length does not match trace")
    if required is PredictionKind.BINARY and len(bundle.labels) != n:
        raise ValueError("prediction stream length does not match trace")
    if required is PredictionKind.FITF and bundle.fitf_choice is None:
        raise ValueError("FITF bundle has no choice function")


def simulate(
    policy: Policy,
    trace: Trace,
    k: int,
    bundle: PredictionBundle | None = None,
    *,
    seed: int = 0,
    opt_misses: int | None = None,
    compute_opt: bool = True,
    measure_errors: bool = False,
) -> RunResult:
    """Replay the trace against a policy on a k-slot cache.

    Predictions (when given) are attached to each page at its most recent
    request. `opt_misses` short-circuits the offline-optimum computation;
    with `compute_opt=False` the result carries no ratio.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_bundle(policy, bundle, len(trace))
    rng = np.random.default_rng(seed)
    policy.begin_run(trace, k, bundle, rng)

    vals = None
    if bundle is not None:
        if bundle.kind is PredictionKind.NRT:
            vals = bundle.nrt
        elif bundle.kind is PredictionKind.BINARY:
            vals = bundle.labels
    cache: set[PageId] = set()
    last_used: dict[PageId, int] = {}
    page_pred: dict[PageId, int] = {}
    ctx = EvictionContext(0, -1, cache, cache, bundle, page_pred, last_used)
    hook = policy.on_request if policy.needs_request_hook else None
    choose = policy.choose_victim
    on_evict = policy.on_evict
    misses = 0
    i = 0
    start = time.perf_counter()
    for p in trace.pages:
        i += 1
        if vals is not None:
            page_pred[p] = vals[i - 1]
        if p in cache:
            last_used[p] = i
            if hook is not None:
                hook(p, i, True)
        else:
            misses += 1
            if len(cache) == k:
                ctx.now = i
                ctx.requested = p
                victim = choose(ctx, rng)
                if victim not in cache:
                    raise ContractViolation(
                        f"{policy.name} chose non-candidate victim {victim!r} at t={i}"
                    )
                cache.discard(victim)
                on_evict(victim)
            cache.add(p)
            last_used[p] = i
            if hook is not None:
                hook(p, i, False)
    wall_ms = (time.perf_counter() - start) * 1e3

    opt = opt_misses
    if opt is None and compute_opt:
        opt = opt_cost(trace, k)
    error = None
    if measure_errors and bundle is not None:
        error = measure_error(bundle, trace, k)
    return RunResult(
        policy=policy.name,
        misses=misses,
        opt_misses=opt,
        seed=seed,
        wall_ms=wall_ms,
        error=error,
        phase_stats=getattr(policy, "phase_stats", None),
    )
