"""Prediction bundles: synthetic noise models, history-based predictors, errors.

A bundle carries one prediction stream for a whole trace. Three kinds exist:
per-request next-request-time estimates (NRT), per-request binary eviction
labels, and a queryable furthest-in-the-future choice function (FITF). Bundles
are built deterministically from (trace, parameters, seed).
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .oracle import belady_labels, belady_simulate
from .trace import PageId, Trace


class PredictionKind(Enum):
    NONE = "none"
    NRT = "nrt"
    BINARY = "binary"
    FITF = "fitf"


@dataclass
class PredictionBundle:
    """One prediction stream; exactly the payload matching ``kind`` is set.

    FITF bundles count their queries and how many answers differed from the
    true furthest-in-the-future page; use one bundle instance per run.
    """

    kind: PredictionKind
    nrt: list[int] | None = None
    labels: list[int] | None = None
    fitf_choice: Callable[[Iterable[PageId], int], PageId] | None = None
    fitf_queries: int = 0
    fitf_wrong: int = 0

    def __post_init__(self):
        if self.kind is PredictionKind.NRT and self.nrt is None:
            raise ValueError("NRT bundle needs nrt values")
        if self.kind is PredictionKind.BINARY and self.labels is None:
            raise ValueError("binary bundle needs labels")


@dataclass(frozen=True)
class PredictionError:
    """Aggregate prediction error of one bundle against the true trace.

    eta_t: l1 distance between predicted and true next request times;
    eta_b: number of mispredicted binary labels;
    eta_f: number of FITF queries answered with a non-furthest page.
    """

    eta_t: float = 0.0
    eta_b: int = 0
    eta_f: int = 0


def perfect_nrt(trace: Trace) -> PredictionBundle:
    """Exact next request times (sentinel n+1 when a page never returns)."""
    return PredictionBundle(PredictionKind.NRT, nrt=list(trace.next_occurrence))


def synthetic_nrt(trace: Trace, sigma: float, seed: int = 0) -> PredictionBundle:
    """True next request times with log-normally scaled forward gaps.

    Each prediction is t + (T - t) * X with X ~ LogNormal(0, sigma) drawn
    i.i.d. per request, rounded to an integer and floored at t + 1. sigma=0
    reproduces the truth exactly.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    n = len(trace)
    rng = np.random.default_rng(seed)
    noise = rng.lognormal(0.0, sigma, size=n)
    t = np.arange(1, n + 1, dtype=float)
    T = np.asarray(trace.next_occurrence, dtype=float)
    pred = np.maximum(np.rint(t + (T - t) * noise), t + 1).astype(int)
    return PredictionBundle(PredictionKind.NRT, nrt=pred.tolist())


def inverted_nrt(trace: Trace) -> PredictionBundle:
    """Adversarial stream predicting n+1-T: the sooner a page returns, the
    further in the future it is claimed to be.

    Deliberately violates the usual "prediction lies in the future" shape;
    it exists to probe worst-case behaviour of prediction-following policies.
    """
    n = len(trace)
    return PredictionBundle(
        PredictionKind.NRT, nrt=[n + 1 - T for T in trace.next_occurrence]
    )


def perfect_labels(trace: Trace, k: int) -> PredictionBundle:
    """The offline optimum's own eviction labels."""
    return PredictionBundle(PredictionKind.BINARY, labels=belady_labels(trace, k))


def flip_labels(trace: Trace, k: int, p_flip: float, seed: int = 0) -> PredictionBundle:
    """True eviction labels with each bit flipped independently w.p. ``p_flip``."""
    if not 0.0 <= p_flip <= 1.0:
        raise ValueError("p_flip must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    flips = rng.random(len(trace)) < p_flip
    labels = [int(y ^ bool(f)) for y, f in zip(belady_labels(trace, k), flips)]
    return PredictionBundle(PredictionKind.BINARY, labels=labels)


def pleco(trace: Trace, *, alpha: float = 1.8, offset: float = 10.0) -> PredictionBundle:
    """Power-law repeat-consumption predictor.

    At request index t, a past access at index s has weight (t-s+offset)^-alpha;
    the requested page's return probability p is its share of the total weight
    of all past accesses (p = 1 at a page's first appearance), and the
    predicted next request time is t + max(1, round(1/p)). Strictly causal.
    """
    if alpha <= 0 or offset <= 0:
        raise ValueError("alpha and offset must be positive")
    pages = trace.pages
    n = len(pages)
    preds = [0] * n
    occ: dict[PageId, list[int]] = {}
    denom = 0.0
    for i in range(1, n + 1):
        p = pages[i - 1]
        past = occ.get(p)
        if past:
            num = float(np.sum((i - np.asarray(past, dtype=float) + offset) ** -alpha))
            prob = num / denom
        else:
            prob = 1.0
        preds[i - 1] = i + max(1, round(1.0 / prob))
        occ.setdefault(p, []).append(i)
        # The total past weight at request t is sum_{d=1..t-1} (d+offset)^-alpha —
        # it depends only on access ages, so each step adds one term of age i.
        denom += (i + offset) ** -alpha
    return PredictionBundle(PredictionKind.NRT, nrt=preds)


def popu(trace: Trace) -> PredictionBundle:
    """Frequency predictor: p is the requested page's share of requests 1..t,
    and the predicted next request time is t + max(1, round(1/p))."""
    pages = trace.pages
    preds = [0] * len(pages)
    counts: dict[PageId, int] = {}
    for i, p in enumerate(pages, 1):
        c = counts.get(p, 0) + 1
        counts[p] = c
        preds[i - 1] = i + max(1, round(i / c))
    return PredictionBundle(PredictionKind.NRT, nrt=preds)


def noisy_fitf(trace: Trace, k: int, epsilon: float, seed: int = 0) -> PredictionBundle:
    """Furthest-in-the-future choice function that errs with probability epsilon.

    Each query consumes one RNG draw: with probability 1 - epsilon the true
    furthest page is returned, otherwise a uniformly random other candidate
    (the sole candidate when there is no alternative). Wrong answers are
    tallied on the bundle.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    occ = trace.occurrences()
    sentinel = len(trace) + 1
    bundle = PredictionBundle(PredictionKind.FITF)

    def true_fitf(candidates: Iterable[PageId], now: int) -> PageId:
        best = None
        best_key = None
        for c in candidates:
            times = occ[c]
            j = bisect_right(times, now)
            nxt = times[j] if j < len(times) else sentinel
            key = (nxt, -times[j - 1], c)  # ties: LRU first, then larger id
            if best_key is None or key > best_key:
                best, best_key = c, key
        return best

    def choice(candidates: Iterable[PageId], now: int) -> PageId:
        candidates = list(candidates)
        truth = true_fitf(candidates, now)
        answer = truth
        u = float(rng.random())
        if u < epsilon:
            others = sorted(c for c in candidates if c != truth)
            if others:
                idx = min(int(u / epsilon * len(others)), len(others) - 1)
                answer = others[idx]
        bundle.fitf_queries += 1
        if answer != truth:
            bundle.fitf_wrong += 1
        return answer

    bundle.fitf_choice = choice
    return bundle


def binary_from_nrt(
    bundle: PredictionBundle,
    trace: Trace,
    boundary: float | None = None,
    *,
    k: int | None = None,
    warmup_fraction: float = 0.1,
    percentile: float = 90.0,
) -> PredictionBundle:
    """Threshold an NRT bundle into binary labels: 1 iff predicted gap > boundary.

    When no boundary is given it is calibrated as the given percentile of the
    offline optimum's eviction forward-gaps on the leading ``warmup_fraction``
    of the trace (which needs ``k``); with no warmup evictions every request
    is labelled 0 via a maximal boundary.
    """
    if bundle.kind is not PredictionKind.NRT:
        raise ValueError("binary_from_nrt needs an NRT bundle")
    if boundary is None:
        if k is None:
            raise ValueError("deriving the default boundary requires k")
        m = max(1, int(len(trace) * warmup_fraction))
        prefix = Trace(trace.pages[:m])
        out = belady_simulate(prefix, k)
        gaps = [
            prefix.next_occurrence[i] - (i + 1)
            for i, y in enumerate(out.labels)
            if y
        ]
        boundary = float(np.percentile(gaps, percentile)) if gaps else float(len(trace))
    if boundary <= 0:
        raise ValueError("boundary must be positive")
    labels = [
        1 if pred - t > boundary else 0
        for t, pred in enumerate(bundle.nrt, 1)
    ]
    return PredictionBundle(PredictionKind.BINARY, labels=labels)


def measure_error(bundle: PredictionBundle, trace: Trace, k: int | None = None) -> PredictionError:
    """Errors of a bundle against the truth; binary labels need ``k``."""
    if bundle.kind is PredictionKind.NRT:
        truth = trace.next_occurrence
        if len(bundle.nrt) != len(truth):
            raise ValueError("bundle length does not match trace")
        return PredictionError(eta_t=float(sum(abs(a - b) for a, b in zip(bundle.nrt, truth))))
    if bundle.kind is PredictionKind.BINARY:
        if k is None:
            raise ValueError("measuring label error requires k")
        truth = belady_labels(trace, k)
        if len(bundle.labels) != len(truth):
            raise ValueError("bundle length does not match trace")
        return PredictionError(eta_b=sum(a != b for a, b in zip(bundle.labels, truth)))
    if bundle.kind is PredictionKind.FITF:
        return PredictionError(eta_f=bundle.fitf_wrong)
    raise ValueError(f"cannot measure errors for bundle kind {bundle.kind}")


_NRT_HEADER = ["index", "predicted_nrt"]
_LABEL_HEADER = ["index", "label"]


def save_bundle_csv(bundle: PredictionBundle, path: str | Path) -> None:
    """Write an NRT or binary bundle as a two-column CSV (1-based index)."""
    if bundle.kind is PredictionKind.NRT:
        header, values = _NRT_HEADER, bundle.nrt
    elif bundle.kind is PredictionKind.BINARY:
        header, values = _LABEL_HEADER, bundle.labels
    else:
        raise ValueError("only NRT and binary bundles can be exported")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for i, v in enumerate(values, 1):
        writer.writerow([i, v])
    Path(path).write_text(buf.getvalue())


def load_bundle_csv(path: str | Path) -> PredictionBundle:
    """Read a bundle written by `save_bundle_csv`; the header names the kind."""
    rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    if not rows:
        raise ValueError("empty bundle file")
    header = [h.strip().lower() for h in rows[0]]
    if header == _NRT_HEADER:
        kind = PredictionKind.NRT
    elif header == _LABEL_HEADER:
        kind = PredictionKind.BINARY
    else:
        raise ValueError(f"unrecognised bundle header {rows[0]!r}")
    values: list[int] = []
    for rownum, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"row {rownum}: expected 2 fields")
        idx, val = int(row[0]), int(float(row[1]))
        if idx != len(values) + 1:
            raise ValueError(f"row {rownum}: indices must be consecutive from 1")
        values.append(val)
    if kind is PredictionKind.NRT:
        return PredictionBundle(kind, nrt=values)
    return PredictionBundle(kind, labels=values)
