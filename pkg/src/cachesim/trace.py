"""Request-sequence data model and trace ingestion.

A trace is an ordered sequence of page requests; request indices are 1-based
throughout the package. ``next_occurrence[i-1]`` holds the index of the next
request for the same page strictly after request ``i``, with the sentinel
``n + 1`` when the page is never requested again.
"""

from __future__ import annotations

import csv
import hashlib
import io
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

PageId = int


@dataclass(frozen=True)
class Request:
    """A single page request: 1-based position in the trace plus the page."""

    index: int
    page: PageId


def _page_ids(requests: Iterable) -> list[PageId]:
    return [r.page if isinstance(r, Request) else int(r) for r in requests]


def compute_next_occurrence(requests: Sequence) -> list[int]:
    """Next-occurrence index for every request, sentinel n+1, in one backward pass."""
    pages = _page_ids(requests)
    n = len(pages)
    nxt = [0] * n
    last_seen: dict[PageId, int] = {}
    for i in range(n - 1, -1, -1):
        p = pages[i]
        nxt[i] = last_seen.get(p, n + 1)
        last_seen[p] = i + 1
    return nxt


class Trace:
    """Immutable page-request sequence with precomputed next-occurrence times."""

    __slots__ = ("pages", "next_occurrence", "universe_size", "_occ", "_digest")

    def __init__(self, pages: Iterable[PageId]):
        pages = [int(p) for p in pages]
        if not pages:
            raise ValueError("empty trace")
        if min(pages) < 0:
            raise ValueError("page ids must be non-negative integers")
        self.pages: list[PageId] = pages
        self.next_occurrence: list[int] = compute_next_occurrence(pages)
        self.universe_size: int = len(set(pages))
        self._occ: dict[PageId, list[int]] | None = None
        self._digest: str | None = None

    def __len__(self) -> int:
        return len(self.pages)

    @property
    def n(self) -> int:
        return len(self.pages)

    @property
    def requests(self) -> list[Request]:
        """Materialised request objects; O(n), intended for small traces."""
        return [Request(i, p) for i, p in enumerate(self.pages, 1)]

    def occurrences(self) -> dict[PageId, list[int]]:
        """Per-page sorted request indices (1-based), built lazily."""
        if self._occ is None:
            occ: dict[PageId, list[int]] = {}
            for i, p in enumerate(self.pages, 1):
                occ.setdefault(p, []).append(i)
            self._occ = occ
        return self._occ

    def next_occurrence_after(self, page: PageId, t: int) -> int:
        """Index of the first request for `page` strictly after `t`; n+1 if none."""
        times = self.occurrences().get(page)
        if not times:
            return len(self.pages) + 1
        j = bisect_right(times, t)
        return times[j] if j < len(times) else len(self.pages) + 1

    def last_occurrence_at_or_before(self, page: PageId, t: int) -> int | None:
        times = self.occurrences().get(page)
        if not times:
            return None
        j = bisect_right(times, t)
        return times[j - 1] if j else None

    @property
    def digest(self) -> str:
        """SHA-256 of the page sequence, for content-addressed caching."""
        if self._digest is None:
            h = hashlib.sha256()
            h.update(b"\n".join(str(p).encode() for p in self.pages))
            self._digest = h.hexdigest()
        return self._digest

    def __repr__(self) -> str:  # pragma: no cover
        return f"Trace(n={len(self.pages)}, universe={self.universe_size})"


def parse_plain_trace(text: str) -> Trace:
    """Parse the plain format: one token per line; blank lines and ``#`` comments skipped.

    Tokens are interned to consecutive PageIds in order of first appearance.
    """
    tokens = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens.append(line)
    if not tokens:
        raise ValueError("empty trace")
    interned: dict[str, int] = {}
    return Trace([interned.setdefault(tok, len(interned)) for tok in tokens])


def ingest_brightkite(
    text: str, *, cache_size: int = 10, min_distinct: int | None = None
) -> list[tuple[str, Trace]]:
    """Split a BrightKite-style check-in dump into per-user location traces.

    Expects five tab-separated columns per line: user, check-in time, latitude,
    longitude, location id. Check-ins are ordered chronologically per user and
    the location id becomes the page. Users with fewer than ``min_distinct``
    distinct locations (default: twice the cache size) are dropped.
    """
    if min_distinct is None:
        min_distinct = 2 * cache_size
    by_user: dict[str, list[tuple[str, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        cols = raw.split("\t")
        if len(cols) != 5:
            raise ValueError(
                f"line {lineno}: expected 5 tab-separated fields, got {len(cols)}"
            )
        user, ts, _lat, _lon, loc = (c.strip() for c in cols)
        if not loc:
            raise ValueError(f"line {lineno}: missing location id")
        if not user:
            raise ValueError(f"line {lineno}: missing user id")
        by_user.setdefault(user, []).append((ts, loc))
    if not by_user:
        raise ValueError("empty trace")
    out: list[tuple[str, Trace]] = []
    for user, rows in by_user.items():
        rows.sort(key=lambda r: r[0])  # timestamps are ISO-like; lexicographic == chronological
        locs = [loc for _, loc in rows]
        if len(set(locs)) < min_distinct:
            continue
        interned: dict[str, int] = {}
        out.append((user, Trace([interned.setdefault(l, len(interned)) for l in locs])))
    return out


def ingest_citibike(text: str, *, start_station_column: str = "start station id") -> Trace:
    """Read a bike-share ride CSV; each ride's start station id becomes one request."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ValueError("empty trace")
    names = [h.strip().lower() for h in header]
    try:
        col = names.index(start_station_column.strip().lower())
    except ValueError:
        raise ValueError(f"column {start_station_column!r} not found in header") from None
    pages: list[int] = []
    for rownum, row in enumerate(reader, 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"row {rownum}: expected {len(header)} fields, got {len(row)}")
        val = row[col].strip()
        if not val:
            raise ValueError(f"row {rownum}: missing station id")
        try:
            pages.append(int(float(val)))
        except ValueError:
            raise ValueError(f"row {rownum}: unparsable station id {val!r}") from None
    if not pages:
        raise ValueError("empty trace")
    return Trace(pages)


@dataclass(frozen=True)
class SetAssociativeConfig:
    """Geometry of a set-associative cache used to shard address traces."""

    capacity_bytes: int = 2 * 1024 * 1024
    line_bytes: int = 64
    ways: int = 16

    def __post_init__(self):
        if self.capacity_bytes <= 0 or self.line_bytes <= 0 or self.ways <= 0:
            raise ValueError("cache geometry values must be positive")
        if self.capacity_bytes % self.line_bytes:
            raise ValueError("line_bytes must divide capacity_bytes")
        if (self.capacity_bytes // self.line_bytes) % self.ways:
            raise ValueError("ways must divide the number of lines")

    @property
    def num_lines(self) -> int:
        return self.capacity_bytes // self.line_bytes

    @property
    def num_sets(self) -> int:
        return self.num_lines // self.ways


def ingest_address_trace(text: str, config: SetAssociativeConfig) -> dict[int, Trace]:
    """Map raw memory addresses onto cache sets; one independent trace per set.

    Addresses are hex (``0x`` prefix) or decimal, one per line. The page is the
    line address ``addr // line_bytes``; its set is ``line_address % num_sets``.
    Simulate each per-set trace with k = ``config.ways``.
    """
    num_sets = config.num_sets
    line_bytes = config.line_bytes
    per_set: dict[int, list[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.strip()
        if not tok or tok.startswith("#"):
            continue
        try:
            addr = int(tok, 16) if tok.lower().startswith("0x") else int(tok)
        except ValueError:
            raise ValueError(f"line {lineno}: unparsable address {tok!r}") from None
        if addr < 0:
            raise ValueError(f"line {lineno}: negative address {tok!r}")
        line_addr = addr // line_bytes
        per_set.setdefault(line_addr % num_sets, []).append(line_addr)
    if not per_set:
        raise ValueError("empty trace")
    return {s: Trace(pages) for s, pages in sorted(per_set.items())}


def cyclic_trace(num_pages: int, n: int) -> Trace:
    """Round-robin requests over ``num_pages`` pages; the classic paging stressor."""
    if num_pages < 1 or n < 1:
        raise ValueError("need at least one page and one request")
    return Trace([i % num_pages for i in range(n)])


def adversarial_pinning_trace(n: int) -> Trace:
    """Family where one never-reused page tempts a misled policy to pin it.

    Requests page 0 once, then alternates pages 2 and 1 forever. The offline
    optimum evicts page 0 at the first miss and pays a constant 3 misses at
    k = 2 regardless of length, so any policy tricked into keeping page 0
    while cycling the other two has an unbounded cost ratio.
    """
    if n < 4:
        raise ValueError("adversarial family needs n >= 4")
    pages = [0, 1]
    for t in range(n - 2):
        pages.append(2 if t % 2 == 0 else 1)
    return Trace(pages)
