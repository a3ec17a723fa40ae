"""Regenerate the checked-in dataset fixtures (deterministic, seeded).

Run from the repository root:

    python tests/data/make_fixtures.py

The outputs are small but shaped like their real-world counterparts: a
check-in dump with per-user histories (one user below the distinct-location
threshold, one exactly on it), a bike-share ride CSV with a popularity-skewed
station distribution, and a memory-address trace that concentrates on a few
cache sets so set-associative replay sees real evictions.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def make_brightkite(rng: np.random.Generator) -> None:
    rows: list[tuple[str, str, str]] = []  # (user, timestamp, location)

    def checkins(user: str, count: int, distinct: int, salt: int) -> None:
        locs = [f"loc{salt:02d}{i:03d}" for i in range(distinct)]
        seq = [locs[i % distinct] for i in range(distinct)]  # every loc at least once
        seq += [locs[int(rng.integers(distinct))] for _ in range(count - distinct)]
        rng.shuffle(seq)
        for i, loc in enumerate(seq):
            ts = f"2010-{(i // 28) + 1:02d}-{(i % 28) + 1:02d}T{int(rng.integers(24)):02d}:00:00Z"
            rows.append((user, ts, loc))

    checkins("101", 70, 25, 1)   # kept at cache_size=10 (threshold 20)
    checkins("202", 60, 22, 2)   # kept
    checkins("303", 40, 12, 3)   # dropped: 12 < 20 distinct
    checkins("404", 44, 20, 4)   # boundary: exactly 20 distinct, kept
    rng.shuffle(rows)
    lines = [f"{u}\t{ts}\t39.7476\t-104.9925\t{loc}" for u, ts, loc in rows]
    (HERE / "brightkite_sample.tsv").write_text("\n".join(lines) + "\n")


def make_citibike(rng: np.random.Generator) -> None:
    stations = np.arange(100, 320)  # 220 distinct stations
    weights = 1.0 / np.arange(1, len(stations) + 1) ** 0.8
    weights /= weights.sum()
    picks = rng.choice(stations, size=1200, p=weights)
    lines = ["tripduration,starttime,stoptime,start station id,start station name,end station id"]
    for i, st in enumerate(picks):
        st_txt = f"{st}.0" if i % 7 == 0 else str(st)  # some ids serialized as floats
        lines.append(
            f"{int(rng.integers(120, 3600))},2019-07-01 00:{i % 60:02d}:00,"
            f"2019-07-01 01:{i % 60:02d}:00,{st_txt},Station {st},{int(rng.integers(100, 320))}"
        )
    (HERE / "citibike_sample.csv").write_text("\n".join(lines) + "\n")


def make_addresses(rng: np.random.Generator) -> None:
    # Default geometry: 2 MiB / 64 B lines / 16 ways -> 2048 sets. Concentrate
    # traffic on sets {0, 1, 5} with ~40 distinct lines each so replay at
    # k = 16 ways actually evicts.
    lines = ["# synthetic memory reference trace (hex and decimal mixed)", ""]
    set_stride = 2048 * 64  # bytes between consecutive lines that share a set
    for _ in range(2400):
        set_idx = int(rng.choice([0, 1, 5]))
        way = int(rng.integers(40))
        addr = set_idx * 64 + way * set_stride + int(rng.integers(64))  # offset in line
        lines.append(hex(addr) if rng.random() < 0.5 else str(addr))
    # pin the aliasing example: byte 0 and byte 131072 are distinct lines of set 0
    lines += ["0x0", "131072"]
    (HERE / "addr_sample.txt").write_text("\n".join(lines) + "\n")


def main() -> None:
    rng = np.random.default_rng(20240817)
    make_brightkite(rng)
    make_citibike(rng)
    make_addresses(rng)
    print("fixtures written to", HERE)


if __name__ == "__main__":
    main()
