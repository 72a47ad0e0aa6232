"""Workload benchmarks: tombstone overhead as deletions accumulate, and
local/remote cost scaling as the document grows with the concurrency window
held fixed.

Instrumented work counters (transform calls, object visits, id comparisons)
are the primary signal; wall-clock times are recorded as a secondary,
platform-dependent observation. Document growth always types left to right,
which is the cheap path for every engine and keeps the growth phase out of
the measured window.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field, asdict

from .core import delete_op, insert_op
from .engines import make_replica
from .errors import ConfigError
from .logoot import BOUNDARY


@dataclass(slots=True)
class BenchRecord:
    engine: str
    workload: str
    doc_size: int  # visible chars when measured
    concurrency: int  # concurrent-op window size (0 = none)
    deletions: int
    space_proxy: int  # woot: objects incl. tombstones; logoot: id triples; ot: history length
    local_time_us: float
    remote_time_us: float
    work_per_remote_max: int  # transform calls / object visits / id comparisons
    work_per_remote_mean: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


CSV_COLUMNS = [
    "engine",
    "workload",
    "doc_size",
    "concurrency",
    "deletions",
    "space_proxy",
    "local_time_us",
    "remote_time_us",
    "work_per_remote_max",
    "work_per_remote_mean",
]


def records_to_csv(records: list[BenchRecord]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        d = r.to_dict()
        lines.append(",".join(str(d.get(c, "")) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _space_proxy(replica) -> int:
    m = replica.metrics()
    for key in ("objects", "id_triples", "history_len"):
        if key in m:
            return m[key]
    return 0


def _work_counter(replica) -> int:
    """Engine-specific per-op work counter value after the last remote op."""
    if hasattr(replica, "last_transform_calls"):
        return replica.last_transform_calls
    if hasattr(replica, "last_visits"):
        return replica.last_visits
    return replica.last_comparisons


def _grow(engine: str, size: int, *, seed: int = 1, strategy: str = BOUNDARY):
    """Type ``size`` chars left to right at site 1 and replicate at site 2."""
    a = make_replica(engine, 1, strategy=strategy, seed=seed)
    b = make_replica(engine, 2, strategy=strategy, seed=seed)
    for i in range(size):
        wire = a.local(insert_op(i, "abcdefgh"[i % 8], 1))
        b.remote(wire)
    return a, b


def bench_tombstone(
    insertions: int,
    delete_fraction: float,
    engine: str,
    *,
    seed: int = 7,
    strategy: str = BOUNDARY,
) -> list[BenchRecord]:
    """Typing-plus-deletion workload: grow to ``insertions`` chars, delete a
    seeded random fraction, and measure remote replay cost at a second site
    as the internal sequence (not the visible text) keeps growing."""
    if insertions < 1 or not 0 <= delete_fraction <= 1:
        raise ConfigError("need insertions >= 1 and 0 <= delete_fraction <= 1")
    rng = random.Random(seed)
    a, b = _grow(engine, insertions, seed=seed, strategy=strategy)
    deletions = int(insertions * delete_fraction)
    delete_times = []
    works = []
    for _ in range(deletions):
        visible = len(a.text())
        pos = rng.randrange(visible)
        wire = a.local(delete_op(pos, 1, 1))
        t0 = time.perf_counter()
        b.remote(wire)
        delete_times.append(time.perf_counter() - t0)
        works.append(_work_counter(b))

    # post-deletion remote inserts probe the degraded sequence
    probe_times = []
    probe_works = []
    for _ in range(20):
        visible = len(a.text())
        pos = rng.randrange(visible + 1)
        wire = a.local(insert_op(pos, "x", 1))
        t0 = time.perf_counter()
        b.remote(wire)
        probe_times.append(time.perf_counter() - t0)
        probe_works.append(_work_counter(b))

    metrics = b.metrics()
    record = BenchRecord(
        engine=engine,
        workload=f"tombstone f={delete_fraction}",
        doc_size=len(b.text()),
        concurrency=0,
        deletions=deletions,
        space_proxy=_space_proxy(b),
        local_time_us=0.0,
        remote_time_us=statistics.mean(probe_times) * 1e6,
        work_per_remote_max=max(probe_works),
        work_per_remote_mean=statistics.mean(probe_works),
        extra={
            "delete_remote_time_us": statistics.mean(delete_times) * 1e6 if delete_times else 0.0,
            "engine_metrics": metrics,
        },
    )
    return [record]


def _measure_locals(replica, samples: int) -> tuple[float, int]:
    """Median local-op time and max instrumented work for appended edits,
    taken on a throwaway clone so the measured ops never propagate."""
    probe = replica.clone()
    times = []
    works = []
    for _ in range(samples):
        pos = len(probe.text())
        t0 = time.perf_counter()
        probe.local(insert_op(pos, "z", probe.site))
        times.append(time.perf_counter() - t0)
        works.append(
            probe.last_transform_calls if hasattr(probe, "last_transform_calls") else 0
        )
    return statistics.median(times) * 1e6, max(works)


def _one_sided_window(a, b, c: int, rng: random.Random):
    """Site 1 types ``c`` ops nobody has seen; one op from site 2 (generated
    before that burst) then arrives at site 1. The incoming op is concurrent
    with exactly ``c`` ops."""
    size_b = len(b.text())
    foreign = b.local(insert_op(rng.randrange(size_b + 1), "y", 2))
    burst = []
    for _ in range(c):
        size_a = len(a.text())
        burst.append(a.local(insert_op(rng.randrange(size_a + 1), "x", 1)))
    t0 = time.perf_counter()
    a.remote(foreign)
    dt = time.perf_counter() - t0
    work = _work_counter(a)
    for w in burst:  # resynchronize
        b.remote(w)
    return dt, work


def _two_sided_window(a, b, c: int, rng: random.Random):
    """Both sites burst c/2 ops concurrently; site 1 integrates site 2's
    burst (the re-transformation variant's worst shape)."""
    half = max(1, c // 2)
    burst_a = [
        a.local(insert_op(rng.randrange(len(a.text()) + 1), "x", 1)) for _ in range(half)
    ]
    burst_b = [
        b.local(insert_op(rng.randrange(len(b.text()) + 1), "y", 2)) for _ in range(half)
    ]
    times = []
    works = []
    for w in burst_b:
        t0 = time.perf_counter()
        a.remote(w)
        times.append(time.perf_counter() - t0)
        works.append(_work_counter(a))
    for w in burst_a:
        b.remote(w)
    return times, works


def bench_scaling(
    doc_sizes: list[int],
    c_cap: int,
    engine: str,
    *,
    windows: int = 3,
    seed: int = 11,
    strategy: str = BOUNDARY,
) -> list[BenchRecord]:
    """Grow the document to each target size, then measure local and remote
    op cost with the concurrency window held at ``c_cap``."""
    if c_cap > 10:
        raise ConfigError("concurrency window capped at 10")
    records = []
    for size in doc_sizes:
        rng = random.Random(seed + size)
        a, b = _grow(engine, size, seed=seed, strategy=strategy)
        local_us, _ = _measure_locals(a, 30)

        one_works = []
        one_times = []
        for _ in range(windows):
            dt, work = _one_sided_window(a, b, c_cap, rng)
            one_times.append(dt)
            one_works.append(work)

        two_works = []
        two_times = []
        for _ in range(windows):
            times, works = _two_sided_window(a, b, c_cap, rng)
            two_times.extend(times)
            two_works.extend(works)

        records.append(
            BenchRecord(
                engine=engine,
                workload="scaling one-sided",
                doc_size=len(a.text()),
                concurrency=c_cap,
                deletions=0,
                space_proxy=_space_proxy(a),
                local_time_us=local_us,
                remote_time_us=statistics.median(one_times) * 1e6,
                work_per_remote_max=max(one_works),
                work_per_remote_mean=statistics.mean(one_works),
            )
        )
        records.append(
            BenchRecord(
                engine=engine,
                workload="scaling two-sided",
                doc_size=len(a.text()),
                concurrency=c_cap,
                deletions=0,
                space_proxy=_space_proxy(a),
                local_time_us=local_us,
                remote_time_us=statistics.median(two_times) * 1e6,
                work_per_remote_max=max(two_works),
                work_per_remote_mean=statistics.mean(two_works),
            )
        )
    return records
