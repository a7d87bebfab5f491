"""The relaxed concurrent queue itself, plus a deterministic replay engine.

MultiQueue is the operational data structure: n binary heaps, random heap on
insert, best-of-c over published tops on delete.  It exists to demonstrate
the mechanism and to check conservation under threads; the quantitative
rank-error claims are measured by sequential_replay, which runs the
deletion-only workload deterministically against exact ranks.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .analytics import expected_ranks, initial_expected_ranks, stationary_params
from .choice import CParameter, best_of_c, sample_count
from .errors import ParameterError, QueueDrainedError
from .sampling import RandomSource


class Element(NamedTuple):
    key: float
    uid: int


_DELETE_ATTEMPTS = 8


class MultiQueue:
    """n locked heaps with published tops and best-of-c deletion."""

    def __init__(self, n: int, c: float) -> None:
        if n < 2:
            raise ParameterError("need at least 2 queues")
        self._c = CParameter.of(c)
        self._n = n
        self._queues: list[list[Element]] = [[] for _ in range(n)]
        self._locks = [threading.Lock() for _ in range(n)]
        self._tops: list[Element | None] = [None] * n
        self._uid = itertools.count()

    @property
    def n(self) -> int:
        return self._n

    @property
    def c(self) -> float:
        return self._c.value

    def insert(self, key: float, rng: RandomSource) -> Element:
        elem = Element(key=float(key), uid=next(self._uid))
        q = rng.randbelow(self._n)
        with self._locks[q]:
            heapq.heappush(self._queues[q], elem)
            self._tops[q] = self._queues[q][0]
        return elem

    def delete_min(self, rng: RandomSource) -> Element:
        """Pop the smallest top among c sampled queues.

        The sampled tops are read without locks; the winner is locked and
        re-validated, and a changed top sends the whole attempt back for a
        fresh sample.  After _DELETE_ATTEMPTS contended attempts the slow
        path locks every queue in index order and pops the global minimum.
        """
        for _ in range(_DELETE_ATTEMPTS):
            count = sample_count(self._c, rng)
            best_q = -1
            best: Element | None = None
            for _ in range(count):
                q = rng.randbelow(self._n)
                top = self._tops[q]
                if top is not None and (best is None or top < best):
                    best_q, best = q, top
            if best is None:
                continue
            with self._locks[best_q]:
                heap = self._queues[best_q]
                if heap and heap[0] == best:
                    elem = heapq.heappop(heap)
                    self._tops[best_q] = heap[0] if heap else None
                    return elem
        return self._delete_min_locked()

    def _delete_min_locked(self) -> Element:
        for lock in self._locks:
            lock.acquire()
        try:
            best_q = -1
            best: Element | None = None
            for q, heap in enumerate(self._queues):
                if heap and (best is None or heap[0] < best):
                    best_q, best = q, heap[0]
            if best is None:
                raise QueueDrainedError("all queues are empty")
            elem = heapq.heappop(self._queues[best_q])
            self._tops[best_q] = self._queues[best_q][0] if self._queues[best_q] else None
            return elem
        finally:
            for lock in self._locks:
                lock.release()

    def drain(self) -> list[Element]:
        """Pop everything, single-threaded use only."""
        out: list[Element] = []
        for q, heap in enumerate(self._queues):
            while heap:
                out.append(heapq.heappop(heap))
            self._tops[q] = None
        return out

    def __len__(self) -> int:
        return sum(len(heap) for heap in self._queues)


@dataclass(frozen=True)
class StressReport:
    n: int
    c: float
    threads: int
    inserted: int
    deleted: int
    drained: int
    duplicate_deletes: int
    lost: int
    wall_seconds: float

    @property
    def conserved(self) -> bool:
        return self.duplicate_deletes == 0 and self.lost == 0

    @property
    def ops_per_second(self) -> float:
        total = self.inserted + self.deleted
        return total / self.wall_seconds if self.wall_seconds > 0 else float("inf")


def stress_test(
    n: int,
    c: float,
    *,
    threads: int = 8,
    ops_per_thread: int = 5_000,
    insert_ratio: float = 0.5,
    prefill: int = 1_000,
    seed: int = 0,
) -> StressReport:
    """Hammer one MultiQueue from several threads and account for every uid."""
    if threads < 1 or ops_per_thread < 1:
        raise ParameterError("threads and ops_per_thread must be positive")
    if not 0.0 <= insert_ratio <= 1.0:
        raise ParameterError("insert_ratio must lie in [0, 1]")
    mq = MultiQueue(n, c)
    root = RandomSource(seed)
    setup = root.split("prefill")
    inserted: list[list[int]] = [[] for _ in range(threads + 1)]
    deleted: list[list[int]] = [[] for _ in range(threads)]
    for _ in range(prefill):
        inserted[threads].append(mq.insert(setup.random(), setup).uid)

    def worker(k: int) -> None:
        rng = root.split(f"worker-{k}")
        for _ in range(ops_per_thread):
            if rng.random() < insert_ratio:
                inserted[k].append(mq.insert(rng.random(), rng).uid)
            else:
                try:
                    deleted[k].append(mq.delete_min(rng).uid)
                except QueueDrainedError:
                    pass

    pool = [threading.Thread(target=worker, args=(k,)) for k in range(threads)]
    start = time.perf_counter()
    for th in pool:
        th.start()
    for th in pool:
        th.join()
    wall = time.perf_counter() - start

    drained = [e.uid for e in mq.drain()]
    all_inserted = set().union(*[set(lst) for lst in inserted])
    all_deleted = list(itertools.chain.from_iterable(deleted))
    duplicate_deletes = len(all_deleted) - len(set(all_deleted))
    accounted = set(all_deleted) | set(drained)
    lost = len(all_inserted - accounted) + len(accounted - all_inserted)
    return StressReport(
        n=n,
        c=c,
        threads=threads,
        inserted=len(all_inserted),
        deleted=len(all_deleted),
        drained=len(drained),
        duplicate_deletes=duplicate_deletes,
        lost=lost,
        wall_seconds=wall,
    )


class _Fenwick:
    """Presence counts over keys 1..m with prefix-sum queries."""

    def __init__(self, m: int) -> None:
        idx = np.arange(m + 1, dtype=np.int64)
        self._tree = (idx & -idx).astype(np.int32)  # all m keys present
        self._tree[0] = 0
        self._m = m

    def remove(self, key: int) -> None:
        i = key
        while i <= self._m:
            self._tree[i] -= 1
            i += i & -i

    def rank(self, key: int) -> int:
        """Number of present keys <= key."""
        s = 0
        i = key
        tree = self._tree
        while i > 0:
            s += int(tree[i])
            i -= i & -i
        return s


@dataclass(frozen=True)
class ReplayCheckpoint:
    step: int
    observed_ranks: tuple[int, ...]


@dataclass(frozen=True)
class ReplayReport:
    n: int
    c: float
    initial: int
    deletions: int
    burnin: int
    mean_rank_error: float
    max_rank_error: int
    rank_error_hist: dict[int, int]
    checkpoints: tuple[ReplayCheckpoint, ...]
    expected_ranks: tuple[float, ...]
    expected_initial_ranks: tuple[float, ...]
    per_queue_ascending: bool


def sequential_replay(
    n: int,
    c: float,
    initial: int,
    deletions: int,
    rng: RandomSource,
    *,
    burnin: int = 0,
    checkpoints: Iterable[int] = (),
) -> ReplayReport:
    """Deletion-only MultiQueue workload with exact ranks, deterministically.

    Keys 1..initial are spread uniformly over n queues; each queue pops in
    ascending key order, so sorted arrays with cursors reproduce the heap
    pop sequence exactly.  A Fenwick tree over the key universe gives the
    exact rank of every deleted key.  Keeping initial >= 4 * deletions
    leaves every queue far from empty, so the long-run law is not distorted
    by drained queues.
    """
    if n < 2:
        raise ParameterError("need at least 2 queues")
    cpar = CParameter.of(c)
    if initial < 1 or deletions < 1:
        raise ParameterError("initial and deletions must be positive")
    if initial < 4 * deletions:
        raise ParameterError("initial must be at least 4x deletions")
    if not 0 <= burnin < deletions:
        raise ParameterError("burnin must lie in [0, deletions)")
    marks = sorted({int(s) for s in checkpoints})
    if any(s < 0 or s > deletions for s in marks):
        raise ParameterError("checkpoints must lie within [0, deletions]")

    assign = rng.randbelow_array(n, initial)
    queues = [(np.flatnonzero(assign == q) + 1).astype(np.int32) for q in range(n)]
    del assign
    cursors = [0] * n
    tree = _Fenwick(initial)

    dist = best_of_c(cpar.value, n)

    def front(q: int) -> int:
        cur = cursors[q]
        return int(queues[q][cur]) if cur < len(queues[q]) else 0

    def snapshot(step: int) -> ReplayCheckpoint:
        fronts = sorted(f for f in (front(q) for q in range(n)) if f > 0)
        return ReplayCheckpoint(step=step, observed_ranks=tuple(tree.rank(f) for f in fronts))

    hist: dict[int, int] = {}
    total = 0
    worst = 0
    taken: list[ReplayCheckpoint] = []
    mark_idx = 0
    last_popped = [0] * n
    ascending = True
    for step in range(deletions):
        if mark_idx < len(marks) and marks[mark_idx] == step:
            taken.append(snapshot(step))
            mark_idx += 1
        best_q = -1
        best_key = 0
        for attempt in range(64):
            count = sample_count(cpar, rng)
            for _ in range(count):
                q = rng.randbelow(n)
                key = front(q)
                if key > 0 and (best_key == 0 or key < best_key):
                    best_q, best_key = q, key
            if best_key > 0:
                break
        else:
            raise QueueDrainedError("every sampled queue was empty")
        err = tree.rank(best_key) - 1
        tree.remove(best_key)
        cursors[best_q] += 1
        if best_key <= last_popped[best_q]:
            ascending = False
        last_popped[best_q] = best_key
        if step >= burnin:
            total += err
            hist[err] = hist.get(err, 0) + 1
            if err > worst:
                worst = err
    if mark_idx < len(marks) and marks[mark_idx] == deletions:
        taken.append(snapshot(deletions))

    measured = deletions - burnin
    return ReplayReport(
        n=n,
        c=cpar.value,
        initial=initial,
        deletions=deletions,
        burnin=burnin,
        mean_rank_error=total / measured,
        max_rank_error=worst,
        rank_error_hist=hist,
        checkpoints=tuple(taken),
        expected_ranks=expected_ranks(stationary_params(dist)),
        expected_initial_ranks=initial_expected_ranks(n),
        per_queue_ascending=ascending,
    )
