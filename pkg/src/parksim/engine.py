"""Deterministic event queue, virtual clock and seeded random substreams."""

from __future__ import annotations

import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


class SimulationError(Exception):
    """Raised when the simulator is driven outside its contract."""


@dataclass(order=True)
class Event:
    fire_at: float
    seq: int
    kind: str = field(compare=False)
    fn: Callable[[], None] = field(compare=False)
    cancelled: bool = field(default=False, compare=False)


class Simulator:
    """Virtual-time event loop.

    Events fire in (fire_at, insertion seq) order, so simultaneous events
    run in the order they were scheduled and replays are bit-identical.
    """

    def __init__(self) -> None:
        self.now = 0.0
        self._heap: list[Event] = []
        self._seq = 0
        self.processed = 0

    def schedule(self, fire_at: float, kind: str, fn: Callable[[], None]) -> Event:
        if fire_at < self.now:
            raise SimulationError(f"cannot schedule {kind!r} at {fire_at} before now={self.now}")
        ev = Event(fire_at, self._seq, kind, fn)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def cancel(self, ev: Event) -> None:
        # Lazy removal; the heap entry is skipped when popped.
        ev.cancelled = True

    def run_until(self, t_end: float) -> None:
        heap = self._heap
        while heap and heap[0].fire_at <= t_end:
            ev = heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.now = ev.fire_at
            self.processed += 1
            ev.fn()
        self.now = t_end


_PURPOSES = ("traffic", "init", "phase", "fading", "backoff")


class RandomStream:
    """Buffered draws from one independent generator substream."""

    _CHUNK = 512

    def __init__(self, seed_seq: np.random.SeedSequence) -> None:
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._uni: np.ndarray | None = None
        self._exp: np.ndarray | None = None
        self._wei: dict[float, tuple[np.ndarray, int]] = {}
        self._iu = 0
        self._ie = 0

    def uniform(self) -> float:
        if self._uni is None or self._iu >= len(self._uni):
            self._uni = self._gen.random(self._CHUNK)
            self._iu = 0
        v = self._uni[self._iu]
        self._iu += 1
        return float(v)

    def exponential(self) -> float:
        if self._exp is None or self._ie >= len(self._exp):
            self._exp = self._gen.standard_exponential(self._CHUNK)
            self._ie = 0
        v = self._exp[self._ie]
        self._ie += 1
        return float(v)

    def weibull(self, shape: float, scale: float) -> float:
        buf = self._wei.get(shape)
        if buf is None or buf[1] >= len(buf[0]):
            self._wei[shape] = (self._gen.weibull(shape, self._CHUNK), 0)
            buf = self._wei[shape]
        arr, i = buf
        self._wei[shape] = (arr, i + 1)
        return float(arr[i]) * scale


class RngHub:
    """Hands out independent substreams keyed by (batch, node, purpose).

    Every purpose of every node draws from its own substream, so adding a
    node to a scenario never perturbs the draws of existing nodes.
    """

    def __init__(self, base_seed: int, batch: int) -> None:
        self.base_seed = base_seed
        self.batch = batch
        self._streams: dict[tuple[int, int], RandomStream] = {}

    def stream(self, node_id: int, purpose: str) -> RandomStream:
        code = _PURPOSES.index(purpose)
        key = (node_id, code)
        st = self._streams.get(key)
        if st is None:
            st = RandomStream(np.random.SeedSequence((self.base_seed, self.batch, node_id, code)))
            self._streams[key] = st
        return st


@dataclass
class BatchStats:
    """Per-metric mean and deviation across independent batches."""

    per_batch: list[dict[str, float]]

    def values(self, key: str) -> np.ndarray:
        return np.array([b[key] for b in self.per_batch], dtype=float)

    def mean(self, key: str) -> float:
        return float(np.mean(self.values(key)))

    def std(self, key: str) -> float:
        vals = self.values(key)
        if len(vals) < 2:
            return 0.0
        return float(np.std(vals, ddof=1))


def run_batches(
    run_one: Callable[[int], dict[str, Any]],
    batches: int = 20,
    parallel: int = 1,
) -> BatchStats:
    """Run ``batches`` independent replications and collect their metrics.

    ``run_one(batch_index)`` must be deterministic given its index; results
    are therefore identical whether batches execute serially or in a pool.
    """
    if batches < 1:
        raise SimulationError("need at least one batch")
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(run_one, range(batches)))
    else:
        results = [run_one(i) for i in range(batches)]
    return BatchStats(per_batch=results)
