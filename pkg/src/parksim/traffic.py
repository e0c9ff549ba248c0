"""Parking occupancy processes and the analytic packet-count model.

Occupied and vacant periods are Weibull distributed with separate scale and
shape parameters. Status reports are generated either on every occupancy
toggle (event driven) or on a fixed-period timer (periodic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaincinv

from .engine import RandomStream


class CountModelError(Exception):
    """Raised when the count probability series fails to converge."""


@dataclass(frozen=True)
class WeibullParams:
    """Scale and shape of one Weibull duration distribution."""

    scale: float
    shape: float

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.shape <= 0:
            raise ValueError(f"shape must be positive, got {self.shape}")

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    @classmethod
    def from_mean(cls, mean: float, shape: float) -> "WeibullParams":
        return cls(mean / math.gamma(1.0 + 1.0 / shape), shape)


def occupancy_rate(occupied: WeibullParams, vacant: WeibullParams) -> float:
    """Long-run fraction of time a space is occupied."""
    return occupied.mean / (occupied.mean + vacant.mean)


def expected_packet_count(spaces: list[tuple[WeibullParams, WeibullParams]], dt: float) -> float:
    """Expected number of status-change packets over a window of dt seconds.

    Each space contributes two changes per mean occupied-plus-vacant cycle.
    """
    total = 0.0
    for occupied, vacant in spaces:
        total += 2.0 * dt / (occupied.mean + vacant.mean)
    return total


def sample_weibull(stream: RandomStream, params: WeibullParams) -> float:
    return stream.weibull(params.shape, params.scale)


def equilibrium_residual(stream: RandomStream, params: WeibullParams) -> float:
    """Remaining duration seen by a uniformly random observer of a renewal process.

    The inverse CDF of the stationary residual-life distribution of a Weibull
    reduces to a regularized incomplete-gamma inversion.
    """
    u = stream.uniform()
    k = params.shape
    return params.scale * float(gammaincinv(1.0 / k, u)) ** (1.0 / k)


class ParkingProcess:
    """Alternating occupied/vacant renewal process for one parking space.

    The initial state is Bernoulli with the long-run occupancy rate. The
    first period is a fresh full draw by default; with ``equilibrium=True``
    it is a stationary residual instead, removing the start-up bias.
    """

    def __init__(
        self,
        occupied: WeibullParams,
        vacant: WeibullParams,
        stream: RandomStream,
        init_stream: RandomStream,
        equilibrium: bool = False,
    ) -> None:
        self.occupied_params = occupied
        self.vacant_params = vacant
        self._stream = stream
        self.is_occupied = init_stream.uniform() < occupancy_rate(occupied, vacant)
        params = occupied if self.is_occupied else vacant
        if equilibrium:
            first = equilibrium_residual(init_stream, params)
        else:
            first = sample_weibull(init_stream, params)
        self.next_change = first

    def toggle(self) -> float:
        """Flip the occupancy state and return the time of the following change."""
        self.is_occupied = not self.is_occupied
        params = self.occupied_params if self.is_occupied else self.vacant_params
        self.next_change += sample_weibull(self._stream, params)
        return self.next_change


def periodic_next_emit(now: float, phase: float, period: float) -> float:
    """First report instant strictly after ``now`` for a periodic sensor."""
    if period <= 0:
        raise ValueError("period must be positive")
    if now < phase:
        return phase
    m = math.floor((now - phase) / period) + 1
    t = phase + m * period
    while t <= now:  # guard against float rounding on exact multiples
        m += 1
        t = phase + m * period
    return t


class WeibullCountModel:
    """Probability of k status changes of one phase in a window.

    Models the number of completed Weibull renewals in (0, t] for
    interarrival shape ``shape``, evaluated by an alternating series with a
    triangular coefficient recursion. Coefficients are cached per instance.
    """

    MAX_TERMS = 500
    TERM_TOL = 1e-12

    def __init__(self, shape: float) -> None:
        if shape <= 0:
            raise ValueError("shape must be positive")
        self.shape = shape
        self._delta: dict[tuple[int, int], float] = {}

    def delta(self, j: int, k: int) -> float:
        """Series coefficient for term j of the k-change probability."""
        if k == 0:
            return math.exp(math.lgamma(self.shape * j + 1.0) - math.lgamma(j + 1.0))
        if j < k:
            raise ValueError(f"delta needs j >= k, got j={j} k={k}")
        key = (j, k)
        cached = self._delta.get(key)
        if cached is not None:
            return cached
        v = self.shape
        total = 0.0
        for m in range(k - 1, j):
            total += self.delta(m, k - 1) * math.exp(
                math.lgamma(v * (j - m) + 1.0) - math.lgamma(j - m + 1.0)
            )
        self._delta[key] = total
        return total

    def pmf(self, k: int, t: float, scale: float) -> float:
        """P(exactly k changes in (0, t]) for interarrival scale ``scale``."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if t < 0 or scale <= 0:
            raise ValueError("need t >= 0 and scale > 0")
        if t == 0:
            return 1.0 if k == 0 else 0.0
        v = self.shape
        log_x = math.log(t / scale)
        total = 0.0
        j = k
        while True:
            d = self.delta(j, k)
            if d > 0:
                term = math.exp(v * j * log_x - math.lgamma(v * j + 1.0) + math.log(d))
            else:
                term = 0.0
            if (j + k) % 2:
                total -= term
            else:
                total += term
            if j > k + 4 and term < self.TERM_TOL:
                break
            j += 1
            if j - k > self.MAX_TERMS:
                raise CountModelError(
                    f"count series did not converge in {self.MAX_TERMS} terms "
                    f"(k={k}, t/scale={t / scale:.3g}, shape={v})"
                )
        return min(1.0, max(0.0, total))


def count_probability(k: int, t: float, scale: float, shape: float) -> float:
    """Convenience wrapper building a fresh count model per call."""
    return WeibullCountModel(shape).pmf(k, t, scale)
