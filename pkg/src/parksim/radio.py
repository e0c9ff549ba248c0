"""Radio link budget, Rayleigh fading, frame capture and energy accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .engine import RandomStream


@dataclass(frozen=True)
class RadioParams:
    """Transceiver characteristics of the 250 kbps low-power radio.

    Powers are drawn while the radio sits in the matching state; the switch
    energy is charged once per transition between off and any active state.
    """

    tpo_dbm: float = 3.0
    sensitivity_dbm: float = -85.0
    bitrate_bps: float = 250_000.0
    wavelength_m: float = 0.125
    power_tx_w: float = 0.0657
    power_rx_w: float = 0.0565
    power_cs_w: float = 0.0558
    power_off_w: float = 30e-6
    switch_energy_j: float = 0.16425e-3
    capture_db: float = 6.0
    corner_loss_db: float = 20.0
    payload_bytes: int = 84
    beacon_bytes: int = 12
    turnaround_s: float = 192e-6

    def airtime(self, nbytes: int) -> float:
        """Seconds on air for a frame of ``nbytes`` bytes."""
        return nbytes * 8.0 / self.bitrate_bps

    @property
    def data_airtime(self) -> float:
        return self.airtime(self.payload_bytes)

    @property
    def beacon_airtime(self) -> float:
        return self.airtime(self.beacon_bytes)


def path_loss_db(distance_m: float, wavelength_m: float, corners: int = 0,
                 corner_loss_db: float = 20.0) -> float:
    """Free-space loss plus a fixed penalty for each street corner crossed."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m / wavelength_m) + corners * corner_loss_db


def link_margin_db(params: RadioParams, tpo_dbm: float, distance_m: float,
                   corners: int = 0) -> float:
    """Mean received power above sensitivity, before fading."""
    loss = path_loss_db(distance_m, params.wavelength_m, corners, params.corner_loss_db)
    return tpo_dbm - loss - params.sensitivity_dbm


def rayleigh_gain_db(stream: RandomStream) -> float:
    """Per-frame power gain of a Rayleigh channel, unit mean, in dB."""
    g = stream.exponential()
    if g <= 0.0:
        return -400.0
    return 10.0 * math.log10(g)


ACTIVE_STATES = ("tx", "rx", "cs")


class EnergyLedger:
    """Time-in-state energy bookkeeping for one radio.

    The off state is not accrued explicitly; ``finalize`` assigns all
    unaccounted time to it so state durations always sum to elapsed time.
    """

    def __init__(self, params: RadioParams) -> None:
        self.params = params
        self.seconds = {"tx": 0.0, "rx": 0.0, "cs": 0.0, "off": 0.0}
        self.switches = 0
        self._finalized = False

    def accrue(self, state: str, seconds: float) -> None:
        if seconds < 0:
            raise ValueError(f"negative accrual of {seconds} s in state {state!r}")
        self.seconds[state] += seconds

    def switch(self, from_state: str, to_state: str) -> None:
        """Charge a transition; only off to active (or back) costs energy."""
        crossed = (from_state == "off") != (to_state == "off")
        if crossed:
            self.switches += 1

    def wake(self) -> None:
        self.switch("off", "rx")

    def sleep(self) -> None:
        self.switch("rx", "off")

    def finalize(self, elapsed: float) -> None:
        active = self.seconds["tx"] + self.seconds["rx"] + self.seconds["cs"] + self.seconds["off"]
        residual = elapsed - active
        if residual < -1e-6:
            raise ValueError(f"accrued {active:.6f} s exceeds elapsed {elapsed:.6f} s")
        self.seconds["off"] += max(0.0, residual)
        self._finalized = True

    @property
    def joules(self) -> float:
        p = self.params
        return (
            self.seconds["tx"] * p.power_tx_w
            + self.seconds["rx"] * p.power_rx_w
            + self.seconds["cs"] * p.power_cs_w
            + self.seconds["off"] * p.power_off_w
            + self.switches * p.switch_energy_j
        )


DELIVERED = "delivered"
LOST_FADE = "lost-fade"
LOST_COLLISION = "lost-collision"


@dataclass
class Frame:
    start: float
    end: float
    tx_node: int
    rx_node: int
    signal_dbm: float
    kind: str
    max_interference_dbm: float = -1e9


class FrameRegistry:
    """Tracks frames in flight and decides delivery under capture.

    ``mean_power_at(tx, rx)`` must return the faded-free received power of a
    transmitter at an arbitrary receiver; interference uses the path loss
    mean while the wanted signal carries its own per-frame fade.
    """

    def __init__(self, params: RadioParams,
                 mean_power_at: Callable[[int, int], float]) -> None:
        self.params = params
        self.mean_power_at = mean_power_at
        self._active: list[Frame] = []
        self.data_collisions = 0

    def add(self, frame: Frame) -> Frame:
        self._active = [f for f in self._active if f.end > frame.start]
        for other in self._active:
            if other.tx_node == frame.tx_node:
                continue
            if other.start < frame.end and frame.start < other.end:
                # Half duplex: a radio transmitting during a frame's airtime
                # cannot also decode it, whatever the geometry says. Keeps
                # relay nodes honest when their two roles overlap in time.
                if other.tx_node == frame.rx_node:
                    frame.max_interference_dbm = math.inf
                else:
                    frame.max_interference_dbm = max(
                        frame.max_interference_dbm,
                        self.mean_power_at(other.tx_node, frame.rx_node))
                if frame.tx_node == other.rx_node:
                    other.max_interference_dbm = math.inf
                else:
                    other.max_interference_dbm = max(
                        other.max_interference_dbm,
                        self.mean_power_at(frame.tx_node, other.rx_node))
        self._active.append(frame)
        return frame

    def resolve(self, frame: Frame) -> str:
        """Outcome of a frame at its end time."""
        if frame.signal_dbm < self.params.sensitivity_dbm:
            return LOST_FADE
        if frame.signal_dbm - frame.max_interference_dbm < self.params.capture_db:
            if frame.kind == "data":
                self.data_collisions += 1
            return LOST_COLLISION
        return DELIVERED
