"""In-process loopback rig: controller and plant exchange quantized supervisory frames."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from hev_energy_lab.ems.controllers import Controller, Decision, run_controller
from hev_energy_lab.errors import SimulationError
from hev_energy_lab.simulation import Simulation, Snapshot

LOGGER = logging.getLogger(__name__)

FRAME_PERIOD = 1.0


@dataclass(frozen=True)
class SignalSpec:
    """Unsigned fixed-point channel: ``raw = round((value - minimum) / resolution)``."""

    name: str
    minimum: float
    maximum: float
    bits: int = 16

    @property
    def resolution(self) -> float:
        return (self.maximum - self.minimum) / (2**self.bits - 1)

    def encode(self, value: float) -> int:
        clipped = min(max(value, self.minimum), self.maximum)
        return int(round((clipped - self.minimum) / self.resolution))

    def decode(self, raw: int) -> float:
        return self.minimum + raw * self.resolution

    def quantize(self, value: float) -> float:
        return self.decode(self.encode(value))


PLANT_FRAME = {
    "v": SignalSpec("v", 0.0, 70.0),
    "a": SignalSpec("a", -5.0, 5.0),
    "p_dem": SignalSpec("p_dem", -150.0e3, 150.0e3),
    "p_avg": SignalSpec("p_avg", -150.0e3, 150.0e3),
    "p_ice": SignalSpec("p_ice", 0.0, 150.0e3),
    "soc": SignalSpec("soc", 0.0, 1.0),
    "d_rem": SignalSpec("d_rem", 0.0, 1.0),
}
CONTROLLER_FRAME = {
    "p_ice": SignalSpec("p_ice", 0.0, 150.0e3),
    "p_bat": SignalSpec("p_bat", -100.0e3, 100.0e3),
    "ef": SignalSpec("ef", 0.0, 4.0),
}


class _ReceivedView:
    """What the controller sees: the plant frame as decoded on the controller side."""

    def __init__(self, sim: Simulation) -> None:
        self._sim = sim
        self.cycle = sim.cycle
        self.plant = sim.plant
        self.horizon = sim.horizon
        self.index = sim.index
        snap = sim.snapshot()
        decoded = {name: spec.quantize(getattr(snap, name)) for name, spec in PLANT_FRAME.items()}
        self._snapshot = replace(snap, **decoded)
        self.state = replace(sim.state, battery=replace(sim.state.battery, soc=decoded["soc"]))

    def snapshot(self) -> Snapshot:
        return self._snapshot


class LoopbackController:
    """Wraps a controller; decisions are refreshed once per frame and sent quantized."""

    def __init__(self, inner: Controller, frame_period: float = FRAME_PERIOD) -> None:
        self.inner = inner
        self.frame_period = frame_period
        self.frames = 0
        self._held: Decision | None = None
        self._next_frame = 0.0

    def reset(self) -> None:
        self.inner.reset()
        self.frames = 0
        self._held = None
        self._next_frame = 0.0

    def decide(self, sim: Simulation) -> Decision:
        t = float(sim.cycle.time[sim.index])
        if self._held is None or t + 1e-9 >= self._next_frame:
            decision = self.inner.decide(_ReceivedView(sim))
            self._held = Decision(
                p_ice=CONTROLLER_FRAME["p_ice"].quantize(decision.p_ice),
                p_bat=CONTROLLER_FRAME["p_bat"].quantize(decision.p_bat),
                # no EF channel traffic for strategies without one
                ef=CONTROLLER_FRAME["ef"].quantize(decision.ef) if np.isfinite(decision.ef) else decision.ef,
            )
            self.frames += 1
            self._next_frame = t + self.frame_period
        return self._held


@dataclass(frozen=True)
class LoopbackReport:
    frames: int
    reference_fuel_l: float
    loopback_fuel_l: float
    reference_final_soc: float
    loopback_final_soc: float
    deviations: pd.DataFrame

    @property
    def fuel_deviation_pct(self) -> float:
        if self.reference_fuel_l == 0.0:
            return 0.0
        return 100.0 * (self.loopback_fuel_l - self.reference_fuel_l) / self.reference_fuel_l


def hil_loopback(
    reference: Simulation,
    rig: Simulation,
    controller: Controller,
    frame_period: float = FRAME_PERIOD,
) -> LoopbackReport:
    """Run the controller directly and through the rig, then compare the traces channel by channel."""

    run_controller(reference, controller)
    loop = LoopbackController(controller, frame_period)
    try:
        run_controller(rig, loop)
    except SimulationError:
        LOGGER.exception("Loopback run aborted after %d frames", loop.frames)
        raise
    ref_frame = reference.trace_frame()
    rig_frame = rig.trace_frame()
    rows = []
    for channel in ("soc", "p_ice", "p_bat", "fuel_l", "T_cool"):
        delta = (rig_frame[channel] - ref_frame[channel]).abs()
        rows.append({"channel": channel, "max_abs": float(delta.max()), "mean_abs": float(delta.mean())})
    report = LoopbackReport(
        frames=loop.frames,
        reference_fuel_l=reference.state.fuel_l,
        loopback_fuel_l=rig.state.fuel_l,
        reference_final_soc=reference.state.battery.soc,
        loopback_final_soc=rig.state.battery.soc,
        deviations=pd.DataFrame(rows, columns=["channel", "max_abs", "mean_abs"]),
    )
    LOGGER.info(
        "Loopback on %s: %d frames, fuel %.4f L vs %.4f L (%.3f%%)",
        reference.cycle.name,
        report.frames,
        report.loopback_fuel_l,
        report.reference_fuel_l,
        report.fuel_deviation_pct,
    )
    return report
