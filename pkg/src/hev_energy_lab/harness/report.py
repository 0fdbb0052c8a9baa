"""Metrics reports: assembly from a finished simulation, CSV/JSON export and schema."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from hev_energy_lab.constants import ReportFormat, StrategyTag
from hev_energy_lab.ems.accounting import soc_corrected_fuel
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.harness.state import MetricsReport, TraceRow
from hev_energy_lab.rlagent.trainer import engine_power_fluctuation
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)

REPORT_TRACE_COLUMNS = tuple(TraceRow.model_fields)


def count_start_stops(p_ice: np.ndarray) -> int:
    """Off-to-on edges of the engine power trace; the run starts with the engine off."""

    on = np.asarray(p_ice, dtype=np.float64) > 0.0
    previous = np.concatenate(([False], on[:-1]))
    return int(np.sum(on & ~previous))


def build_report(
    sim: Simulation,
    strategy: StrategyTag,
    ctx: EmsContext,
    seed: int,
    terminated: bool = False,
) -> MetricsReport:
    state = sim.state
    frame = sim.trace_frame()
    distance_km = sim.distance_total / 1e3
    fuel_l = state.fuel_l
    corrected = soc_corrected_fuel(fuel_l, state.battery.soc, sim.soc_init, state.battery, ctx, sim.plant)
    trace = [
        TraceRow(
            t=row.t,
            v=row.v,
            soc=row.soc,
            p_ice=row.p_ice,
            p_bat=row.p_bat,
            ef=row.ef,
            T_cool=row.T_cool,
            fuel_l=row.fuel_l,
            engine_on=bool(row.engine_on),
        )
        for row in frame.itertuples(index=False)
    ]
    return MetricsReport(
        strategy=StrategyTag(strategy),
        cycle=sim.cycle.name,
        seed=seed,
        soc_init=sim.soc_init,
        final_soc_pct=100.0 * state.battery.soc,
        fuel_l=fuel_l,
        distance_km=distance_km,
        fuel_economy=fuel_l * 100.0 / distance_km if distance_km > 0.0 else 0.0,
        corrected_fuel_l=corrected,
        corrected_fuel_economy=corrected * 100.0 / distance_km if distance_km > 0.0 else 0.0,
        start_stop_count=state.start_stop_count,
        fluctuation_pct=engine_power_fluctuation(frame["p_ice"].to_numpy()) if len(frame) else 0.0,
        terminated=terminated,
        trace=trace,
    )


def fuel_savings_pct(report: MetricsReport, reference: MetricsReport) -> float:
    """Corrected-economy saving relative to ``reference`` (the rule-based run)."""

    if reference.corrected_fuel_economy == 0.0:
        return 0.0
    return 100.0 * (reference.corrected_fuel_economy - report.corrected_fuel_economy) / reference.corrected_fuel_economy


def trace_frame(report: MetricsReport) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in report.trace], columns=list(REPORT_TRACE_COLUMNS))


def _summary_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.summary.json")


def export_report(report: MetricsReport, path: str | Path, fmt: ReportFormat | str = ReportFormat.JSON) -> Path:
    """JSON: the whole report. CSV: one trace row per sample, summary in a sibling JSON file."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.JSON:
        target.write_text(report.model_dump_json(indent=1), encoding="utf-8")
    else:
        trace_frame(report).to_csv(target, index=False)
        _summary_path(target).write_text(json.dumps(report.summary(), indent=1), encoding="utf-8")
    LOGGER.info("Wrote %s report for %s/%s to %s", fmt.value, report.strategy.value, report.cycle, target)
    return target


def read_report(path: str | Path) -> MetricsReport:
    source = Path(path)
    if source.suffix.lower() == ".json":
        return MetricsReport.model_validate_json(source.read_text(encoding="utf-8"))
    summary: dict[str, Any] = json.loads(_summary_path(source).read_text(encoding="utf-8"))
    frame = pd.read_csv(source)
    summary["trace"] = frame.to_dict(orient="records")
    return MetricsReport.model_validate(summary)


def report_schema() -> dict[str, Any]:
    return MetricsReport.model_json_schema()


def write_schema(path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(report_schema(), indent=1), encoding="utf-8")
    LOGGER.info("Wrote report schema to %s", target)
    return target


def operating_points(sim: Simulation) -> pd.DataFrame:
    """Engine speed, torque, power and BSFC for every engine-on step."""

    frame = sim.trace_frame()
    on = frame[frame["engine_on"] > 0.0]
    if on.empty:
        return pd.DataFrame(columns=["t", "omega", "torque", "p_ice", "bsfc"])
    bsfc, _ = sim.plant.bsfc.lookup(on["omega"].to_numpy(), on["torque"].to_numpy())
    return pd.DataFrame(
        {
            "t": on["t"].to_numpy(),
            "omega": on["omega"].to_numpy(),
            "torque": on["torque"].to_numpy(),
            "p_ice": on["p_ice"].to_numpy(),
            "bsfc": np.asarray(bsfc, dtype=np.float64),
        }
    )


def export_operating_points(sim: Simulation, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    points = operating_points(sim)
    points.to_csv(target, index=False)
    LOGGER.info("Wrote %d engine operating points to %s", len(points), target)
    return target
