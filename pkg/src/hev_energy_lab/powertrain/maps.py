"""Engine, machine and battery characteristic maps.

Maps are either synthesized from closed-form shapes or loaded from CSV
assets (``omega_radps,torque_nm,value`` grids and ``soc,u_oc_v,r_ohm``
battery curves) so measured data can replace the synthetic defaults.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator, interp1d

from hev_energy_lab.constants import ENGINE_MAX_POWER, FUEL_LHV
from hev_energy_lab.errors import DomainError, SaturationError

LOGGER = logging.getLogger(__name__)

RPM_TO_RADPS = 2.0 * np.pi / 60.0
GRID_COLUMNS = ["omega_radps", "torque_nm", "value"]
BATTERY_COLUMNS = ["soc", "u_oc_v", "r_ohm"]


def bsfc_to_fuel_rate(bsfc_g_per_kwh: float | np.ndarray, power_w: float | np.ndarray) -> float | np.ndarray:
    return bsfc_g_per_kwh * power_w / 3.6e9


def _grid_from_frame(frame: pd.DataFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    missing = set(GRID_COLUMNS) - set(frame.columns)
    if missing:
        raise DomainError(f"map CSV is missing columns: {sorted(missing)}")
    speeds = np.unique(frame["omega_radps"].to_numpy(dtype=np.float64))
    torques = np.unique(frame["torque_nm"].to_numpy(dtype=np.float64))
    pivot = frame.pivot(index="omega_radps", columns="torque_nm", values="value")
    pivot = pivot.reindex(index=speeds, columns=torques)
    if pivot.isna().to_numpy().any():
        raise DomainError("map CSV does not describe a complete rectangular grid")
    return speeds, torques, pivot.to_numpy(dtype=np.float64)


def _grid_to_frame(speeds: np.ndarray, torques: np.ndarray, table: np.ndarray) -> pd.DataFrame:
    omega, torque = np.meshgrid(speeds, torques, indexing="ij")
    return pd.DataFrame({"omega_radps": omega.ravel(), "torque_nm": torque.ravel(), "value": table.ravel()})


@dataclass(frozen=True, eq=False)
class BsfcMap:
    """Brake-specific fuel consumption (g/kWh) on a rectangular (ω, T) grid."""

    speeds: np.ndarray
    torques: np.ndarray
    bsfc: np.ndarray
    max_power: float = ENGINE_MAX_POWER
    max_torque: float = 270.0
    lhv: float = FUEL_LHV
    _interp: RegularGridInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.bsfc.shape != (len(self.speeds), len(self.torques)):
            raise DomainError("BSFC table shape does not match its axes")
        interpolator = RegularGridInterpolator((self.speeds, self.torques), self.bsfc, method="linear")
        object.__setattr__(self, "_interp", interpolator)

    @property
    def idle_speed(self) -> float:
        return float(self.speeds[0])

    @property
    def max_speed(self) -> float:
        return float(self.speeds[-1])

    def torque_limit(self, omega: float | np.ndarray) -> float | np.ndarray:
        safe = np.maximum(omega, 1e-9)
        return np.minimum(self.max_torque, self.max_power / safe)

    @property
    def peak_efficiency(self) -> float:
        powered = self.bsfc[:, self.torques > 0.0]
        return float(3.6e9 / (np.min(powered) * self.lhv))

    def lookup(self, omega: float | np.ndarray, torque: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bilinear BSFC lookup; points outside the envelope are clamped and flagged."""

        omega_arr = np.atleast_1d(np.asarray(omega, dtype=np.float64))
        torque_arr = np.atleast_1d(np.asarray(torque, dtype=np.float64))
        omega_c = np.clip(omega_arr, self.speeds[0], self.speeds[-1])
        torque_c = np.clip(torque_arr, self.torques[0], np.minimum(self.torques[-1], self.torque_limit(omega_c)))
        clamped = (omega_c != omega_arr) | (torque_c != torque_arr)
        values = self._interp(np.column_stack([omega_c, torque_c]))
        return values, clamped

    def to_frame(self) -> pd.DataFrame:
        return _grid_to_frame(self.speeds, self.torques, self.bsfc)

    @classmethod
    def from_csv(cls, path: str | Path) -> "BsfcMap":
        speeds, torques, table = _grid_from_frame(pd.read_csv(path, comment="#"))
        return cls(speeds=speeds, torques=torques, bsfc=table, max_torque=float(torques[-1]))


def synthesize_bsfc_map(
    peak_efficiency: float = 0.38,
    peak_speed_rpm: float = 2500.0,
    peak_torque: float = 180.0,
    max_torque: float = 270.0,
    max_power: float = ENGINE_MAX_POWER,
    lhv: float = FUEL_LHV,
) -> BsfcMap:
    speeds = np.arange(1000.0, 5200.0 + 1e-9, 100.0) * RPM_TO_RADPS
    torques = np.arange(0.0, max_torque + 1e-9, 10.0)
    omega_star = peak_speed_rpm * RPM_TO_RADPS
    omega, torque = np.meshgrid(speeds, torques, indexing="ij")
    speed_shape = 1.0 - 0.35 * np.square((omega - omega_star) / omega_star)
    torque_shape = 1.0 - 0.8 * np.square((torque - peak_torque) / peak_torque)
    efficiency = np.clip(peak_efficiency * speed_shape * torque_shape, 0.05, peak_efficiency)
    bsfc = 3.6e9 / (efficiency * lhv)
    return BsfcMap(speeds=speeds, torques=torques, bsfc=bsfc, max_power=max_power, max_torque=max_torque, lhv=lhv)


@dataclass(frozen=True, eq=False)
class OolTable:
    """Minimum-BSFC operating line sampled on a power grid."""

    powers: np.ndarray
    speeds: np.ndarray
    max_power: float

    def operating_point(self, p_ice: float) -> tuple[float, float]:
        if p_ice > self.max_power * (1.0 + 1e-9):
            raise SaturationError(f"engine power {p_ice:.1f} W above rated {self.max_power:.1f} W")
        if p_ice <= 0.0:
            return 0.0, 0.0
        omega = float(np.interp(p_ice, self.powers, self.speeds))
        return omega, p_ice / omega

    def speeds_for(self, p_ice: np.ndarray) -> np.ndarray:
        return np.interp(np.clip(p_ice, 0.0, self.max_power), self.powers, self.speeds)


def build_ool_table(bsfc_map: BsfcMap, power_step: float = 500.0, scan_points: int = 2000) -> OolTable:
    omega_scan = np.linspace(bsfc_map.idle_speed, bsfc_map.max_speed, scan_points)
    powers = np.arange(0.0, bsfc_map.max_power + 1e-6, power_step)
    best_speeds = np.empty_like(powers)
    best_speeds[0] = bsfc_map.idle_speed
    for k, power in enumerate(powers[1:], start=1):
        torque = power / omega_scan
        feasible = torque <= bsfc_map.torque_limit(omega_scan) + 1e-9
        if not np.any(feasible):
            raise SaturationError(f"no feasible engine speed delivers {power:.0f} W")
        values, _ = bsfc_map.lookup(omega_scan[feasible], torque[feasible])
        best_speeds[k] = omega_scan[feasible][int(np.argmin(values))]
    # Running maximum keeps the line monotone in power.
    best_speeds = np.maximum.accumulate(best_speeds)
    return OolTable(powers=powers, speeds=best_speeds, max_power=bsfc_map.max_power)


def ool_operating_point(p_ice: float, table: OolTable) -> tuple[float, float]:
    """Engine speed and torque on the minimum-BSFC line; zero power means engine off."""

    return table.operating_point(p_ice)


@dataclass(frozen=True, eq=False)
class MachineMap:
    name: str
    speeds: np.ndarray
    torques: np.ndarray
    efficiency: np.ndarray
    max_torque: float
    max_power: float
    _interp: RegularGridInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.efficiency.shape != (len(self.speeds), len(self.torques)):
            raise DomainError(f"{self.name} efficiency table shape does not match its axes")
        if np.any(self.efficiency <= 0.0) or np.any(self.efficiency > 1.0):
            raise DomainError(f"{self.name} efficiency must lie in (0, 1]")
        interpolator = RegularGridInterpolator((self.speeds, self.torques), self.efficiency, method="linear")
        object.__setattr__(self, "_interp", interpolator)

    def torque_limit(self, omega: float) -> float:
        return float(min(self.max_torque, self.max_power / max(abs(omega), 1e-9)))

    def efficiency_at(self, omega: float, torque: float) -> float:
        point = [[np.clip(abs(omega), self.speeds[0], self.speeds[-1]), np.clip(abs(torque), self.torques[0], self.torques[-1])]]
        return float(self._interp(point)[0])

    @classmethod
    def from_csv(cls, path: str | Path, name: str, max_torque: float, max_power: float) -> "MachineMap":
        speeds, torques, table = _grid_from_frame(pd.read_csv(path, comment="#"))
        return cls(name=name, speeds=speeds, torques=torques, efficiency=table, max_torque=max_torque, max_power=max_power)


def synthesize_machine_map(name: str, max_torque: float, max_power: float, max_speed_rpm: float) -> MachineMap:
    max_speed = max_speed_rpm * RPM_TO_RADPS
    speeds = np.linspace(0.0, max_speed, 31)
    torques = np.linspace(0.0, max_torque, 24)
    omega, torque = np.meshgrid(speeds, torques, indexing="ij")
    efficiency = (
        0.94
        - 0.12 * np.square((omega - 0.4 * max_speed) / max_speed)
        - 0.15 * np.square((torque - 0.4 * max_torque) / max_torque)
    )
    return MachineMap(
        name=name,
        speeds=speeds,
        torques=torques,
        efficiency=np.clip(efficiency, 0.70, 0.94),
        max_torque=max_torque,
        max_power=max_power,
    )


@dataclass(frozen=True, eq=False)
class BatteryCurve:
    """Open-circuit voltage and internal resistance versus SOC."""

    soc: np.ndarray
    u_oc: np.ndarray
    r_int: np.ndarray
    nominal_voltage: float = 345.0
    _u_fn: interp1d = field(init=False, repr=False)
    _r_fn: interp1d = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.soc) <= 0.0):
            raise DomainError("battery curve SOC axis must be strictly increasing")
        if np.any(self.u_oc <= 0.0) or np.any(self.r_int <= 0.0):
            raise DomainError("battery voltage and resistance must be positive")
        object.__setattr__(self, "_u_fn", interp1d(self.soc, self.u_oc, kind="linear", fill_value="extrapolate"))
        object.__setattr__(self, "_r_fn", interp1d(self.soc, self.r_int, kind="linear", fill_value="extrapolate"))

    def voltage(self, soc: float) -> float:
        return float(self._u_fn(soc))

    def resistance(self, soc: float) -> float:
        return float(self._r_fn(soc))

    def voltages(self, soc: np.ndarray) -> np.ndarray:
        return np.asarray(self._u_fn(soc), dtype=np.float64)

    def resistances(self, soc: np.ndarray) -> np.ndarray:
        return np.asarray(self._r_fn(soc), dtype=np.float64)

    @classmethod
    def flat(cls, u_oc: float = 345.0, r_int: float = 0.1) -> "BatteryCurve":
        soc = np.array([0.0, 1.0])
        return cls(soc=soc, u_oc=np.full(2, u_oc), r_int=np.full(2, r_int), nominal_voltage=u_oc)

    @classmethod
    def from_csv(cls, path: str | Path, nominal_voltage: float = 345.0) -> "BatteryCurve":
        frame = pd.read_csv(path, comment="#")
        missing = set(BATTERY_COLUMNS) - set(frame.columns)
        if missing:
            raise DomainError(f"battery CSV is missing columns: {sorted(missing)}")
        frame = frame.sort_values("soc")
        return cls(
            soc=frame["soc"].to_numpy(dtype=np.float64),
            u_oc=frame["u_oc_v"].to_numpy(dtype=np.float64),
            r_int=frame["r_ohm"].to_numpy(dtype=np.float64),
            nominal_voltage=nominal_voltage,
        )


def synthesize_battery_curve(nominal_voltage: float = 345.0, slope: float = 40.0, r_int: float = 0.1) -> BatteryCurve:
    soc = np.linspace(0.0, 1.0, 21)
    return BatteryCurve(
        soc=soc,
        u_oc=nominal_voltage + slope * (soc - 0.5),
        r_int=np.full_like(soc, r_int),
        nominal_voltage=nominal_voltage,
    )
