"""tests for the battery, engine, machine and plant models."""

from __future__ import annotations

import math
import sys
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.constants import Direction, FuelAccounting  # noqa: E402
from hev_energy_lab.errors import (  # noqa: E402
    ConstraintViolationError,
    DomainError,
    InfeasiblePowerError,
    SaturationError,
)
from hev_energy_lab.powertrain import ool_operating_point  # noqa: E402
from hev_energy_lab.powertrain.battery import BatteryState, battery_current, battery_step  # noqa: E402
from hev_energy_lab.powertrain.engine import (  # noqa: E402
    EngineCalibration,
    EngineState,
    coolant_step,
    dynamic_fuel_rate,
    enrichment_factor,
    manifold_dynamics,
)
from hev_energy_lab.powertrain.machines import default_mg2, machine_power  # noqa: E402
from hev_energy_lab.powertrain.maps import BatteryCurve  # noqa: E402
from hev_energy_lab.powertrain.plant import (  # noqa: E402
    build_plant,
    initial_state,
    powertrain_step,
    project_split,
    static_fuel_rate,
)


def _flat_battery(soc: float = 0.5) -> BatteryState:
    return BatteryState(soc=soc, curve=BatteryCurve.flat(345.0, 0.1), capacity_C=85.0)


class TestBattery(unittest.TestCase):
    def test_discharge_step_matches_closed_form(self) -> None:
        bat = _flat_battery()

        updated = battery_step(bat, 10.0e3, 1.0)

        self.assertAlmostEqual(updated.soc - bat.soc, -9.56e-5, delta=1e-7)

    def test_zero_power_keeps_soc_exactly(self) -> None:
        bat = _flat_battery(0.42)

        updated = battery_step(bat, 0.0, 1.0)

        self.assertEqual(updated.soc, 0.42)

    def test_regeneration_charges(self) -> None:
        bat = _flat_battery()

        updated = battery_step(bat, -10.0e3, 1.0)

        self.assertGreater(updated.soc, bat.soc)

    def test_power_outside_limits_is_a_violation(self) -> None:
        with self.assertRaises(ConstraintViolationError):
            battery_step(_flat_battery(), 80.0e3, 1.0)

    def test_soc_leaving_window_is_a_violation(self) -> None:
        bat = BatteryState(soc=0.2001, curve=BatteryCurve.flat(), capacity_C=0.01)

        with self.assertRaises(ConstraintViolationError):
            battery_step(bat, 10.0e3, 1.0)

    def test_current_beyond_deliverable_power_is_infeasible(self) -> None:
        with self.assertRaises(InfeasiblePowerError):
            battery_current(400.0e3, 345.0, 0.1)

    def test_invalid_soc_is_rejected(self) -> None:
        with self.assertRaises(DomainError):
            _flat_battery(1.5)


class TestEngineFuelAndCoolant(unittest.TestCase):
    def test_warm_engine_fuel_rate(self) -> None:
        cal = EngineCalibration()
        state = EngineState(mdot_at=0.01, lambda_afr=1.0, T_cool_dyn=363.0)

        self.assertAlmostEqual(dynamic_fuel_rate(state, cal), 6.80e-4, delta=1e-6)

    def test_cold_engine_enriches(self) -> None:
        cal = EngineCalibration()

        self.assertAlmostEqual(enrichment_factor(cal.T_cool_ref, cal), 1.0 + cal.mu)
        self.assertEqual(enrichment_factor(cal.T_cool_target + 5.0, cal), 1.0)

    def test_non_positive_air_fuel_ratio_is_rejected(self) -> None:
        with self.assertRaises(DomainError):
            dynamic_fuel_rate(EngineState(mdot_at=0.01, lambda_afr=0.0), EngineCalibration())

    def test_coolant_step_energy_balance(self) -> None:
        cal = EngineCalibration(m_ICE=80.0, C_ICE=500.0)
        state = EngineState(T_cool_dyn=350.0)

        updated = coolant_step(state, 15.0e3, (10.0e3, 10.0e3, 0.0), 1.0, cal, mdot_fuel=1.0e-3)

        self.assertAlmostEqual(updated - 350.0, 0.225, places=9)

    def test_coolant_step_clips_at_guard(self) -> None:
        cal = EngineCalibration(m_ICE=1.0, C_ICE=1.0)
        state = EngineState(T_cool_dyn=380.0)

        updated = coolant_step(state, 0.0, (0.0, 0.0, 0.0), 1.0, cal, mdot_fuel=1.0e-2)

        self.assertEqual(updated, 390.0)


class TestManifoldDynamics(unittest.TestCase):
    def test_random_states_match_scalar_formulas(self) -> None:
        cal = EngineCalibration()
        rng = np.random.default_rng(11)

        for _ in range(20):
            state = EngineState(
                omega=float(rng.uniform(100.0, 500.0)),
                mdot_at=float(rng.uniform(0.005, 0.04)),
                egr_valve=float(rng.uniform(0.0, 1.0)),
                p_int=float(rng.uniform(0.3, 0.95)) * cal.p0,
                T_int=float(rng.uniform(290.0, 330.0)),
                mdot_fuel_d=float(rng.uniform(5.0e-4, 3.0e-3)),
            )

            result = manifold_dynamics(state, cal, dt=1.0)

            raw = (cal.c1 * state.mdot_at + cal.c3 * state.omega) / (cal.c2 * state.omega)
            p_int = min(max(raw, cal.p_int_min_ratio * cal.p0), cal.p_int_max_ratio * cal.p0)
            p_exh = cal.epsilon_p * p_int
            eta_vol = cal.s1 + cal.s2 * state.omega + cal.s3 * state.omega**3 + cal.s4 * p_int
            mdot_egr = cal.k_egr * state.egr_valve * max(p_exh - p_int, 0.0)
            storage = cal.V_int / (cal.R_m * state.T_int) * (p_int - state.p_int)
            mdot_ac = max(state.mdot_at + mdot_egr - storage, 0.0)
            lambda_afr = (mdot_ac - mdot_egr) / (cal.L_th * state.mdot_fuel_d)
            self.assertTrue(math.isclose(result.p_int, p_int, rel_tol=1e-12))
            self.assertTrue(math.isclose(result.p_exh, p_exh, rel_tol=1e-12))
            self.assertTrue(math.isclose(result.eta_vol, eta_vol, rel_tol=1e-12))
            self.assertTrue(math.isclose(result.mdot_egr, mdot_egr, rel_tol=1e-12, abs_tol=1e-15))
            self.assertTrue(math.isclose(result.mdot_ac, mdot_ac, rel_tol=1e-12))
            self.assertTrue(math.isclose(result.lambda_afr, lambda_afr, rel_tol=1e-9))

    def test_steady_pressure_passes_throttle_and_egr_flow_through(self) -> None:
        cal = EngineCalibration()
        first = manifold_dynamics(EngineState(omega=300.0, mdot_at=0.02, egr_valve=0.5, mdot_fuel_d=1.0e-3), cal)

        steady = manifold_dynamics(
            EngineState(omega=300.0, mdot_at=0.02, egr_valve=0.5, p_int=first.p_int, mdot_fuel_d=1.0e-3), cal
        )

        self.assertAlmostEqual(steady.mdot_ac, 0.02 + steady.mdot_egr, places=12)
        self.assertGreater(steady.mdot_egr, 0.0)
        self.assertAlmostEqual(steady.lambda_afr, 0.02 / (cal.L_th * 1.0e-3), places=9)

    def test_stopped_engine_has_no_air_fuel_ratio(self) -> None:
        result = manifold_dynamics(EngineState(omega=0.0), EngineCalibration())

        self.assertIsNone(result.lambda_afr)
        self.assertEqual(result.mdot_ac, 0.0)


class TestMachines(unittest.TestCase):
    def test_motoring_draws_more_than_mechanical(self) -> None:
        result = machine_power(300.0, 50.0, default_mg2(), Direction.MOTORING)

        self.assertGreater(result.electrical, 300.0 * 50.0)
        self.assertFalse(result.saturated)

    def test_generating_returns_less_than_mechanical(self) -> None:
        result = machine_power(300.0, -50.0, default_mg2(), Direction.GENERATING)

        self.assertLess(abs(result.electrical), 300.0 * 50.0)

    def test_zero_torque_draws_nothing(self) -> None:
        result = machine_power(300.0, 0.0, default_mg2(), Direction.MOTORING)

        self.assertEqual(result.electrical, 0.0)

    def test_torque_saturates_at_limit(self) -> None:
        machine = default_mg2()

        result = machine_power(100.0, 1.0e4, machine, Direction.MOTORING)

        self.assertTrue(result.saturated)
        self.assertAlmostEqual(result.torque, machine.torque_limit(100.0))


class TestPlant(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.plant = build_plant(flat_battery=True)

    def test_operating_line_delivers_requested_power(self) -> None:
        omega, torque = ool_operating_point(30.0e3, self.plant.ool)

        self.assertGreater(omega, 0.0)
        self.assertAlmostEqual(omega * torque, 30.0e3, places=6)

    def test_operating_line_rejects_overload(self) -> None:
        with self.assertRaises(SaturationError):
            ool_operating_point(self.plant.p_ice_max * 1.5, self.plant.ool)

    def test_static_fuel_is_zero_when_engine_off(self) -> None:
        rates = static_fuel_rate(np.array([0.0, 20.0e3]), self.plant)

        self.assertEqual(rates[0], 0.0)
        self.assertGreaterEqual(rates[1], self.plant.idle_floor)

    def test_projection_conserves_power(self) -> None:
        battery = initial_state(self.plant, 0.5).battery

        split = project_split(20.0e3, 5.0e3, 5.0e3, battery, self.plant)

        self.assertAlmostEqual(split.p_ice + split.p_bat + split.p_brake, 20.0e3, places=6)
        self.assertAlmostEqual(split.residual, 0.0, places=6)
        self.assertTrue(split.projected)

    def test_braking_surplus_goes_to_friction_brakes(self) -> None:
        battery = initial_state(self.plant, 0.5).battery

        split = project_split(-80.0e3, 0.0, -80.0e3, battery, self.plant)

        self.assertEqual(split.p_ice, 0.0)
        self.assertLess(split.p_brake, 0.0)
        self.assertAlmostEqual(split.p_bat + split.p_brake, -80.0e3, places=6)

    def test_step_counts_engine_starts(self) -> None:
        state = initial_state(self.plant, 0.5)

        first = powertrain_step(state, 20.0e3, 0.0, 15.0, 20.0e3, 1.0, self.plant)
        second = powertrain_step(first.state, 0.0, 10.0e3, 15.0, 10.0e3, 1.0, self.plant)
        third = powertrain_step(second.state, 20.0e3, 0.0, 15.0, 20.0e3, 1.0, self.plant)

        self.assertEqual(third.state.start_stop_count, 2)
        self.assertGreater(third.state.fuel_l, 0.0)
        self.assertEqual(second.fuel_rate, 0.0)

    def test_accounting_switch_keeps_other_fields(self) -> None:
        static = self.plant.with_accounting(FuelAccounting.STATIC)

        self.assertEqual(static.accounting, FuelAccounting.STATIC)
        self.assertIs(static.bsfc, self.plant.bsfc)


if __name__ == "__main__":
    unittest.main()
