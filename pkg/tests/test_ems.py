"""tests for the ECMS family, the rule-based baseline and the DP benchmark."""

from __future__ import annotations

import itertools
import sys
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.constants import SOC_MAX  # noqa: E402
from hev_energy_lab.cycle.drive_cycle import cycle_from_speeds  # noqa: E402
from hev_energy_lab.ems import (  # noqa: E402
    ConstantEfController,
    Decision,
    DpGrid,
    EmsContext,
    PiGains,
    RuleBasedController,
    aecms_update,
    backward_induction,
    dp_solve,
    ecms_step,
    forward_rollout,
    hamiltonian,
    rule_based_step,
    run_controller,
    soc_corrected_fuel,
)
from hev_energy_lab.ems.ecms import costate_from_ef, ef_from_costate  # noqa: E402
from hev_energy_lab.errors import DomainError, InfeasibleDpError, SimulationError  # noqa: E402
from hev_energy_lab.powertrain.plant import build_plant, initial_state  # noqa: E402
from hev_energy_lab.simulation import Simulation  # noqa: E402

# cost[k][state][control]; the control is also the next state.
TOY_COSTS = np.array(
    [
        [[3.0, 1.0], [2.0, 4.0]],
        [[1.0, 5.0], [0.5, 2.0]],
        [[2.0, 0.2], [1.0, 3.0]],
    ]
)


def _toy_stage(k: int, states: np.ndarray):
    rows = states.astype(int)
    controls = np.tile([0.0, 1.0], (states.size, 1))
    return controls, controls.copy(), TOY_COSTS[k][rows]


class TestSocCorrection(unittest.TestCase):
    def test_deficit_is_charged_as_fuel(self) -> None:
        plant = build_plant(flat_battery=True)
        battery = initial_state(plant, 0.33).battery
        ctx = EmsContext(eta_ice_est=0.19)

        corrected = soc_corrected_fuel(1.0, 0.33, 0.34, battery, ctx, plant)

        self.assertAlmostEqual(corrected - 1.0, 0.170, delta=1e-3)

    def test_surplus_reduces_the_bill(self) -> None:
        plant = build_plant(flat_battery=True)
        battery = initial_state(plant, 0.35).battery

        corrected = soc_corrected_fuel(1.0, 0.35, 0.34, battery, EmsContext(eta_ice_est=0.19), plant)

        self.assertLess(corrected, 1.0)


class TestEcms(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.plant = build_plant(flat_battery=True)
        cls.battery = initial_state(cls.plant, 0.5).battery
        cls.ctx = EmsContext()

    def test_standstill_keeps_engine_off(self) -> None:
        decision = ecms_step(self.battery, 1.25, 0.0, self.ctx, self.plant, v=0.0)

        self.assertEqual(decision.p_bat, 0.0)
        self.assertEqual(decision.p_ice, 0.0)
        self.assertEqual(decision.candidates, 1)

    def test_standstill_braking_recovers_energy(self) -> None:
        decision = ecms_step(self.battery, 1.25, -20.0e3, self.ctx, self.plant, v=0.0)

        self.assertEqual(decision.p_bat, -20.0e3)
        self.assertEqual(decision.p_ice, 0.0)

    def test_full_battery_sends_braking_power_to_the_friction_brakes(self) -> None:
        battery = initial_state(self.plant, SOC_MAX - 1e-5).battery

        decision = ecms_step(battery, 1.25, -10.0e3, self.ctx, self.plant, 1.0, v=10.0)

        self.assertEqual(decision.p_ice, 0.0)
        self.assertGreaterEqual(decision.p_bat, -10.0e3)
        self.assertLessEqual(decision.p_bat, 0.0)
        self.assertTrue(np.isfinite(decision.cost))

    def test_constant_ef_run_starting_full_completes(self) -> None:
        speeds = np.concatenate((np.linspace(0.0, 15.0, 8), np.full(10, 15.0), np.linspace(15.0, 0.0, 6)))
        sim = Simulation(cycle_from_speeds("stop_and_go", speeds), self.plant, soc_init=SOC_MAX, soc_target=0.6)

        run_controller(sim, ConstantEfController(1.25))
        trace = sim.trace_frame()

        self.assertEqual(len(trace), len(speeds))
        self.assertTrue(trace["soc"].le(SOC_MAX + 1e-9).all())
        np.testing.assert_allclose(trace["p_ice"] + trace["p_bat"] + trace["p_brake"], trace["p_dem"], atol=1e-6)

    def test_higher_equivalence_factor_uses_less_battery(self) -> None:
        cheap = ecms_step(self.battery, 0.5, 30.0e3, self.ctx, self.plant, v=15.0)
        dear = ecms_step(self.battery, 2.0, 30.0e3, self.ctx, self.plant, v=15.0)

        self.assertGreaterEqual(cheap.p_bat, dear.p_bat)
        self.assertAlmostEqual(dear.p_bat + dear.p_ice, 30.0e3, places=6)

    def test_decision_is_the_grid_minimum(self) -> None:
        decision = ecms_step(self.battery, 1.25, 30.0e3, self.ctx, self.plant, v=15.0)
        grid = np.linspace(*self.battery.power_limits(), 401)

        costs = hamiltonian(grid, 1.25, 30.0e3, self.plant, self.battery, self.ctx)

        best = float(np.min(costs))
        self.assertLessEqual(decision.cost - best, 0.02 * abs(best))

    def test_power_outside_limits_is_inadmissible(self) -> None:
        cost = hamiltonian(1.0e6, 1.25, 30.0e3, self.plant, self.battery, self.ctx)

        self.assertEqual(cost, np.inf)

    def test_costate_and_ef_are_inverse_maps(self) -> None:
        costate = costate_from_ef(1.4, self.ctx, self.battery, self.plant)

        self.assertAlmostEqual(ef_from_costate(costate, self.ctx, self.battery, self.plant), 1.4)


class TestAecms(unittest.TestCase):
    def test_pi_update_closed_form(self) -> None:
        gains = PiGains(kp=5.0, ki=0.1, ef_init=1.25)

        ef = aecms_update(gains, soc=0.33, soc_ref=0.34, dt=1.0)

        self.assertAlmostEqual(ef, 1.25 + 5.0 * 0.01 + 0.1 * 0.01)
        self.assertAlmostEqual(gains.integral, 0.01)

    def test_saturated_output_holds_the_integral(self) -> None:
        gains = PiGains(kp=5.0, ki=0.1)

        ef = aecms_update(gains, soc=0.1, soc_ref=0.34, dt=1.0)

        self.assertEqual(ef, 2.0)
        self.assertEqual(gains.integral, 0.0)

    def test_gains_outside_range_are_rejected(self) -> None:
        with self.assertRaises(DomainError):
            PiGains(kp=20.0)
        with self.assertRaises(DomainError):
            PiGains(ki=0.01)


class TestRuleBased(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.plant = build_plant(flat_battery=True)

    def _battery(self, soc: float):
        return initial_state(self.plant, soc).battery

    def test_low_demand_runs_electric(self) -> None:
        self.assertEqual(rule_based_step(self._battery(0.36), 5.0e3, self.plant, v=10.0), (0.0, 5.0e3))

    def test_low_demand_at_target_follows_load(self) -> None:
        self.assertEqual(rule_based_step(self._battery(0.34), 5.0e3, self.plant, v=10.0), (5.0e3, 0.0))
        self.assertEqual(rule_based_step(self._battery(0.33), 5.0e3, self.plant, v=10.0), (5.0e3, 0.0))

    def test_high_demand_follows_load(self) -> None:
        self.assertEqual(rule_based_step(self._battery(0.34), 30.0e3, self.plant, v=20.0), (30.0e3, 0.0))

    def test_low_soc_charges(self) -> None:
        p_ice, p_bat = rule_based_step(self._battery(0.30), 20.0e3, self.plant, v=15.0)

        self.assertEqual(p_ice, 30.0e3)
        self.assertEqual(p_bat, -10.0e3)

    def test_braking_regenerates_until_full(self) -> None:
        self.assertEqual(rule_based_step(self._battery(0.5), -10.0e3, self.plant, v=10.0), (0.0, -10.0e3))
        self.assertEqual(rule_based_step(self._battery(0.7995), -10.0e3, self.plant, v=10.0), (0.0, 0.0))

    def test_controller_keeps_power_balance_over_a_cycle(self) -> None:
        speeds = np.concatenate((np.linspace(0.0, 20.0, 20), np.full(30, 20.0), np.linspace(20.0, 0.0, 15)))
        sim = Simulation(cycle_from_speeds("toy", speeds), self.plant)

        run_controller(sim, RuleBasedController())
        trace = sim.trace_frame()

        np.testing.assert_allclose(trace["p_ice"] + trace["p_bat"] + trace["p_brake"], trace["p_dem"], atol=1e-6)
        self.assertTrue(trace["soc"].between(0.2, 0.8).all())


class TestDynamicProgramming(unittest.TestCase):
    def test_backward_induction_matches_enumeration(self) -> None:
        grid = np.array([0.0, 1.0])
        brute = min(
            TOY_COSTS[0][0][u0] + TOY_COSTS[1][u0][u1] + TOY_COSTS[2][u1][u2]
            for u0, u1, u2 in itertools.product((0, 1), repeat=3)
        )

        value, _ = backward_induction(_toy_stage, grid, 3, np.zeros(2))
        states, controls, total = forward_rollout(_toy_stage, grid, value, 0.0)

        self.assertAlmostEqual(value[0][0], brute)
        self.assertAlmostEqual(total, brute)
        self.assertEqual(controls.tolist(), [1.0, 0.0, 1.0])
        self.assertEqual(states[0], 0.0)

    def test_solution_ends_inside_the_terminal_window(self) -> None:
        plant = build_plant(flat_battery=True)
        ctx = EmsContext()
        cycle = cycle_from_speeds("cruise", np.concatenate((np.linspace(0.0, 12.0, 6), np.full(14, 12.0))))

        solution = dp_solve(cycle, plant, ctx, DpGrid(soc_points=61, p_bat_points=21))

        final = solution.soc_trajectory[-1]
        self.assertGreaterEqual(final, ctx.soc_ref - 1e-9)
        self.assertLessEqual(final, ctx.soc_ref + ctx.epsilon + 1e-9)
        self.assertGreaterEqual(solution.fuel_l, 0.0)
        self.assertEqual(len(solution.to_frame()), len(cycle) * solution.soc_grid.size)

    def test_braking_with_a_full_battery_stays_feasible(self) -> None:
        plant = build_plant(flat_battery=True)
        ctx = EmsContext(soc_ref=SOC_MAX - 0.005)
        cycle = cycle_from_speeds("braking", np.concatenate((np.linspace(15.0, 0.0, 8), np.zeros(2))))

        solution = dp_solve(cycle, plant, ctx, DpGrid(soc_points=61, p_bat_points=21), soc_init=SOC_MAX)

        self.assertAlmostEqual(solution.fuel_l, 0.0)
        self.assertTrue(np.all(solution.soc_trajectory <= SOC_MAX + 1e-9))
        self.assertGreaterEqual(solution.soc_trajectory[-1], ctx.soc_ref - 1e-9)

    def test_unreachable_window_names_the_binding_constraint(self) -> None:
        plant = build_plant(flat_battery=True)
        cycle = cycle_from_speeds("cruise", np.full(5, 10.0))

        with self.assertRaises(InfeasibleDpError) as ctx:
            dp_solve(cycle, plant, EmsContext(soc_ref=0.7), DpGrid(soc_points=61, p_bat_points=21), soc_init=0.3)

        self.assertEqual(ctx.exception.binding_constraint, "terminal_soc_window")

    def test_initial_soc_outside_grid_is_rejected(self) -> None:
        plant = build_plant(flat_battery=True)

        with self.assertRaises(DomainError):
            dp_solve(cycle_from_speeds("idle", np.zeros(3)), plant, soc_init=0.9)


class TestRunController(unittest.TestCase):
    def test_plant_failure_reports_step_index(self) -> None:
        class FailsOnSecondStep:
            def reset(self) -> None:
                return None

            def decide(self, sim: Simulation) -> Decision:
                if sim.index == 1:
                    raise DomainError("controller lost track of the demand")
                return Decision(p_ice=0.0, p_bat=0.0)

        plant = build_plant(flat_battery=True)
        sim = Simulation(cycle_from_speeds("toy", [0.0, 5.0, 10.0]), plant)

        with self.assertRaises(SimulationError) as ctx:
            run_controller(sim, FailsOnSecondStep())

        self.assertEqual(ctx.exception.step_index, 1)


if __name__ == "__main__":
    unittest.main()
