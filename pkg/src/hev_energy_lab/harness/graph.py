"""LangGraph orchestration of a single scenario run."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from langgraph.graph import END, START, StateGraph

from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.ems.controllers import run_controller
from hev_energy_lab.harness.registry import get_strategy, plant_for_config
from hev_energy_lab.harness.report import build_report
from hev_energy_lab.harness.state import MetricsReport, RunConfig, ScenarioState
from hev_energy_lab.harness.store import ResultsStore
from hev_energy_lab.rlagent.trainer import TrainingResult
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphDependencies:
    store: ResultsStore | None = None


def build_dependencies_from_config(config: RunConfig, store: ResultsStore | None = None) -> GraphDependencies:
    if store is None and config.results_db:
        store = ResultsStore(config.results_db)
    return GraphDependencies(store=store)


def _record_event(event: str, state: ScenarioState) -> None:
    state.events.append(event)
    LOGGER.info("Scenario event: %s", event)


def load_cycle_node(state: ScenarioState, deps: GraphDependencies) -> ScenarioState:
    """Load the cycle and plant; cheap strategies get their controller here."""

    cfg = state.config
    _record_event("SCENARIO_STARTED", state)
    state.cycle = load_cycle(cfg.cycle, cfg.dt)
    state.plant = plant_for_config(cfg)
    _record_event("CYCLE_LOADED", state)
    definition = get_strategy(cfg.strategy)
    if definition.ready(cfg):
        state.controller = definition.builder(state)
        _record_event("STRATEGY_READY", state)
    return state


def prepare_strategy_node(state: ScenarioState, deps: GraphDependencies) -> ScenarioState:
    """DP solve, constant-EF shooting, or policy training/loading."""

    _record_event("STRATEGY_PREPARATION_STARTED", state)
    state.controller = get_strategy(state.config.strategy).builder(state)
    _record_event("STRATEGY_PREPARED", state)
    return state


def simulate_node(state: ScenarioState, deps: GraphDependencies) -> ScenarioState:
    if state.controller is None:
        raise ValueError("A controller is required before simulation.")
    cfg = state.config
    sim = Simulation(state.cycle, state.plant, cfg.horizon(), soc_init=cfg.soc_init, soc_target=cfg.soc_target)
    run_controller(sim, state.controller)
    state.simulation = sim
    _record_event("SIMULATION_COMPLETED", state)
    return state


def report_node(state: ScenarioState, deps: GraphDependencies) -> ScenarioState:
    cfg = state.config
    if state.simulation is None:
        raise ValueError("Simulation output is required before reporting.")
    state.report = build_report(state.simulation, cfg.strategy, cfg.ems_context(), cfg.seed)
    if deps.store is not None:
        state.run_id = deps.store.record_run(cfg, state.report)
        if isinstance(state.training, TrainingResult):
            deps.store.record_learning_curve(state.run_id, state.training.curve_frame())
        _record_event("REPORT_STORED", state)
    else:
        _record_event("REPORT_STORE_SKIPPED", state)
    return state


def _route_after_load(state: ScenarioState) -> str:
    if state.controller is not None:
        return "simulate_node"
    return "prepare_strategy_node"


def build_graph(deps: GraphDependencies | None = None):
    """Build and compile the scenario workflow."""

    dependencies = deps or GraphDependencies()

    graph = StateGraph(ScenarioState)
    graph.add_node("load_cycle_node", lambda state: load_cycle_node(state, dependencies))
    graph.add_node("prepare_strategy_node", lambda state: prepare_strategy_node(state, dependencies))
    graph.add_node("simulate_node", lambda state: simulate_node(state, dependencies))
    graph.add_node("report_node", lambda state: report_node(state, dependencies))

    graph.add_edge(START, "load_cycle_node")
    graph.add_conditional_edges(
        "load_cycle_node",
        _route_after_load,
        {
            "prepare_strategy_node": "prepare_strategy_node",
            "simulate_node": "simulate_node",
        },
    )
    graph.add_edge("prepare_strategy_node", "simulate_node")
    graph.add_edge("simulate_node", "report_node")
    graph.add_edge("report_node", END)
    return graph.compile()


def run_graph(state: ScenarioState, deps: GraphDependencies | None = None) -> ScenarioState:
    graph = build_graph(deps=deps)
    output = graph.invoke(state)
    if isinstance(output, ScenarioState):
        return output
    return ScenarioState.model_validate(output)


def run_scenario(config: RunConfig, deps: GraphDependencies | None = None) -> MetricsReport:
    final_state = run_graph(ScenarioState(config=config), deps=deps)
    if final_state.report is None:
        raise ValueError("Scenario finished without a report.")
    return final_state.report
