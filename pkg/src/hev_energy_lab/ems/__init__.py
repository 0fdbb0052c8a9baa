from hev_energy_lab.ems.accounting import soc_corrected_fuel, soc_correction_slope
from hev_energy_lab.ems.aecms import PiGains, aecms_update
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.controllers import (
    AecmsController,
    ConstantEfController,
    Controller,
    Decision,
    DpController,
    RuleBasedController,
    run_controller,
    tune_constant_ef,
)
from hev_energy_lab.ems.dp import DpGrid, DpSolution, backward_induction, dp_solve, forward_rollout
from hev_energy_lab.ems.ecms import (
    EcmsDecision,
    costate_from_ef,
    ecms_step,
    ef_from_costate,
    hamiltonian,
    soc_derivative,
)
from hev_energy_lab.ems.rule_based import RuleParams, rule_based_step

__all__ = [
    "AecmsController",
    "ConstantEfController",
    "Controller",
    "Decision",
    "DpController",
    "DpGrid",
    "DpSolution",
    "EcmsDecision",
    "EmsContext",
    "PiGains",
    "RuleBasedController",
    "RuleParams",
    "aecms_update",
    "backward_induction",
    "costate_from_ef",
    "dp_solve",
    "ecms_step",
    "ef_from_costate",
    "forward_rollout",
    "hamiltonian",
    "rule_based_step",
    "run_controller",
    "soc_corrected_fuel",
    "soc_correction_slope",
    "soc_derivative",
    "tune_constant_ef",
]
