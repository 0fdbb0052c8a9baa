"""Playground script to compare single-step power splits on sample or custom operating points."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

import numpy as np

from hev_energy_lab.constants import EF_MAX, EF_MIN
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.ecms import candidate_controls, ecms_step, hamiltonian
from hev_energy_lab.ems.rule_based import rule_based_step
from hev_energy_lab.powertrain.plant import build_plant, initial_state, static_fuel_rate


def load_cases(cases_file: Path) -> list[dict[str, Any]]:
    with cases_file.open("r", encoding="utf-8") as file:
        payload = json.load(file)
    if not isinstance(payload, list):
        raise ValueError("Cases file must contain a JSON list.")
    return payload


def list_cases(cases: list[dict[str, Any]]) -> None:
    print("Available split cases:")
    for index, case in enumerate(cases, start=1):
        print(
            f"  {index}. {case.get('id', f'case_{index}')} | {case.get('title', 'Untitled')} | "
            f"P_dem={case.get('p_dem')} W SOC={case.get('soc')} v={case.get('v')} m/s EF={case.get('ef')}"
        )


def resolve_case(cases: list[dict[str, Any]], selector: str) -> dict[str, Any]:
    selector_stripped = selector.strip()
    if selector_stripped.isdigit():
        idx = int(selector_stripped)
        if idx <= 0 or idx > len(cases):
            raise IndexError(f"Case index out of range: {idx}")
        return cases[idx - 1]
    for case in cases:
        if str(case.get("id", "")).strip().lower() == selector_stripped.lower():
            return case
    raise KeyError(f"Case not found: {selector}")


def build_custom_case(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "id": "custom",
        "title": "Custom operating point",
        "p_dem": args.p_dem,
        "soc": args.soc,
        "v": args.v,
        "ef": args.ef,
    }


def run_case(case: dict[str, Any], sweep: bool) -> None:
    plant = build_plant()
    ctx = EmsContext()
    battery = initial_state(plant, float(case["soc"])).battery
    p_dem = float(case["p_dem"])
    v = float(case["v"])
    ef = float(case["ef"])

    print(f"Case {case.get('id')} | {case.get('title', '')}")
    print(f"  P_dem={p_dem:.0f} W | SOC={battery.soc:.3f} | v={v:.1f} m/s | U_oc={battery.u_oc:.1f} V")

    decision = ecms_step(battery, ef, p_dem, ctx, plant, v=v)
    print(
        f"  ECMS (EF={ef:.2f}): P_ICE={decision.p_ice:.0f} W | P_bat={decision.p_bat:.0f} W | "
        f"H={decision.cost * 1e3:.4f} g/s | admissible={decision.candidates}"
    )
    rb_ice, rb_bat = rule_based_step(battery, p_dem, plant, v=v)
    rb_fuel = float(static_fuel_rate(rb_ice, plant)) if rb_ice > 0.0 else 0.0
    print(f"  Rule-based: P_ICE={rb_ice:.0f} W | P_bat={rb_bat:.0f} W | fuel={rb_fuel * 1e3:.4f} g/s")

    if sweep:
        print("  EF sweep:")
        for value in np.linspace(EF_MIN, EF_MAX, 7):
            step = ecms_step(battery, float(value), p_dem, ctx, plant, v=v)
            print(f"    EF={value:.2f} -> P_ICE={step.p_ice:.0f} W, P_bat={step.p_bat:.0f} W")
        grid = candidate_controls(p_dem, battery, plant, 11)
        costs = hamiltonian(grid, ef, p_dem, plant, battery, ctx)
        print("  Hamiltonian over a coarse grid:")
        for p_bat, cost in sorted(zip(grid, costs)):
            label = "inadmissible" if not np.isfinite(cost) else f"{cost * 1e3:.4f} g/s"
            print(f"    P_bat={p_bat:9.0f} W -> {label}")


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Compare ECMS and rule-based splits at one operating point.")
    parser.add_argument(
        "--cases-file",
        default=str(PROJECT_ROOT / "data" / "split_playground_cases.json"),
        help="Path to the cases JSON file.",
    )
    parser.add_argument("--list", action="store_true", help="List available cases and exit.")
    parser.add_argument("--case", help="Case index (1-based) or id.")
    parser.add_argument("--all", action="store_true", help="Run every case.")
    parser.add_argument("--sweep", action="store_true", help="Also sweep the equivalence factor.")
    parser.add_argument("--p-dem", type=float, default=20000.0, help="Custom demanded power (W).")
    parser.add_argument("--soc", type=float, default=0.34, help="Custom battery SOC.")
    parser.add_argument("--v", type=float, default=15.0, help="Custom vehicle speed (m/s).")
    parser.add_argument("--ef", type=float, default=1.25, help="Custom equivalence factor.")
    parser.add_argument("--custom", action="store_true", help="Use the custom operating point flags.")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    cases = load_cases(Path(args.cases_file))
    if args.list:
        list_cases(cases)
        return 0
    if args.custom:
        selected = [build_custom_case(args)]
    elif args.all:
        selected = cases
    elif args.case:
        selected = [resolve_case(cases, args.case)]
    else:
        print("Provide --case <id>, --all, --custom or --list.")
        return 1
    for case in selected:
        run_case(case, args.sweep)
        print("-" * 72)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
