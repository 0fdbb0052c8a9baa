"""Exception hierarchy shared by every module of the lab.

Validation problems subclass ``ValueError`` and map to CLI exit code 2;
runtime aborts subclass ``RuntimeError`` and map to exit code 3.
"""

from __future__ import annotations


class CycleParseError(ValueError):
    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class CycleValidationError(ValueError):
    pass


class DomainError(ValueError):
    """Argument outside the domain of a model equation."""


class DimensionError(ValueError):
    pass


class SelectionError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class UndefinedCorrelationError(DomainError):
    pass


class InfeasiblePowerError(RuntimeError):
    """Requested battery power has no real current solution."""

    def __init__(self, p_bat: float, limit: float) -> None:
        super().__init__(f"battery power {p_bat:.1f} W exceeds deliverable limit {limit:.1f} W")
        self.p_bat = p_bat
        self.limit = limit


class ConstraintViolationError(RuntimeError):
    pass


class SaturationError(RuntimeError):
    """Engine power request above the rated maximum."""


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, seed: int, learning_rate: float) -> None:
        super().__init__(f"{message} (seed={seed}, lr={learning_rate:g})")
        self.seed = seed
        self.learning_rate = learning_rate


class InfeasibleDpError(RuntimeError):
    def __init__(self, binding_constraint: str) -> None:
        super().__init__(f"no feasible SOC path; binding constraint: {binding_constraint}")
        self.binding_constraint = binding_constraint


class SimulationError(RuntimeError):
    def __init__(self, message: str, step_index: int) -> None:
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class ModelStateError(RuntimeError):
    pass
