"""Domain enums and physical constants for the energy-management lab."""

from __future__ import annotations

from enum import Enum

GRAVITY = 9.81
AIR_DENSITY = 1.2
FUEL_LHV = 44.0e6
FUEL_DENSITY = 0.745
SOC_MIN = 0.20
SOC_MAX = 0.80
SOC_TARGET = 0.34
IDLE_FUEL_FLOOR = 2.0e-4
ENGINE_MAX_POWER = 120.0e3
EF_MIN = 0.5
EF_MAX = 2.0
TERMINAL_REWARD = -10.0


class StrategyTag(str, Enum):
    DP = "dp"
    RL_ECMS = "rl-ecms"
    RL = "rl"
    A_ECMS = "a-ecms"
    RB = "rb"
    CONST_EF = "const-ef"


class EnvTag(str, Enum):
    RL_ECMS = "rl-ecms"
    CONVENTIONAL = "rl"


class FuelAccounting(str, Enum):
    STATIC = "static"
    AVERAGED = "averaged"
    CORRECTED = "corrected"


class ModelArch(str, Enum):
    LSTM = "lstm"
    RNN = "rnn"
    MLP = "mlp"


class Direction(str, Enum):
    MOTORING = "motoring"
    GENERATING = "generating"


class ReportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class CorrectionTarget(str, Enum):
    FUEL = "fuel"
    COOLANT = "coolant"
