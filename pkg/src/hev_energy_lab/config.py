"""Configuration loading for the energy-management lab."""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import dotenv_values, load_dotenv

from hev_energy_lab.errors import ConfigError

ENV_PREFIX = "HEV_"


def _project_root() -> Path:
    return Path(__file__).resolve().parents[2]


def _parse_sizes(raw: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in raw.replace(" ", "").split(",") if part)
    except ValueError as exc:
        raise ConfigError(f"HEV_HIDDEN_SIZES must be comma-separated integers, got {raw!r}") from exc
    if not sizes or min(sizes) <= 0:
        raise ConfigError(f"HEV_HIDDEN_SIZES must list positive layer widths, got {raw!r}")
    return sizes


def _parse_bool(raw: str) -> bool:
    return raw.strip().lower() in {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class AppConfig:
    log_level: str
    seed: int
    dt: float
    cycle: str
    strategy: str
    soc_init: float
    soc_target: float
    tau: float
    disturbance: float
    episodes: int
    hidden_sizes: tuple[int, ...]
    t_avg: float
    t_fx: float
    window_m: int
    results_db: str
    output_dir: str
    bsfc_map: str
    battery_curve: str
    mg1_map: str
    mg2_map: str
    full: bool
    overrides: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_env(cls, env_file: str = ".env", config_file: str | None = None) -> "AppConfig":
        env_path = Path(env_file)
        if env_path.exists():
            load_dotenv(dotenv_path=env_path)

        values: dict[str, str] = {key: value for key, value in os.environ.items() if key.startswith(ENV_PREFIX)}
        overrides: dict[str, str] = {}
        if config_file is not None:
            config_path = Path(config_file)
            if not config_path.exists():
                raise ConfigError(f"Config file not found: {config_path}")
            for key, value in dotenv_values(config_path).items():
                if value is None:
                    continue
                if "." in key:
                    overrides[key] = value
                else:
                    values[key if key.startswith(ENV_PREFIX) else ENV_PREFIX + key.upper()] = value
        return cls.from_mapping(values, overrides=overrides)

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], overrides: Mapping[str, str] | None = None) -> "AppConfig":
        def get(name: str, default: str) -> str:
            return values.get(ENV_PREFIX + name, default)

        try:
            return cls(
                log_level=get("LOG_LEVEL", "INFO").upper(),
                seed=int(get("SEED", "7")),
                dt=float(get("DT", "1.0")),
                cycle=get("CYCLE", "urban300"),
                strategy=get("STRATEGY", "const-ef").lower(),
                soc_init=float(get("SOC_INIT", "0.34")),
                soc_target=float(get("SOC_TARGET", "0.34")),
                tau=float(get("TAU", "3.0")),
                disturbance=float(get("DISTURBANCE", "0.0")),
                episodes=int(get("EPISODES", "50")),
                hidden_sizes=_parse_sizes(get("HIDDEN_SIZES", "64,64")),
                t_avg=float(get("T_AVG", "30")),
                t_fx=float(get("T_FX", "10")),
                window_m=int(get("WINDOW_M", "10")),
                results_db=get("RESULTS_DB", ""),
                output_dir=get("OUTPUT_DIR", "./storage/runs"),
                bsfc_map=get("BSFC_MAP", ""),
                battery_curve=get("BATTERY_CURVE", ""),
                mg1_map=get("MG1_MAP", ""),
                mg2_map=get("MG2_MAP", ""),
                full=_parse_bool(get("FULL", "false")),
                overrides=dict(overrides or {}),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"Invalid configuration value: {exc}") from exc


def cycles_dir() -> Path:
    return _project_root() / "data" / "cycles"
