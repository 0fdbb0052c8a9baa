"""Versioned JSON weight files shared by correction models and policies."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hev_energy_lab.constants import ModelArch

LOGGER = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ParamBlob(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: list[int]
    data: list[float]

    @model_validator(mode="after")
    def _check_size(self) -> "ParamBlob":
        if int(np.prod(self.shape, dtype=np.int64)) != len(self.data):
            raise ValueError(f"shape {self.shape} does not hold {len(self.data)} values")
        return self

    def to_array(self) -> np.ndarray:
        return np.asarray(self.data, dtype=np.float64).reshape(self.shape)


class WeightFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    arch: str
    dims: dict[str, Any]
    seed: int
    params: dict[str, ParamBlob]
    extra: dict[str, Any] = Field(default_factory=dict)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: blob.to_array() for name, blob in self.params.items()}


def save_weights(
    path: str | Path,
    arch: ModelArch | str,
    dims: dict[str, Any],
    seed: int,
    params: dict[str, np.ndarray],
    extra: dict[str, Any] | None = None,
) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = WeightFile(
        arch=arch.value if isinstance(arch, ModelArch) else str(arch),
        dims=dims,
        seed=seed,
        params={
            name: ParamBlob(shape=list(value.shape), data=value.ravel(order="C").tolist())
            for name, value in sorted(params.items())
        },
        extra=extra or {},
    )
    target.write_text(json.dumps(payload.model_dump(), indent=1), encoding="utf-8")
    LOGGER.info("Saved %s weights to %s", payload.arch, target)
    return target


def load_weights(path: str | Path) -> WeightFile:
    return WeightFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
