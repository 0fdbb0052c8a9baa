from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from hev_energy_lab.constants import SOC_MAX, SOC_MIN, SOC_TARGET
from hev_energy_lab.powertrain.plant import PowertrainPlant


class EmsContext(BaseModel):
    """Shared settings of the ECMS family and the DP benchmark."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    soc_ref: float = SOC_TARGET
    soc_min: float = SOC_MIN
    soc_max: float = SOC_MAX
    epsilon: float = Field(default=0.005, gt=0.0)
    costate: float = 0.0
    eta_ice_est: float | None = Field(default=None, gt=0.0)
    grid_points: int = Field(default=101, ge=3)
    electric_power: Literal["terminal", "internal"] = "terminal"

    @model_validator(mode="after")
    def _check_window(self) -> "EmsContext":
        if not self.soc_min < self.soc_ref < self.soc_max:
            raise ValueError("soc_ref must lie strictly inside the SOC window")
        return self

    def estimated_efficiency(self, plant: PowertrainPlant) -> float:
        """Engine efficiency used to convert battery energy into fuel."""

        if self.eta_ice_est is not None:
            return self.eta_ice_est
        return 0.5 * plant.peak_efficiency
