"""Adaptive ECMS: PI feedback on SOC tracking error drives the equivalence factor."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from hev_energy_lab.constants import EF_MAX, EF_MIN
from hev_energy_lab.errors import DomainError

LOGGER = logging.getLogger(__name__)

KP_RANGE = (2.0, 15.0)
KI_RANGE = (0.05, 0.5)


@dataclass
class PiGains:
    kp: float = 5.0
    ki: float = 0.1
    integral: float = 0.0
    ef_init: float = 1.25

    def __post_init__(self) -> None:
        if not KP_RANGE[0] <= self.kp <= KP_RANGE[1]:
            raise DomainError(f"kp={self.kp} outside {KP_RANGE}")
        if not KI_RANGE[0] <= self.ki <= KI_RANGE[1]:
            raise DomainError(f"ki={self.ki} outside {KI_RANGE}")


def aecms_update(gains: PiGains, soc: float, soc_ref: float, dt: float) -> float:
    """Advance the PI law and return the clamped EF.

    The integral is only committed while the unclamped output stays inside
    the EF range (conditional integration).
    """

    if dt <= 0.0:
        raise DomainError("dt must be positive")
    error = soc_ref - soc
    candidate = gains.integral + error * dt
    raw = gains.ef_init + gains.kp * error + gains.ki * candidate
    if EF_MIN <= raw <= EF_MAX:
        gains.integral = candidate
        return raw
    LOGGER.debug("A-ECMS output %.3f clamped; integral held at %.4f", raw, gains.integral)
    return min(max(raw, EF_MIN), EF_MAX)
