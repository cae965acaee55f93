"""Parameter records and one-step models for the dispatchable devices.

Sign conventions differ between the two stores: battery charge and
discharge are separate nonnegative powers, while heat-tank power is a single
signed quantity that is POSITIVE WHEN THE TANK RELEASES HEAT.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


def _check(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class ThermalUnit:
    name: str
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    a: float
    b: float
    c: float
    reserve_cost: float

    def __post_init__(self):
        _check(0 <= self.p_min <= self.p_max,
               f"thermal unit {self.name!r}: need 0 <= p_min <= p_max, got {self.p_min}, {self.p_max}")
        _check(self.ramp_up > 0 and self.ramp_down > 0,
               f"thermal unit {self.name!r}: ramp limits must be positive")
        _check(self.a >= 0, f"thermal unit {self.name!r}: quadratic cost must be convex (a >= 0)")

    def fuel_cost(self, p: float) -> float:
        return self.a * p * p + self.b * p + self.c


@dataclass(frozen=True)
class Hst:
    """Heat storage tank; ``p_c_max`` bounds both storing and releasing."""

    c_min: float
    c_max: float
    p_c_max: float

    def __post_init__(self):
        _check(0 <= self.c_min < self.c_max,
               f"heat storage: need 0 <= c_min < c_max, got {self.c_min}, {self.c_max}")
        _check(self.p_c_max > 0, "heat storage: p_c_max must be positive")


@dataclass(frozen=True)
class ChpUnit:
    """Extraction-condensing CHP unit.

    ``c_m`` and ``back_pressure_offset`` describe the optional lower
    electric limit ``p_e >= c_m p_h - offset``; it is only enforced when an
    offset is given.
    """

    name: str
    pe_min: float
    pe_max: float
    ph_max: float
    c_v: float
    ramp_up: float
    ramp_down: float
    a: float
    b: float
    c: float
    reserve_cost: float
    c_m: float = 0.75
    back_pressure_offset: Optional[float] = None
    hst: Optional[Hst] = None

    def __post_init__(self):
        _check(0 <= self.pe_min <= self.pe_max,
               f"CHP unit {self.name!r}: need 0 <= pe_min <= pe_max, got {self.pe_min}, {self.pe_max}")
        _check(self.ph_max > 0, f"CHP unit {self.name!r}: ph_max must be positive")
        _check(self.c_v > 0, f"CHP unit {self.name!r}: c_v must be positive")
        _check(self.ramp_up > 0 and self.ramp_down > 0,
               f"CHP unit {self.name!r}: ramp limits must be positive")
        _check(self.a >= 0, f"CHP unit {self.name!r}: quadratic cost must be convex (a >= 0)")

    def fuel_cost(self, p_cond: float) -> float:
        """Fuel cost of the condensing-equivalent power ``p_cond``."""
        return self.a * p_cond * p_cond + self.b * p_cond + self.c


@dataclass(frozen=True)
class Bess:
    s_min: float
    s_max: float
    p_max: float
    eff_ch: float
    eff_dc: float
    cost_dc: float
    cost_ch: float
    reserve_cost: float

    def __post_init__(self):
        _check(0 <= self.s_min < self.s_max,
               f"battery: need 0 <= s_min < s_max, got {self.s_min}, {self.s_max}")
        _check(0 < self.eff_ch <= 1 and 0 < self.eff_dc <= 1,
               "battery: efficiencies must lie in (0, 1]")
        _check(self.p_max > 0, "battery: p_max must be positive")


@dataclass(frozen=True)
class Eb:
    p_eb_max: float
    eff: float

    def __post_init__(self):
        _check(self.p_eb_max > 0, "electric boiler: p_eb_max must be positive")
        _check(0 < self.eff <= 1, "electric boiler: efficiency must lie in (0, 1]")


def chp_condensing_power(u: ChpUnit, p_e: float, p_h: float) -> float:
    return p_e + u.c_v * p_h


def eb_heat_output(e: Eb, p_elec: float) -> float:
    if not 0 <= p_elec <= e.p_eb_max:
        raise ValueError(f"boiler input {p_elec} MW outside [0, {e.p_eb_max}]")
    return p_elec * e.eff


def bess_step(b: Bess, s_prev: float, p_ch: float, p_dc: float, dt: float) -> float:
    if not (0 <= p_ch <= b.p_max and 0 <= p_dc <= b.p_max):
        raise ValueError(f"battery powers ({p_ch}, {p_dc}) outside [0, {b.p_max}]")
    return s_prev + (b.eff_ch * p_ch - p_dc / b.eff_dc) * dt


def hst_step(h: Hst, c_prev: float, p_c: float, dt: float) -> float:
    """Tank content after releasing ``p_c`` MW (storing when negative)."""
    if abs(p_c) > h.p_c_max:
        raise ValueError(f"heat-tank power {p_c} MW exceeds {h.p_c_max}")
    return c_prev - p_c * dt
