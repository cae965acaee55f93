"""Building thermal inertia: indoor temperature dynamics and heating demand.

Between two periods the outdoor temperature and the heating power are held
constant, so the indoor temperature relaxes exponentially toward the steady
state ``T_od + P / (K F)`` with time constant ``c_air rho_air V / (K F)``.
Heat powers are in MW, heat capacities in MWh/degC and times in hours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BuildingParams:
    """Lumped building envelope.

    ``k_transfer`` is in W m^-2 degC^-1, ``surface_f`` in m^2, ``volume_v``
    in m^3, ``c_air`` in kJ kg^-1 degC^-1 and ``rho_air`` in kg m^-3.
    """

    k_transfer: float
    surface_f: float
    volume_v: float
    c_air: float
    rho_air: float

    def __post_init__(self):
        for name in ("k_transfer", "surface_f", "volume_v", "c_air", "rho_air"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def kf_mw(self) -> float:
        """Envelope conductance in MW/degC."""
        return self.k_transfer * self.surface_f * 1e-6

    @property
    def capacity_mwh(self) -> float:
        """Air heat capacity in MWh/degC."""
        return self.c_air * 1e3 * self.rho_air * self.volume_v / 3.6e9

    @property
    def tau_h(self) -> float:
        return self.capacity_mwh / self.kf_mw

    def decay(self, dt: float) -> float:
        """Fraction of the deviation from steady state left after ``dt`` hours."""
        return math.exp(-dt / self.tau_h)


@dataclass(frozen=True)
class ComfortBand:
    """Trapezoidal comfort membership; fully comfortable on ``[t_b, t_c]``."""

    t_a: float = 18.0
    t_b: float = 20.0
    t_c: float = 22.0
    t_d: float = 24.0

    def __post_init__(self):
        if not (self.t_a <= self.t_b <= self.t_c <= self.t_d):
            raise ValueError(
                f"comfort breakpoints must be ordered, got "
                f"{self.t_a}, {self.t_b}, {self.t_c}, {self.t_d}"
            )


def indoor_temp_step(p: BuildingParams, t_id_prev: float, t_od: float,
                     p_heat: float, dt: float) -> float:
    """Indoor temperature after ``dt`` hours of constant heating ``p_heat`` MW."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steady = t_od + p_heat / p.kf_mw
    return steady + p.decay(dt) * (t_id_prev - steady)


def heating_demand(p: BuildingParams, t_id_now: float, t_id_prev: float,
                   t_od: float, dt: float) -> float:
    """Heating power (MW) that moves the room from ``t_id_prev`` to ``t_id_now``.

    Exact inverse of :func:`indoor_temp_step` and affine in the three
    temperatures; negative values mean the room must shed heat.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    e = p.decay(dt)
    return p.kf_mw * ((t_id_now - t_od) - e * (t_id_prev - t_od)) / (1.0 - e)


def demand_coefficients(p: BuildingParams, dt: float) -> tuple[float, float, float]:
    """``(a_now, a_prev, a_od)`` with demand ``= a_now T_now + a_prev T_prev + a_od T_od``."""
    e = p.decay(dt)
    scale = p.kf_mw / (1.0 - e)
    return scale, -scale * e, -p.kf_mw


def comfort_membership(band: ComfortBand, t: float) -> float:
    if t < band.t_a or t > band.t_d:
        return 0.0
    if t < band.t_b:
        return (t - band.t_a) / (band.t_b - band.t_a)
    if t <= band.t_c:
        return 1.0
    return (band.t_d - t) / (band.t_d - band.t_c)
