"""Independent checks of a finished schedule.

Nothing here reads the optimization model.  Constraint families are replayed
from the scenario and the schedule alone, using the device step functions,
and the reserve chance constraint is checked by sampling the continuous
wind and PV laws.

Random numbers come from numpy's PCG64 bit generator.  Period ``t`` of a run
with seed ``s`` draws from the stream ``SeedSequence([s, t])``, so results
do not depend on the order in which periods are processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from .building import heating_demand
from .devices import bess_step, eb_heat_output, hst_step
from .probseq import PvParams, WindParams, discretize_pv, discretize_wind
from .scenario import Scenario
from .scheduler import Schedule, required_reserve, temperature_bounds

MC_ALLOWANCE = 0.015
DEFAULT_TOL = 1e-6


def period_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, t])))


def sample_wind(params: Optional[WindParams], u: np.ndarray) -> np.ndarray:
    """Turbine output for uniform draws ``u`` (inverse Weibull CDF, then power curve)."""
    if params is None:
        return np.zeros_like(u)
    return params.power_curve(params.speed_ppf(u))


def sample_pv(params: Optional[PvParams], u: np.ndarray) -> np.ndarray:
    if params is None:
        return np.zeros_like(u)
    return params.ppf(u)


def sample_dg(s: Scenario, t: int, n: int, seed: int) -> np.ndarray:
    """``n`` joint wind+PV outputs for period ``t`` (0-based)."""
    rng = period_rng(seed, t)
    u = rng.random((2, n))
    return sample_wind(s.wind[t], u[0]) + sample_pv(s.pv[t], u[1])


def monte_carlo_reserve_check(s: Scenario, sched: Schedule, n: int = 100_000,
                              seed: int = 0) -> np.ndarray:
    """Per-period fraction of samples whose shortfall the reserve covers."""
    if n < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {n}")
    cover = np.empty(s.horizon)
    for t in range(s.horizon):
        shortfall = s.expected_dg[t] - sample_dg(s, t, n, seed)
        # solver round-off may leave the reserve a hair under the grid value
        cover[t] = np.mean(sched.reserve_total[t] + 1e-9 >= shortfall)
    return cover


def _bin_samples(x: np.ndarray, q: float, n_bins: int, top: float) -> np.ndarray:
    # nearest grid point, except that output at the top of the support is
    # folded into the last bin as the discretizer does
    idx = np.clip(np.floor(x / q + 0.5), 0, n_bins - 1).astype(int)
    idx[x >= top] = n_bins - 1
    return np.bincount(idx, minlength=n_bins) / x.size


def audit_discretization(params: Union[WindParams, PvParams, None], q: float,
                         n: int = 100_000, seed: int = 0) -> float:
    """Kolmogorov distance between sampled output, histogrammed on the grid, and
    the discretized sequence."""
    if n < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {n}")
    u = period_rng(seed, 0).random(n)
    if isinstance(params, PvParams):
        seq, x, top = discretize_pv(params, q), sample_pv(params, u), params.p_max_pv
    else:
        seq, x = discretize_wind(params, q), sample_wind(params, u)
        top = params.p_s if params is not None else np.inf
    hist = _bin_samples(x, q, len(seq.probs), top)
    return float(np.max(np.abs(np.cumsum(hist) - seq.cdf())))


# -- constraint replay -----------------------------------------------------------

@dataclass
class ValidationReport:
    residuals: Dict[str, float]
    tol: float
    seed: Optional[int] = None
    alpha: Optional[float] = None
    coverage: Optional[np.ndarray] = None
    coverage_allowance: float = MC_ALLOWANCE
    mc_samples: int = 0
    verdicts: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self.refresh()

    def refresh(self):
        self.verdicts = {k: bool(v <= self.tol) for k, v in self.residuals.items()}
        if self.coverage is not None:
            floor = self.alpha - self.coverage_allowance
            self.verdicts["reserve_coverage"] = bool(np.all(self.coverage >= floor))

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def failures(self):
        return sorted(k for k, ok in self.verdicts.items() if not ok)

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "tolerance": self.tol,
            "residuals": dict(sorted(self.residuals.items())),
            "verdicts": dict(sorted(self.verdicts.items())),
        }
        if self.coverage is not None:
            out.update(alpha=self.alpha, seed=self.seed, mc_samples=self.mc_samples,
                       coverage_allowance=self.coverage_allowance,
                       coverage=[float(c) for c in self.coverage])
        return out


class _Residuals(dict):
    def add(self, family: str, values):
        v = np.asarray(values, dtype=float)
        worst = float(np.max(v)) if v.size else 0.0
        self[family] = max(self.get(family, 0.0), worst, 0.0)


def _above(x, hi):
    return np.asarray(x) - hi


def _below(x, lo):
    return lo - np.asarray(x)


def validate_schedule(s: Scenario, sched: Schedule, tol: float = DEFAULT_TOL,
                      mc_samples: int = 0, seed: int = 0) -> ValidationReport:
    """Replay every constraint family and report its largest residual (MW, MWh or degC)."""
    T, dt = s.horizon, s.dt
    if sched.horizon != T:
        raise ValueError(f"schedule has {sched.horizon} periods, scenario {T}")
    if sched.thermal_p.shape != (len(s.thermal_units), T) or sched.chp_pe.shape != (len(s.chp_units), T):
        raise ValueError("schedule unit dimensions do not match the scenario")
    if (s.bess is None) != (sched.bess_s is None) or (s.eb is None) != (sched.eb_p is None):
        raise ValueError("schedule devices do not match the scenario")
    res = _Residuals()
    load = np.asarray(s.elec_load, dtype=float)

    # electric and heat balances
    eb_elec = sched.eb_p if sched.eb_p is not None else np.zeros(T)
    supply = sched.thermal_p.sum(0) + sched.chp_pe.sum(0) + sched.renewable_used
    if sched.bess_s is not None:
        supply = supply + sched.bess_dc - sched.bess_ch
    res.add("electric_balance", np.abs(supply - load - eb_elec))

    heat = sched.chp_ph.sum(0).copy()
    for i, u in enumerate(s.chp_units):
        if u.hst is not None:
            heat += sched.hst_pc[i]
    if s.eb is not None:
        e = s.eb
        heat += np.array([eb_heat_output(e, float(np.clip(p, 0.0, e.p_eb_max))) for p in eb_elec])
        res.add("eb_bounds", _below(eb_elec, 0.0))
        res.add("eb_bounds", _above(eb_elec, e.p_eb_max))
    res.add("heat_balance", np.abs(heat - sched.heat_load))

    # building
    t_prev = s.setpoint
    demand = np.empty(T)
    for t in range(T):
        demand[t] = heating_demand(s.building, sched.indoor_temp[t], t_prev, s.t_outdoor[t], dt)
        t_prev = sched.indoor_temp[t]
    res.add("heat_load_model", np.abs(demand - sched.heat_load))
    res.add("heat_load_model", _below(sched.heat_load, 0.0))
    lo, hi = temperature_bounds(s)
    res.add("comfort", _below(sched.indoor_temp, lo))
    res.add("comfort", _above(sched.indoor_temp, hi))

    # thermal units
    for i, u in enumerate(s.thermal_units):
        p, r = sched.thermal_p[i], sched.thermal_r[i]
        res.add("unit_bounds", _below(p, u.p_min))
        res.add("unit_bounds", _above(p, u.p_max))
        res.add("reserve_caps", _below(r, 0.0))
        res.add("reserve_caps", p + r - u.p_max)
        res.add("ramps", np.diff(p) - u.ramp_up * dt)
        res.add("ramps", -np.diff(p) - u.ramp_down * dt)

    # CHP units and their tanks
    for i, u in enumerate(s.chp_units):
        pe, ph, re = sched.chp_pe[i], sched.chp_ph[i], sched.chp_re[i]
        res.add("unit_bounds", _below(pe, u.pe_min))
        res.add("unit_bounds", _above(pe, u.pe_max))
        res.add("unit_bounds", _below(ph, 0.0))
        res.add("unit_bounds", _above(ph, u.ph_max))
        if u.back_pressure_offset is not None:
            res.add("unit_bounds", u.c_m * ph - u.back_pressure_offset - pe)
        res.add("reserve_caps", _below(re, 0.0))
        res.add("reserve_caps", pe + re - u.pe_max)
        res.add("ramps", np.diff(pe) - u.ramp_up * dt)
        res.add("ramps", -np.diff(pe) - u.ramp_down * dt)
        if u.hst is None:
            continue
        h = u.hst
        pc, c = sched.hst_pc[i], sched.hst_c[i]
        res.add("storage_bounds", np.abs(pc) - h.p_c_max)
        res.add("storage_bounds", _below(c, h.c_min))
        res.add("storage_bounds", _above(c, h.c_max))
        prev = h.c_min
        for t in range(T):
            step = float(np.clip(pc[t], -h.p_c_max, h.p_c_max))
            res.add("storage_dynamics", abs(c[t] - hst_step(h, prev, step, dt)))
            prev = c[t]
        res.add("terminal_state", abs(c[-1] - h.c_min))

    # battery
    if s.bess is not None:
        b = s.bess
        ch, dc, soc, rb = sched.bess_ch, sched.bess_dc, sched.bess_s, sched.bess_r
        for x in (ch, dc, rb):
            res.add("storage_bounds", _below(x, 0.0))
            res.add("storage_bounds", _above(x, b.p_max))
        res.add("storage_bounds", _below(soc, b.s_min))
        res.add("storage_bounds", _above(soc, b.s_max))
        res.add("storage_exclusion", np.minimum(ch, dc))
        prev = b.s_min
        for t in range(T):
            nxt = bess_step(b, prev, float(np.clip(ch[t], 0, b.p_max)),
                            float(np.clip(dc[t], 0, b.p_max)), dt)
            res.add("storage_dynamics", abs(soc[t] - nxt))
            prev = soc[t]
        res.add("terminal_state", abs(soc[-1] - b.s_min))
        res.add("reserve_caps", rb - b.eff_dc * (soc - b.s_min) / dt)
        res.add("reserve_caps", rb + dc - b.p_max)

    # renewables and the reserve requirement
    res.add("renewable_bounds", _below(sched.renewable_used, 0.0))
    res.add("renewable_bounds", sched.renewable_used - s.expected_dg)
    parts = sched.thermal_r.sum(0) + sched.chp_re.sum(0)
    if sched.bess_r is not None:
        parts = parts + sched.bess_r
    res.add("reserve_requirement", np.abs(parts - sched.reserve_total))
    need = np.array([required_reserve(s, t) for t in range(T)])
    res.add("reserve_requirement", need - sched.reserve_total)

    report = ValidationReport(dict(res), tol)
    if mc_samples and s.features.uncertainty:
        report.coverage = monte_carlo_reserve_check(s, sched, mc_samples, seed)
        report.alpha, report.seed, report.mc_samples = s.alpha, seed, mc_samples
        report.refresh()
    return report
