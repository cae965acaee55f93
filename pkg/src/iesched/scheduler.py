"""Day-ahead scheduling of the heat-and-power system as a MILP.

Variables per period ``t`` (1-based in names), with ``n`` thermal units,
``N`` CHP units of which ``H`` carry a heat tank, and ``N_t + 1`` bins in the
joint renewable sequence:

===========================  =====================================
thermal unit ``i``           ``P_th{i}_{t}``, ``R_th{i}_{t}``, cost ``F_th{i}_{t}``
CHP unit ``i``               ``Pe_chp{i}_{t}``, ``Ph_chp{i}_{t}``, ``Re_chp{i}_{t}``, cost ``G_chp{i}_{t}``
heat tank on CHP ``i``       ``Hc_chp{i}_{t}`` (positive = release), ``C_chp{i}_{t}``
battery                      ``Bch_{t}``, ``Bdc_{t}``, ``S_{t}``, ``Rb_{t}``, binary ``Bu_{t}``
electric boiler              ``Peb_{t}``
system                       ``Pc_{t}``, ``Tin_{t}``, ``Pl_{t}``, ``Rtot_{t}``
binary chance formulation    ``z_{t}_{m}`` for ``m = 0..N_t``
===========================  =====================================

so the column count is ``sum_t [3n + 4N + 2H + 5 b + e + 4 + (N_t + 1) u]``
with ``b``/``e`` the battery/boiler indicators and ``u`` = 1 only for the
binary chance formulation with uncertainty switched on.  :func:`census`
evaluates the same sum from a scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .building import demand_coefficients
from .devices import chp_condensing_power
from .milp import MilpModel, MilpResult, SolveOptions, Status, solve
from .probseq import TAIL_TOL, ProbSeq, quantile_reserve
from .scenario import Scenario


# -- cost linearization --------------------------------------------------------

def pwl_segments(a: float, b: float, c: float, p_min: float, p_max: float,
                 k: int) -> List[Tuple[float, float]]:
    """Secants of ``a P^2 + b P + c`` through ``k + 1`` equally spaced points.

    Returns ``(slope, intercept)`` pairs.  Their upper envelope is exact at the
    breakpoints and exceeds the parabola by at most ``a (dP)^2 / 4`` between
    them, ``dP`` being the breakpoint spacing.
    """
    if a < 0:
        raise ValueError("quadratic cost must be convex (a >= 0)")
    if k < 1:
        raise ValueError("need at least one segment")
    if not p_min < p_max:
        raise ValueError(f"need p_min < p_max, got {p_min}, {p_max}")
    if a == 0:
        return [(b, c)]
    xs = np.linspace(p_min, p_max, k + 1)
    f = a * xs * xs + b * xs + c
    out = []
    for j in range(k):
        slope = (f[j + 1] - f[j]) / (xs[j + 1] - xs[j])
        out.append((float(slope), float(f[j] - slope * xs[j])))
    return out


def pwl_value(segs: Sequence[Tuple[float, float]], x: float) -> float:
    return max(s * x + i for s, i in segs)


def chp_cost_range(u) -> Tuple[float, float]:
    """Range of the condensing-equivalent power ``Pe + c_v (Ph + Hc)``."""
    pc = u.hst.p_c_max if u.hst is not None else 0.0
    return u.pe_min - u.c_v * pc, u.pe_max + u.c_v * (u.ph_max + pc)


# -- chance constraint -----------------------------------------------------------

def chance_constraint_rows(model: MilpModel, reserve: int, c_seq: ProbSeq, e_t: float,
                           alpha: float, big_l: float, tag: str = "") -> List[int]:
    """Binary deterministic equivalent of ``P{reserve >= e_t - DG} >= alpha``.

    ``z_m = 1`` marks that the reserve covers the shortfall when the
    renewables deliver ``m q``.  Besides the two big-L rows per bin and the
    coverage row, monotonicity rows ``z_m <= z_{m+1}`` and the aggregate row
    ``reserve >= e_t - q * sum_m (1 - z_m)`` are added, and bins from the
    confidence threshold upward get lower bound 1.  All of these are implied
    by the integer solutions; they only tighten the relaxation.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not big_l > 0:
        raise ValueError("big_l must be positive")
    q = c_seq.step_q
    probs = c_seq.probs
    # With z monotone, z_k = 0 zeroes every lower bin, so coverage forces
    # z_k = 1 whenever the tail below k alone cannot reach alpha.
    k_alpha = int(np.flatnonzero(c_seq.tail() >= alpha - TAIL_TOL)[-1])
    zs = [model.add_var(f"z{tag}_{m}", 1.0 if m >= k_alpha else 0.0, 1.0, integer=True)
          for m in range(len(probs))]
    for m, z in enumerate(zs):
        # (R + m q - E) / L <= z   and   z <= 1 + (R + m q - E) / L
        model.add_constraint({reserve: 1.0, z: -big_l}, "<=", e_t - m * q, f"zlo{tag}_{m}")
        model.add_constraint({reserve: 1.0, z: -big_l}, ">=", e_t - m * q - big_l, f"zhi{tag}_{m}")
    model.add_constraint({z: float(p) for z, p in zip(zs, probs)}, ">=", alpha - TAIL_TOL,
                         f"cover{tag}")
    for m in range(len(zs) - 1):
        model.add_constraint({zs[m]: 1.0, zs[m + 1]: -1.0}, "<=", 0.0, f"zmono{tag}_{m}")
    agg = {z: -q for z in zs}
    agg[reserve] = 1.0
    model.add_constraint(agg, ">=", e_t - q * len(zs), f"zagg{tag}")
    return zs


def reserve_capability(s: Scenario) -> float:
    cap = sum(u.p_max for u in s.thermal_units) + sum(u.pe_max for u in s.chp_units)
    if s.bess is not None:
        cap += s.bess.p_max
    return cap


def required_reserve(s: Scenario, t: int) -> float:
    """Smallest total reserve (MW) period ``t`` (0-based) must carry."""
    e = float(s.expected_dg[t])
    if not s.features.uncertainty:
        return s.reserve_fraction * max(0.0, s.elec_load[t] - e)
    return quantile_reserve(s.dg_sequences[t], s.alpha, e)


# -- model ---------------------------------------------------------------------------

def _uses_z(s: Scenario) -> bool:
    return s.features.uncertainty and s.chance_formulation == "binary"


def census(s: Scenario) -> Dict[str, int]:
    """Column counts by family, matching the table in the module docstring."""
    n, T = len(s.thermal_units), s.horizon
    N = len(s.chp_units)
    H = sum(u.hst is not None for u in s.chp_units)
    out = {
        "thermal": 3 * n * T,
        "chp": 4 * N * T,
        "hst": 2 * H * T,
        "bess": 5 * T if s.bess is not None else 0,
        "eb": T if s.eb is not None else 0,
        "system": 4 * T,
        "chance": sum(len(c.probs) for c in s.dg_sequences) if _uses_z(s) else 0,
    }
    out["total"] = sum(out.values())
    return out


def temperature_bounds(s: Scenario) -> Tuple[float, float]:
    if not s.features.inertia:
        return s.setpoint, s.setpoint
    if s.inertia_style == "support":
        return s.comfort.t_a, s.comfort.t_d
    return s.comfort.t_b, s.comfort.t_c


def build_model(s: Scenario) -> MilpModel:
    """Assemble the scheduling MILP for a (mode-applied) scenario."""
    m = MilpModel(s.name if s.name.isidentifier() else "schedule")
    T, dt = s.horizon, s.dt
    big_cap = reserve_capability(s)
    a_now, a_prev, a_od = demand_coefficients(s.building, dt)
    t_lo, t_hi = temperature_bounds(s)
    segs_th = [pwl_segments(u.a, u.b, u.c, u.p_min, u.p_max, s.pwl_segments)
               for u in s.thermal_units]
    segs_chp = [pwl_segments(u.a, u.b, u.c, *chp_cost_range(u), s.pwl_segments)
                for u in s.chp_units]
    obj: Dict[int, float] = {}
    prev: Dict[str, int] = {}

    for t in range(1, T + 1):
        k = t - 1
        load = s.elec_load[k]
        e_t = float(s.expected_dg[k])
        elec: Dict[int, float] = {}     # supply side of the electric balance
        heat: Dict[int, float] = {}
        rtot_terms: Dict[int, float] = {}

        for i, u in enumerate(s.thermal_units):
            p = m.add_var(f"P_th{i}_{t}", u.p_min, u.p_max)
            r = m.add_var(f"R_th{i}_{t}", 0.0, u.p_max - u.p_min)
            f = m.add_var(f"F_th{i}_{t}", -math.inf, math.inf)
            m.add_constraint({p: 1.0, r: 1.0}, "<=", u.p_max, f"rcap_th{i}_{t}")
            for j, (sl, ic) in enumerate(segs_th[i]):
                m.add_constraint({f: 1.0, p: -sl}, ">=", ic, f"cost_th{i}_{t}_{j}")
            if t > 1:
                q0 = prev[f"P_th{i}"]
                m.add_constraint({p: 1.0, q0: -1.0}, "<=", u.ramp_up * dt, f"rup_th{i}_{t}")
                m.add_constraint({p: 1.0, q0: -1.0}, ">=", -u.ramp_down * dt, f"rdn_th{i}_{t}")
            prev[f"P_th{i}"] = p
            obj[f] = 1.0
            obj[r] = u.reserve_cost
            elec[p] = 1.0
            rtot_terms[r] = 1.0

        for i, u in enumerate(s.chp_units):
            pe = m.add_var(f"Pe_chp{i}_{t}", u.pe_min, u.pe_max)
            ph = m.add_var(f"Ph_chp{i}_{t}", 0.0, u.ph_max)
            re = m.add_var(f"Re_chp{i}_{t}", 0.0, u.pe_max - u.pe_min)
            g = m.add_var(f"G_chp{i}_{t}", -math.inf, math.inf)
            m.add_constraint({pe: 1.0, re: 1.0}, "<=", u.pe_max, f"rcap_chp{i}_{t}")
            cost_arg = {pe: 1.0, ph: u.c_v}
            if u.hst is not None:
                h = u.hst
                hc = m.add_var(f"Hc_chp{i}_{t}", -h.p_c_max, h.p_c_max)
                last = t == T
                c = m.add_var(f"C_chp{i}_{t}", h.c_min, h.c_min if last else h.c_max)
                # C_t = C_{t-1} - Hc_t dt, with C_0 = c_min
                if t == 1:
                    m.add_constraint({c: 1.0, hc: dt}, "=", h.c_min, f"hst_chp{i}_{t}")
                else:
                    m.add_constraint({c: 1.0, prev[f"C_chp{i}"]: -1.0, hc: dt}, "=", 0.0,
                                     f"hst_chp{i}_{t}")
                prev[f"C_chp{i}"] = c
                cost_arg[hc] = u.c_v
                heat[hc] = 1.0
            for j, (sl, ic) in enumerate(segs_chp[i]):
                row = {g: 1.0}
                for v, a in cost_arg.items():
                    row[v] = -sl * a
                m.add_constraint(row, ">=", ic, f"cost_chp{i}_{t}_{j}")
            if u.back_pressure_offset is not None:
                m.add_constraint({pe: 1.0, ph: -u.c_m}, ">=", -u.back_pressure_offset,
                                 f"bp_chp{i}_{t}")
            if t > 1:
                q0 = prev[f"Pe_chp{i}"]
                m.add_constraint({pe: 1.0, q0: -1.0}, "<=", u.ramp_up * dt, f"rup_chp{i}_{t}")
                m.add_constraint({pe: 1.0, q0: -1.0}, ">=", -u.ramp_down * dt, f"rdn_chp{i}_{t}")
            prev[f"Pe_chp{i}"] = pe
            obj[g] = 1.0
            obj[re] = u.reserve_cost
            elec[pe] = 1.0
            heat[ph] = 1.0
            rtot_terms[re] = 1.0

        if s.bess is not None:
            b = s.bess
            ch = m.add_var(f"Bch_{t}", 0.0, b.p_max)
            dc = m.add_var(f"Bdc_{t}", 0.0, b.p_max)
            soc = m.add_var(f"S_{t}", b.s_min, b.s_min if t == T else b.s_max)
            rb = m.add_var(f"Rb_{t}", 0.0, b.p_max)
            bu = m.add_binary(f"Bu_{t}")
            row = {soc: 1.0, ch: -b.eff_ch * dt, dc: dt / b.eff_dc}
            if t == 1:
                m.add_constraint(row, "=", b.s_min, f"soc_{t}")
            else:
                row[prev["S"]] = -1.0
                m.add_constraint(row, "=", 0.0, f"soc_{t}")
            prev["S"] = soc
            # one direction per period
            m.add_constraint({ch: 1.0, bu: -b.p_max}, "<=", 0.0, f"bch_{t}")
            m.add_constraint({dc: 1.0, bu: b.p_max}, "<=", b.p_max, f"bdc_{t}")
            m.add_constraint({rb: 1.0, soc: -b.eff_dc / dt}, "<=", -b.eff_dc * b.s_min / dt,
                             f"rbs_{t}")
            m.add_constraint({rb: 1.0, dc: 1.0}, "<=", b.p_max, f"rbp_{t}")
            obj[dc] = b.cost_dc
            obj[ch] = -b.cost_ch
            obj[rb] = b.reserve_cost
            elec[dc] = 1.0
            elec[ch] = -1.0
            rtot_terms[rb] = 1.0

        pc = m.add_var(f"Pc_{t}", 0.0, e_t)
        elec[pc] = 1.0
        if s.eb is not None:
            peb = m.add_var(f"Peb_{t}", 0.0, s.eb.p_eb_max)
            elec[peb] = -1.0
            heat[peb] = s.eb.eff
        m.add_constraint(elec, "=", load, f"ebal_{t}")

        tin = m.add_var(f"Tin_{t}", t_lo, t_hi)
        pl = m.add_var(f"Pl_{t}", 0.0, math.inf)
        heat[pl] = -1.0
        m.add_constraint(heat, "=", 0.0, f"hbal_{t}")
        # Pl = a_now Tin_t + a_prev Tin_{t-1} + a_od Tod_t
        row = {pl: 1.0, tin: -a_now}
        rhs = a_od * s.t_outdoor[k]
        if t == 1:
            rhs += a_prev * s.setpoint
        else:
            row[prev["Tin"]] = -a_prev
        m.add_constraint(row, "=", rhs, f"bldg_{t}")
        prev["Tin"] = tin

        rtot = m.add_var(f"Rtot_{t}", 0.0, math.inf)
        rtot_terms[rtot] = -1.0
        m.add_constraint(rtot_terms, "=", 0.0, f"rsum_{t}")
        if _uses_z(s):
            big_l = e_t + big_cap + s.q_step
            chance_constraint_rows(m, rtot, s.dg_sequences[k], e_t, s.alpha, big_l, f"_{t}")
        else:
            m.add_constraint({rtot: 1.0}, ">=", required_reserve(s, k), f"rreq_{t}")

    m.add_objective(obj)
    return m


# -- results -------------------------------------------------------------------------

@dataclass
class Schedule:
    """Per-period dispatch.  Arrays are indexed ``[unit, period]`` or ``[period]``."""

    thermal_p: np.ndarray
    thermal_r: np.ndarray
    chp_pe: np.ndarray
    chp_ph: np.ndarray
    chp_re: np.ndarray
    hst_pc: np.ndarray          # NaN rows for CHP units without a tank
    hst_c: np.ndarray
    bess_ch: Optional[np.ndarray]
    bess_dc: Optional[np.ndarray]
    bess_s: Optional[np.ndarray]
    bess_r: Optional[np.ndarray]
    eb_p: Optional[np.ndarray]
    renewable_used: np.ndarray
    expected_dg: np.ndarray
    indoor_temp: np.ndarray
    heat_load: np.ndarray
    reserve_total: np.ndarray
    reserve_required: np.ndarray
    objective: float
    cost_pwl: Dict[str, float]
    cost_true: Dict[str, float]
    status: str = "optimal"
    gap: float = 0.0
    nodes: int = 0
    alpha: float = math.nan
    mode: Optional[int] = None
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def curtailment(self) -> np.ndarray:
        return np.maximum(self.expected_dg - self.renewable_used, 0.0)

    @property
    def total_curtailment(self) -> float:
        return float(self.curtailment.sum())

    @property
    def horizon(self) -> int:
        return len(self.renewable_used)


def true_costs(s: Scenario, sched: Schedule) -> Dict[str, float]:
    """Cost decomposition with the exact quadratic fuel curves."""
    c1 = 0.0
    for i, u in enumerate(s.thermal_units):
        p = sched.thermal_p[i]
        c1 += float(np.sum(u.a * p * p + u.b * p + u.c) + u.reserve_cost * np.sum(sched.thermal_r[i]))
    c2 = 0.0
    for i, u in enumerate(s.chp_units):
        hc = sched.hst_pc[i] if u.hst is not None else 0.0
        x = chp_condensing_power(u, sched.chp_pe[i], sched.chp_ph[i] + hc)
        c2 += float(np.sum(u.a * x * x + u.b * x + u.c) + u.reserve_cost * np.sum(sched.chp_re[i]))
    c3 = 0.0
    if s.bess is not None:
        b = s.bess
        c3 = float(b.cost_dc * np.sum(sched.bess_dc) - b.cost_ch * np.sum(sched.bess_ch)
                   + b.reserve_cost * np.sum(sched.bess_r))
    return {"C1": c1, "C2": c2, "C3": c3, "total": c1 + c2 + c3}


def pwl_gap_bound(s: Scenario) -> float:
    """Largest possible excess of the linearized over the true objective."""
    k = s.pwl_segments
    tot = 0.0
    for u in s.thermal_units:
        tot += u.a * ((u.p_max - u.p_min) / k) ** 2 / 4
    for u in s.chp_units:
        lo, hi = chp_cost_range(u)
        tot += u.a * ((hi - lo) / k) ** 2 / 4
    return tot * s.horizon


def extract_schedule(s: Scenario, model: MilpModel, result: MilpResult) -> Schedule:
    if result.values is None or result.status not in (Status.OPTIMAL, Status.FEASIBLE):
        raise ValueError(f"no solution to extract (status {result.status.value})")
    x = result.values
    T = s.horizon
    nth, nchp = len(s.thermal_units), len(s.chp_units)

    def get(name):
        if not model.has_var(name):
            raise KeyError(f"model has no variable {name!r}")
        return float(x[model.index(name)])

    def series(fmt):
        return np.array([get(fmt.format(t=t)) for t in range(1, T + 1)])

    def grid(fmt, n):
        return np.array([[get(fmt.format(i=i, t=t)) for t in range(1, T + 1)] for i in range(n)]
                        ).reshape(n, T)

    hst_pc = np.full((nchp, T), np.nan)
    hst_c = np.full((nchp, T), np.nan)
    for i, u in enumerate(s.chp_units):
        if u.hst is not None:
            hst_pc[i] = series(f"Hc_chp{i}_{{t}}")
            hst_c[i] = series(f"C_chp{i}_{{t}}")
    has_b = s.bess is not None
    sched = Schedule(
        thermal_p=grid("P_th{i}_{t}", nth), thermal_r=grid("R_th{i}_{t}", nth),
        chp_pe=grid("Pe_chp{i}_{t}", nchp), chp_ph=grid("Ph_chp{i}_{t}", nchp),
        chp_re=grid("Re_chp{i}_{t}", nchp), hst_pc=hst_pc, hst_c=hst_c,
        bess_ch=series("Bch_{t}") if has_b else None,
        bess_dc=series("Bdc_{t}") if has_b else None,
        bess_s=series("S_{t}") if has_b else None,
        bess_r=series("Rb_{t}") if has_b else None,
        eb_p=series("Peb_{t}") if s.eb is not None else None,
        renewable_used=series("Pc_{t}"),
        expected_dg=np.asarray(s.expected_dg, dtype=float).copy(),
        indoor_temp=series("Tin_{t}"), heat_load=series("Pl_{t}"),
        reserve_total=series("Rtot_{t}"),
        reserve_required=np.array([required_reserve(s, k) for k in range(T)]),
        objective=float(result.objective), cost_pwl={}, cost_true={},
        status=result.status.value, gap=float(result.gap), nodes=int(result.nodes),
        alpha=s.alpha, mode=s.mode,
    )
    c1 = float(sum(get(f"F_th{i}_{t}") for i in range(nth) for t in range(1, T + 1))
               + sum(u.reserve_cost * sched.thermal_r[i].sum() for i, u in enumerate(s.thermal_units)))
    c2 = float(sum(get(f"G_chp{i}_{t}") for i in range(nchp) for t in range(1, T + 1))
               + sum(u.reserve_cost * sched.chp_re[i].sum() for i, u in enumerate(s.chp_units)))
    c3 = true_costs(s, sched)["C3"]
    sched.cost_pwl = {"C1": c1, "C2": c2, "C3": c3, "total": c1 + c2 + c3}
    sched.cost_true = true_costs(s, sched)
    return sched


def schedule(s: Scenario, opts: Optional[SolveOptions] = None) -> Tuple[Schedule, MilpResult]:
    """Build, solve and extract.  Raises ``RuntimeError`` if no solution exists."""
    model = build_model(s)
    res = solve(model, opts)
    if res.values is None:
        raise RuntimeError(f"scheduling problem not solved: {res.status.value}")
    return extract_schedule(s, model, res), res
