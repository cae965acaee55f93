"""Command-line runs: build, solve, validate and write results.

Every flag can also be set through an environment variable named
``IESCHED_<FLAG>`` (for example ``IESCHED_MC_SAMPLES=20000``); explicit
flags win over the environment.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .harness import validate_schedule
from .milp import SolveOptions, Status, export_lp_file, solve
from .scenario import BUNDLED, ScenarioError, apply_mode, load_scenario
from .scheduler import Schedule, build_model, extract_schedule

log = logging.getLogger("iesched")

RESULTS_SCHEMA_VERSION = 1
ENV_PREFIX = "IESCHED_"
ALPHA_FLOOR = 0.80
ALPHA_STEP = 0.01


@dataclass
class RunConfig:
    scenario: str = "paper_case"
    modes: List[int] = field(default_factory=lambda: [3])
    alphas: List[float] = field(default_factory=lambda: [0.95])
    chance: str = "binary"
    solver: str = "embedded"
    q: Optional[float] = None
    mc_samples: int = 100_000
    seed: int = 0
    out: str = "results"
    time_limit: float = math.inf


def parse_alphas(text: str) -> List[float]:
    """``"0.9,0.95"`` or an inclusive range ``"0.80:0.99:0.01"``."""
    out: List[float] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi, step = (float(x) for x in part.split(":"))
            if step <= 0:
                raise ValueError("alpha range step must be positive")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            out.extend(round(lo + i * step, 10) for i in range(n))
        else:
            out.append(float(part))
    if not out:
        raise ValueError("empty alpha list")
    for a in out:
        if not 0 < a <= 1:
            raise ValueError(f"alpha {a} outside (0, 1]")
    return out


def parse_modes(text: str) -> List[int]:
    if text.strip().lower() == "all":
        return [1, 2, 3, 4, 5, 6]
    modes = [int(x) for x in text.split(",") if x.strip()]
    for m in modes:
        if m not in range(1, 7):
            raise ValueError(f"mode {m} outside 1..6")
    return modes


def _env(name, default):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iesched",
        description="Chance-constrained day-ahead scheduling of a heat-and-power system.")
    p.add_argument("--scenario", default=_env("scenario", "paper_case"),
                   help=f"scenario JSON path or bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--mode", default=_env("mode", "3"), help="1..6, a comma list, or 'all'")
    p.add_argument("--alpha", default=_env("alpha", "0.95"),
                   help="confidence levels: '0.9,0.95' or 'lo:hi:step'")
    p.add_argument("--chance", choices=("binary", "quantile"), default=_env("chance", "binary"))
    p.add_argument("--solver", choices=("embedded", "lp-export"), default=_env("solver", "embedded"))
    p.add_argument("--q", type=float, default=_env("q", None), help="discretization step (MW)")
    p.add_argument("--mc-samples", type=int, default=int(_env("mc_samples", 100_000)),
                   help="Monte Carlo samples per period (0 disables the check)")
    p.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    p.add_argument("--out", default=_env("out", "results"), help="output directory")
    p.add_argument("--time-limit", type=float, default=float(_env("time_limit", math.inf)),
                   help="solver time limit per run (s)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        modes, alphas = parse_modes(a.mode), parse_alphas(a.alpha)
    except ValueError as exc:
        parser.error(str(exc))
    if a.scenario not in BUNDLED and not Path(a.scenario).is_file():
        parser.error(f"scenario file not found: {a.scenario}")
    if a.mc_samples and a.mc_samples < 10_000:
        parser.error("--mc-samples must be 0 or at least 10000")
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    return RunConfig(scenario=a.scenario, modes=modes, alphas=alphas, chance=a.chance,
                     solver=a.solver, q=None if a.q is None else float(a.q),
                     mc_samples=a.mc_samples, seed=a.seed, out=a.out, time_limit=a.time_limit)


# -- output helpers -----------------------------------------------------------------

def _clean(obj):
    """JSON-ready copy: arrays to lists, NaN to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=1, sort_keys=True, allow_nan=False) + "\n",
                    encoding="utf-8")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8")


def schedule_table(s, sched: Schedule):
    cols = {"period": np.arange(1, s.horizon + 1), "elec_load": np.asarray(s.elec_load),
            "t_outdoor": np.asarray(s.t_outdoor), "expected_dg": sched.expected_dg,
            "renewable_used": sched.renewable_used, "curtailment": sched.curtailment}
    for i, u in enumerate(s.thermal_units):
        cols[f"P_{u.name}"] = sched.thermal_p[i]
        cols[f"R_{u.name}"] = sched.thermal_r[i]
    for i, u in enumerate(s.chp_units):
        cols[f"Pe_{u.name}"] = sched.chp_pe[i]
        cols[f"Ph_{u.name}"] = sched.chp_ph[i]
        cols[f"Re_{u.name}"] = sched.chp_re[i]
        if u.hst is not None:
            cols[f"HST_power_{u.name}"] = sched.hst_pc[i]
            cols[f"HST_content_{u.name}"] = sched.hst_c[i]
    if sched.bess_s is not None:
        cols.update(BESS_charge=sched.bess_ch, BESS_discharge=sched.bess_dc,
                    BESS_soc=sched.bess_s, BESS_reserve=sched.bess_r)
    if sched.eb_p is not None:
        cols["EB_power"] = sched.eb_p
    cols.update(indoor_temp=sched.indoor_temp, heat_load=sched.heat_load,
                reserve_total=sched.reserve_total, reserve_required=sched.reserve_required)
    return cols


def _tag(mode, alpha):
    return f"mode{mode}_alpha{alpha:.2f}"


# -- orchestration ------------------------------------------------------------------

def _solve_one(cfg: RunConfig, base, mode: int, alpha: float, out: Path):
    """Solve one (mode, alpha) pair, lowering alpha on infeasibility."""
    attempts = []
    a = alpha
    while True:
        s = apply_mode(base.replace(alpha=a), mode)
        model = build_model(s)
        res = solve(model, SolveOptions(time_limit=cfg.time_limit))
        attempts.append({"alpha": a, "status": res.status.value})
        log.info("mode %d alpha %.2f: %s (%d nodes)", mode, a, res.status.value, res.nodes)
        if res.values is not None:
            return s, model, res, attempts
        retry = res.status == Status.INFEASIBLE and s.features.uncertainty
        a = round(a - ALPHA_STEP, 10)
        if not retry or a < ALPHA_FLOOR - 1e-9:
            return s, model, res, attempts


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        base = load_scenario(cfg.scenario)
        changes = {"chance_formulation": cfg.chance}
        if cfg.q is not None:
            changes["q_step"] = cfg.q
        base = base.replace(**changes)
        for mode in cfg.modes:
            apply_mode(base, mode)      # fail early on missing devices
    except ScenarioError as exc:
        log.error("%s", exc)
        return 2

    if cfg.solver == "lp-export":
        for mode in cfg.modes:
            for alpha in cfg.alphas:
                s = apply_mode(base.replace(alpha=alpha), mode)
                path = out / f"{_tag(mode, alpha)}.lp"
                path.write_text(export_lp_file(build_model(s)), encoding="utf-8")
                log.info("wrote %s", path)
        return 0

    summary = []
    ok_all = True
    for mode in cfg.modes:
        for alpha in cfg.alphas:
            s, model, res, attempts = _solve_one(cfg, base, mode, alpha, out)
            row = {"mode": mode, "alpha_requested": alpha, "alpha_used": s.alpha,
                   "status": res.status.value, "attempts": attempts}
            if res.values is None:
                ok_all = False
                row["passed"] = False
                summary.append(row)
                continue
            sched = extract_schedule(s, model, res)
            report = validate_schedule(s, sched, mc_samples=cfg.mc_samples, seed=cfg.seed)
            ok_all &= report.passed
            tag = _tag(mode, alpha)
            cols = schedule_table(s, sched)
            write_csv(out / f"devices_{tag}.csv", list(cols), zip(*cols.values()))
            write_json(out / f"run_{tag}.json", {
                "schema_version": RESULTS_SCHEMA_VERSION,
                "scenario": s.name, "mode": mode, "alpha_requested": alpha,
                "alpha_used": s.alpha, "chance_formulation": s.chance_formulation,
                "q_step": s.q_step, "attempts": attempts,
                "solver": {"status": res.status.value, "objective": res.objective,
                           "gap": res.gap, "nodes": res.nodes,
                           "lp_iterations": res.lp_iterations},
                "costs": {"linearized": sched.cost_pwl, "quadratic": sched.cost_true},
                "schedule": cols,
                "validation": report.to_dict(),
            })
            row.update(objective=sched.objective, cost_quadratic=sched.cost_true["total"],
                       total_reserve=float(sched.reserve_total.sum()),
                       total_curtailment=sched.total_curtailment,
                       night_curtailment=float(sched.curtailment[:7].sum()),
                       passed=report.passed, failures=report.failures)
            summary.append(row)

    solved = [r for r in summary if "objective" in r]
    write_csv(out / "cost_vs_alpha.csv", ["mode", "alpha", "objective", "cost_quadratic"],
              [(r["mode"], r["alpha_used"], r["objective"], r["cost_quadratic"]) for r in solved])
    write_csv(out / "reserve_vs_alpha.csv", ["mode", "alpha", "total_reserve"],
              [(r["mode"], r["alpha_used"], r["total_reserve"]) for r in solved])
    write_csv(out / "curtailment_by_mode.csv",
              ["mode", "alpha", "total_curtailment", "night_curtailment"],
              [(r["mode"], r["alpha_used"], r["total_curtailment"], r["night_curtailment"])
               for r in solved])
    write_json(out / "summary.json", {"schema_version": RESULTS_SCHEMA_VERSION,
                                      "scenario": base.name, "runs": summary,
                                      "passed": ok_all})
    for r in summary:
        obj = r.get("objective")
        log.info("mode %d alpha %.2f  %-10s %s  %s", r["mode"], r["alpha_used"], r["status"],
                 "-" if obj is None else f"{obj:.2f}", "ok" if r["passed"] else "FAILED")
    return 0 if ok_all else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(config_from_args(argv))


if __name__ == "__main__":
    sys.exit(main())
