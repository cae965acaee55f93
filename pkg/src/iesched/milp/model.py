"""Solver-agnostic mixed-integer linear program."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np
import scipy.sparse as sp

INF = math.inf
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]{0,254}$")
SENSES = ("<=", ">=", "=")


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"          # limit reached with an incumbent
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit_reached"        # limit reached without an incumbent
    NUMERICAL = "numerical_failure"


@dataclass
class Constraint:
    coeffs: Dict[int, float]
    sense: str
    rhs: float
    name: str


@dataclass
class SolveOptions:
    mip_gap: float = 1e-6
    time_limit: float = INF
    feasibility_tol: float = 1e-9
    node_limit: int = 100_000
    integrality_tol: float = 1e-6
    lp_iteration_limit: int = 200_000

    def __post_init__(self):
        for name in ("mip_gap", "time_limit", "feasibility_tol", "integrality_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")


@dataclass
class LpArrays:
    """Dense/sparse view used by the solvers: ``row_lb <= A x <= row_ub``."""

    A: sp.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    constant: float


class MilpModel:
    """Variables with bounds and integrality, linear rows, linear objective.

    Built incrementally by the scheduler and treated as read-only once handed
    to a solver.  The objective is always minimized.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: List[str] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.integer: List[bool] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self.obj_constant = 0.0
        self._index: Dict[str, int] = {}

    # -- building -----------------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = INF,
                integer: bool = False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        if lb > ub:
            raise ValueError(f"variable {name!r}: lower bound {lb} exceeds upper bound {ub}")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(integer))
        self._index[name] = idx
        return idx

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True)

    def add_constraint(self, coeffs: Mapping[int, float] | Iterable, sense: str,
                       rhs: float, name: Optional[str] = None) -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown constraint sense {sense!r}")
        if not math.isfinite(rhs):
            raise ValueError("constraint right-hand side must be finite")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: Dict[int, float] = {}
        for j, a in items:
            if not 0 <= j < len(self.var_names):
                raise IndexError(f"constraint references unknown variable {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        merged = {j: a for j, a in merged.items() if a != 0.0}
        name = name or f"c{len(self.constraints)}"
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid constraint name {name!r}")
        self.constraints.append(Constraint(merged, sense, float(rhs), name))
        return len(self.constraints) - 1

    def add_objective(self, coeffs: Mapping[int, float], constant: float = 0.0):
        for j, a in coeffs.items():
            self.objective[j] = self.objective.get(j, 0.0) + float(a)
        self.obj_constant += constant

    # -- queries ------------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def num_integer(self) -> int:
        return sum(self.integer)

    def index(self, name: str) -> int:
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    def validate(self):
        for j, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if lo > hi or math.isnan(lo) or math.isnan(hi):
                raise ValueError(f"variable {self.var_names[j]!r} has inconsistent bounds")
        n = self.num_vars
        for con in self.constraints:
            if any(not 0 <= j < n for j in con.coeffs):
                raise ValueError(f"constraint {con.name!r} references a missing variable")
            if not math.isfinite(con.rhs):
                raise ValueError(f"constraint {con.name!r} has a non-finite rhs")

    def to_arrays(self) -> LpArrays:
        rows, cols, vals = [], [], []
        row_lb = np.empty(self.num_constraints)
        row_ub = np.empty(self.num_constraints)
        for i, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
            row_lb[i] = con.rhs if con.sense in (">=", "=") else -INF
            row_ub[i] = con.rhs if con.sense in ("<=", "=") else INF
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.num_constraints, self.num_vars))
        c = np.zeros(self.num_vars)
        for j, a in self.objective.items():
            c[j] = a
        return LpArrays(A, row_lb, row_ub, c, np.array(self.lb, dtype=float),
                        np.array(self.ub, dtype=float), np.array(self.integer, dtype=bool),
                        self.obj_constant)

    def objective_value(self, x) -> float:
        return self.obj_constant + sum(a * x[j] for j, a in self.objective.items())

    def max_violation(self, x) -> float:
        """Largest bound or row violation of the point ``x`` (replayed row by row)."""
        worst = 0.0
        for j, v in enumerate(x):
            worst = max(worst, self.lb[j] - v, v - self.ub[j])
        for con in self.constraints:
            act = sum(a * x[j] for j, a in con.coeffs.items())
            if con.sense == "<=":
                worst = max(worst, act - con.rhs)
            elif con.sense == ">=":
                worst = max(worst, con.rhs - act)
            else:
                worst = max(worst, abs(act - con.rhs))
        return worst


@dataclass
class LpResult:
    status: Status
    objective: float = math.nan
    values: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0


@dataclass
class MilpResult:
    status: Status
    objective: float = math.nan
    values: Optional[np.ndarray] = None
    gap: float = math.inf
    nodes: int = 0
    best_bound: float = -math.inf
    lp_iterations: int = 0
    node_log: List[tuple] = field(default_factory=list)

    def value_of(self, model: MilpModel, name: str) -> float:
        return float(self.values[model.index(name)])
