"""Embedded LP/MILP solving: simplex relaxation plus best-first branch and bound."""

from __future__ import annotations

import heapq
import logging
import math
import time
from typing import Dict, Optional, Tuple

import numpy as np

from .model import LpResult, MilpModel, MilpResult, SolveOptions, Status
from .simplex import BasisState, BoundedSimplex, SingularBasis

log = logging.getLogger(__name__)


def _engine(model: MilpModel, opts: SolveOptions) -> Tuple[BoundedSimplex, object]:
    model.validate()
    arr = model.to_arrays()
    eng = BoundedSimplex(arr.A, arr.c, arr.lb, arr.ub, arr.row_lb, arr.row_ub,
                         feas_tol=opts.feasibility_tol, opt_tol=opts.feasibility_tol)
    return eng, arr


def solve_lp(model: MilpModel, opts: Optional[SolveOptions] = None) -> LpResult:
    """Solve the continuous relaxation (integrality flags are ignored)."""
    opts = opts or SolveOptions()
    eng, arr = _engine(model, opts)
    try:
        status = eng.primal(max_iter=opts.lp_iteration_limit)
    except SingularBasis:
        status = Status.NUMERICAL
    if status != Status.OPTIMAL:
        return LpResult(status, iterations=eng.iterations)
    return LpResult(status, eng.objective() + arr.constant, eng.structural(),
                    eng.row_duals(), eng.iterations)


class _Node:
    __slots__ = ("bound", "seq", "changes", "basis", "depth")

    def __init__(self, bound, seq, changes, basis, depth):
        self.bound = bound
        self.seq = seq
        self.changes: Dict[int, Tuple[float, float]] = changes
        self.basis: BasisState = basis
        self.depth = depth

    def __lt__(self, other):
        return (self.bound, self.seq) < (other.bound, other.seq)


class BranchAndBound:
    """Best-first branch and bound on the most fractional integer column.

    Children inherit the parent's optimal basis and are re-optimized with the
    dual simplex.  Node order is ``(LP bound, creation index)``, so the search
    is deterministic for identical inputs.
    """

    def __init__(self, model: MilpModel, opts: Optional[SolveOptions] = None):
        self.model = model
        self.opts = opts or SolveOptions()
        self.eng, self.arr = _engine(model, self.opts)
        self.int_idx = np.flatnonzero(self.arr.integer)
        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_obj = math.inf
        self.node_log = []

    def _bounds(self, changes):
        lo, hi = self.arr.lb.copy(), self.arr.ub.copy()
        for j, (a, b) in changes.items():
            lo[j], hi[j] = a, b
        return lo, hi

    def _cold(self, lo, hi):
        eng = self.eng
        eng.lo[: eng.n] = lo
        eng.hi[: eng.n] = hi
        eng.set_slack_basis()
        return eng.primal(max_iter=self.opts.lp_iteration_limit)

    def _solve_node(self, changes, basis: Optional[BasisState]):
        lo, hi = self._bounds(changes)
        eng = self.eng
        if basis is None:
            return self._cold(lo, hi)
        try:
            eng.load(basis, lo, hi)
            if eng.is_dual_feasible():
                status = eng.dual()
            else:
                status = eng.primal(max_iter=self.opts.lp_iteration_limit)
        except SingularBasis:
            status = Status.NUMERICAL
        if status == Status.NUMERICAL:
            log.debug("warm start failed; cold restart")
            status = self._cold(lo, hi)
        return status

    def _cutoff(self):
        if self.incumbent is None:
            return math.inf
        return self.incumbent_obj - self.opts.mip_gap * max(abs(self.incumbent_obj), 1.0)

    def _fractional(self, x):
        if self.int_idx.size == 0:
            return -1, 0.0
        vals = x[self.int_idx]
        frac = np.abs(vals - np.round(vals))
        k = int(np.argmax(frac))      # first index on ties
        return int(self.int_idx[k]), float(frac[k])

    def _try_incumbent(self, changes, x):
        """Fix the integer columns at their rounded values and re-solve."""
        fixed = dict(changes)
        for j in self.int_idx:
            v = float(np.round(x[j]))
            fixed[int(j)] = (v, v)
        status = self._solve_node(fixed, self.eng.snapshot())
        if status != Status.OPTIMAL:
            return False
        obj = self.eng.objective()
        if obj < self.incumbent_obj:
            self.incumbent_obj = obj
            self.incumbent = self.eng.structural()
            for j in self.int_idx:
                self.incumbent[j] = np.round(self.incumbent[j])
        return True

    def solve(self) -> MilpResult:
        opts = self.opts
        t0 = time.monotonic()
        eng = self.eng
        try:
            status = eng.primal(max_iter=opts.lp_iteration_limit)
        except SingularBasis:
            status = Status.NUMERICAL
        if status != Status.OPTIMAL:
            return MilpResult(status, lp_iterations=eng.iterations)

        seq = 0
        heap = [_Node(eng.objective(), seq, {}, None, 0)]
        root_obj = eng.objective()
        nodes = 0
        limited = False
        first = True
        while heap:
            if nodes >= opts.node_limit or time.monotonic() - t0 > opts.time_limit:
                limited = True
                break
            node = heapq.heappop(heap)
            if node.bound >= self._cutoff():
                continue
            nodes += 1
            if first:
                # the engine still holds the root optimum
                status, first = Status.OPTIMAL, False
            else:
                status = self._solve_node(node.changes, node.basis)
            if status == Status.INFEASIBLE:
                self.node_log.append((nodes, node.depth, math.nan, self.incumbent_obj, "infeasible"))
                continue
            if status != Status.OPTIMAL:
                return MilpResult(Status.NUMERICAL, nodes=nodes, lp_iterations=eng.iterations,
                                  node_log=self.node_log)
            obj = eng.objective()
            if obj >= self._cutoff():
                self.node_log.append((nodes, node.depth, obj, self.incumbent_obj, "pruned"))
                continue
            x = eng.structural()
            j, frac = self._fractional(x)
            if frac <= opts.integrality_tol:
                incumbent_before = self.incumbent_obj
                if self._try_incumbent(node.changes, x):
                    self.node_log.append((nodes, node.depth, obj, incumbent_before, "integral"))
                    continue
                if j < 0:
                    continue
            self.node_log.append((nodes, node.depth, obj, self.incumbent_obj, "branch"))
            state = eng.snapshot()
            v = x[j]
            lo_j = node.changes.get(j, (self.arr.lb[j], self.arr.ub[j]))[0]
            hi_j = node.changes.get(j, (self.arr.lb[j], self.arr.ub[j]))[1]
            down = dict(node.changes)
            down[j] = (lo_j, math.floor(v + opts.integrality_tol) if frac <= opts.integrality_tol else math.floor(v))
            up = dict(node.changes)
            up[j] = (math.ceil(v) if frac > opts.integrality_tol else down[j][1] + 1, hi_j)
            for changes in (down, up):
                if changes[j][0] <= changes[j][1]:
                    seq += 1
                    heapq.heappush(heap, _Node(obj, seq, changes, state, node.depth + 1))

        constant = self.arr.constant
        best_bound = min([n.bound for n in heap], default=math.inf)
        if self.incumbent is None:
            status = Status.LIMIT if limited else Status.INFEASIBLE
            return MilpResult(status, nodes=nodes, best_bound=best_bound + constant,
                              lp_iterations=eng.iterations, node_log=self.node_log)
        best_bound = min(best_bound, self.incumbent_obj)
        best_bound = max(best_bound, root_obj)
        gap = (self.incumbent_obj - best_bound) / max(abs(self.incumbent_obj), 1e-10)
        status = Status.FEASIBLE if (limited and gap > opts.mip_gap) else Status.OPTIMAL
        return MilpResult(status, self.incumbent_obj + constant, self.incumbent,
                          max(gap, 0.0), nodes, best_bound + constant, eng.iterations,
                          self.node_log)


def solve(model: MilpModel, opts: Optional[SolveOptions] = None) -> MilpResult:
    return BranchAndBound(model, opts).solve()
