"""Bounded-variable revised simplex (primal and dual).

Every row ``row_lb <= a_i x <= row_ub`` gets a logical variable ``s_i`` so the
working system is ``[A, -I] (x, s) = 0`` with simple bounds on all columns.
The basis is factorized with a sparse LU and updated with a product-form eta
file between refactorizations.

Primal phase 1 minimizes the sum of bound infeasibilities of the basic
variables; the ratio test stops at the first breakpoint, so the phase-1
objective falls at a constant rate over every step.  Phase 2 uses Dantzig
pricing with a Harris two-pass ratio test and falls back to Bland's rule
after a run of degenerate pivots.  The dual simplex re-optimizes a dual
feasible basis after bound changes (branch-and-bound children).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import Status

BASIC, AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3, 4

REFACTOR_EVERY = 80
DEGENERATE_RUN = 60
PIVOT_TOL = 1e-9


class SingularBasis(RuntimeError):
    pass


@dataclass
class BasisState:
    """Restorable snapshot of a basis: header plus nonbasic bound statuses."""

    basis: np.ndarray
    status: np.ndarray


class BoundedSimplex:
    def __init__(self, A, c, lb, ub, row_lb, row_ub, feas_tol=1e-9, opt_tol=1e-9):
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n, self.N = m, n, n + m
        self.A = sp.hstack([A, -sp.identity(m, format="csr")], format="csc")
        self.AT = self.A.T.tocsr()
        self.cost = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.lo = np.concatenate([np.asarray(lb, dtype=float), np.asarray(row_lb, dtype=float)])
        self.hi = np.concatenate([np.asarray(ub, dtype=float), np.asarray(row_ub, dtype=float)])
        self.ftol = feas_tol
        self.dtol = opt_tol
        self.iterations = 0
        self.x = np.zeros(self.N)
        self.status = np.zeros(self.N, dtype=np.int8)
        self.basis = np.arange(n, n + m)
        self._lu = None
        self._etas = []
        self.set_slack_basis()

    # -- basis bookkeeping ----------------------------------------------------
    def _nonbasic_status(self, j):
        lo, hi = self.lo[j], self.hi[j]
        if lo == hi:
            return FIXED
        if math.isfinite(lo):
            return AT_LOWER
        if math.isfinite(hi):
            return AT_UPPER
        return FREE

    def _place_nonbasic(self, j):
        st = self.status[j]
        if st == AT_LOWER or st == FIXED:
            self.x[j] = self.lo[j]
        elif st == AT_UPPER:
            self.x[j] = self.hi[j]
        else:
            self.x[j] = 0.0

    def set_slack_basis(self):
        self.basis = np.arange(self.n, self.N)
        for j in range(self.N):
            self.status[j] = self._nonbasic_status(j)
        self.status[self.basis] = BASIC
        for j in range(self.n):
            self._place_nonbasic(j)
        self.refactor()

    def snapshot(self) -> BasisState:
        return BasisState(self.basis.copy(), self.status.copy())

    def load(self, state: BasisState, lo, hi):
        """Install structural bounds (length n) and a saved basis."""
        self.lo[: self.n] = lo
        self.hi[: self.n] = hi
        self.basis = state.basis.copy()
        self.status = state.status.copy()
        self._normalize_nonbasic()
        self.refactor()

    def _normalize_nonbasic(self):
        for j in np.flatnonzero(self.status != BASIC):
            lo, hi = self.lo[j], self.hi[j]
            st = self.status[j]
            if lo == hi:
                st = FIXED
            elif st == FIXED:
                st = self._nonbasic_status(j)
            elif st == AT_LOWER and not math.isfinite(lo):
                st = AT_UPPER if math.isfinite(hi) else FREE
            elif st == AT_UPPER and not math.isfinite(hi):
                st = AT_LOWER if math.isfinite(lo) else FREE
            elif st == FREE and (math.isfinite(lo) or math.isfinite(hi)):
                st = self._nonbasic_status(j)
            self.status[j] = st
            self._place_nonbasic(j)

    # -- linear algebra -------------------------------------------------------
    def refactor(self):
        B = self.A[:, self.basis].tocsc()
        try:
            self._lu = spla.splu(B, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularBasis(str(exc)) from exc
        self._etas = []
        self._recompute_primal()

    def _recompute_primal(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        rhs = -(self.A @ xn)
        self.x[self.basis] = self.ftran(rhs)

    def ftran(self, a):
        y = self._lu.solve(np.asarray(a, dtype=float))
        for r, w in self._etas:
            yr = y[r] / w[r]
            y -= w * yr
            y[r] = yr
        return y

    def btran(self, c):
        y = np.array(c, dtype=float)
        for r, w in reversed(self._etas):
            y[r] = (y[r] - (w @ y - w[r] * y[r])) / w[r]
        return self._lu.solve(y, trans="T")

    def _column(self, j):
        col = np.zeros(self.m)
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[start:end]] = self.A.data[start:end]
        return col

    def _pivot(self, r, q, w, leave_status):
        p = self.basis[r]
        self.basis[r] = q
        self.status[q] = BASIC
        self.status[p] = FIXED if self.lo[p] == self.hi[p] else leave_status
        self._place_nonbasic(p)
        self._etas.append((r, w))
        if len(self._etas) >= REFACTOR_EVERY:
            self.refactor()

    def reduced_costs(self, cost_basic=None):
        cb = self.cost[self.basis] if cost_basic is None else cost_basic
        y = self.btran(cb)
        d = (self.cost if cost_basic is None else 0.0) - self.AT @ y
        d[self.basis] = 0.0
        return d, y

    # -- status helpers ------------------------------------------------------
    def primal_infeasibility(self):
        xb = self.x[self.basis]
        return np.maximum(self.lo[self.basis] - xb, xb - self.hi[self.basis])

    def _improving(self, d):
        """Pricing score per column (positive = improving)."""
        st = self.status
        score = np.full(self.N, -np.inf)
        lower, upper, free = st == AT_LOWER, st == AT_UPPER, st == FREE
        score[lower] = -d[lower]
        score[upper] = d[upper]
        score[free] = np.abs(d[free])
        return score

    def dual_infeasibility(self, d):
        return float(max(0.0, self._improving(d).max()))

    # -- primal simplex ------------------------------------------------------
    def primal(self, max_iter=200_000):
        """Two-phase primal simplex from the current basis."""
        degenerate = 0
        start = self.iterations
        while True:
            if self.iterations - start > max_iter:
                return Status.NUMERICAL
            infeas = self.primal_infeasibility()
            phase1 = bool(np.any(infeas > self.ftol))
            if phase1:
                xb = self.x[self.basis]
                cb = np.where(xb < self.lo[self.basis] - self.ftol, -1.0,
                              np.where(xb > self.hi[self.basis] + self.ftol, 1.0, 0.0))
                d, _ = self.reduced_costs(cb)
            else:
                d, _ = self.reduced_costs()
            score = self._improving(d)
            bland = degenerate >= DEGENERATE_RUN
            if bland:
                cand = np.flatnonzero(score > self.dtol)
                q = int(cand[0]) if cand.size else -1
            else:
                q = int(np.argmax(score))
                if score[q] <= self.dtol:
                    q = -1
            if q < 0:
                if phase1:
                    # confirm with fresh factors before declaring infeasible
                    if self._etas:
                        self.refactor()
                        continue
                    return Status.INFEASIBLE
                if self._etas:
                    self.refactor()
                    if np.any(self.primal_infeasibility() > self.ftol):
                        continue
                    d, _ = self.reduced_costs()
                    if self.dual_infeasibility(d) > self.dtol:
                        continue
                return Status.OPTIMAL
            direction = 1.0 if (self.status[q] == AT_LOWER or
                                (self.status[q] == FREE and d[q] < 0)) else -1.0
            w = self.ftran(self._column(q))
            step = self._primal_ratio(q, w, direction, phase1, bland)
            if step is None:
                return Status.UNBOUNDED
            theta, r, leave_status = step
            self.iterations += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            self.x[self.basis] -= direction * theta * w
            self.x[q] += direction * theta
            if r < 0:
                # bound flip of the entering column
                self.status[q] = AT_UPPER if self.status[q] == AT_LOWER else AT_LOWER
                self._place_nonbasic(q)
                continue
            self._pivot(r, q, w, leave_status)

    def _primal_ratio(self, q, w, direction, phase1, bland):
        g = -direction * w          # rate of change of each basic variable
        xb = self.x[self.basis]
        lo = self.lo[self.basis]
        hi = self.hi[self.basis]
        ftol = self.ftol
        m = self.m
        exact = np.full(m, np.inf)
        relaxed = np.full(m, np.inf)
        target_upper = np.zeros(m, dtype=bool)

        dec = g < -PIVOT_TOL
        inc = g > PIVOT_TOL
        if phase1:
            below = xb < lo - ftol
            above = xb > hi + ftol
            feas = ~(below | above)
            sel = below & inc           # rises to its lower bound
            exact[sel] = (lo[sel] - xb[sel]) / g[sel]
            relaxed[sel] = exact[sel]
            sel = above & dec           # falls to its upper bound
            exact[sel] = (xb[sel] - hi[sel]) / -g[sel]
            relaxed[sel] = exact[sel]
            target_upper[sel] = True
        else:
            feas = np.ones(m, dtype=bool)
        sel = feas & dec & np.isfinite(lo)
        exact[sel] = (xb[sel] - lo[sel]) / -g[sel]
        relaxed[sel] = (xb[sel] - lo[sel] + ftol) / -g[sel]
        sel = feas & inc & np.isfinite(hi)
        exact[sel] = (hi[sel] - xb[sel]) / g[sel]
        relaxed[sel] = (hi[sel] - xb[sel] + ftol) / g[sel]
        target_upper[sel] = True

        own = self.hi[q] - self.lo[q]
        theta_max = relaxed.min() if m else np.inf
        if not math.isfinite(theta_max) and not math.isfinite(own):
            return None
        if own <= theta_max:
            return max(own, 0.0), -1, None
        if bland:
            ok = np.flatnonzero(exact <= theta_max)
            r = int(ok[np.argmin(self.basis[ok])])
        else:
            ok = np.flatnonzero(exact <= theta_max)
            r = int(ok[np.argmax(np.abs(g[ok]))])
        theta = max(float(exact[r]), 0.0)
        return theta, r, (AT_UPPER if target_upper[r] else AT_LOWER)

    # -- dual simplex --------------------------------------------------------
    def is_dual_feasible(self):
        d, _ = self.reduced_costs()
        return self.dual_infeasibility(d) <= self.dtol * 10

    def dual(self, max_iter=50_000):
        """Dual simplex from a dual feasible basis; then polish with primal."""
        d, _ = self.reduced_costs()
        start = self.iterations
        since_refresh = 0
        while True:
            if self.iterations - start > max_iter:
                return Status.NUMERICAL
            infeas = self.primal_infeasibility()
            r = int(np.argmax(infeas)) if self.m else 0
            if not self.m or infeas[r] <= self.ftol:
                if self._etas:
                    self.refactor()
                    if np.any(self.primal_infeasibility() > self.ftol):
                        d, _ = self.reduced_costs()
                        continue
                return self.primal()
            p = self.basis[r]
            going_up = self.x[p] < self.lo[p]
            target = self.lo[p] if going_up else self.hi[p]
            e_r = np.zeros(self.m)
            e_r[r] = 1.0
            rho = self.btran(e_r)
            alpha = self.AT @ rho
            st = self.status
            lower, upper, free = st == AT_LOWER, st == AT_UPPER, st == FREE
            if going_up:
                elig = (lower & (alpha < -PIVOT_TOL)) | (upper & (alpha > PIVOT_TOL))
            else:
                elig = (lower & (alpha > PIVOT_TOL)) | (upper & (alpha < -PIVOT_TOL))
            elig |= free & (np.abs(alpha) > PIVOT_TOL)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if self._etas:
                    self.refactor()
                    d, _ = self.reduced_costs()
                    continue
                return Status.INFEASIBLE
            abs_a = np.abs(alpha[cand])
            dj = np.abs(d[cand])
            theta_max = ((dj + self.dtol) / abs_a).min()
            ok = cand[(dj / abs_a) <= theta_max]
            q = int(ok[np.argmax(np.abs(alpha[ok]))])
            w = self.ftran(self._column(q))
            if abs(w[r] - alpha[q]) > 1e-7 * max(1.0, abs(alpha[q])):
                if self._etas:
                    self.refactor()
                    d, _ = self.reduced_costs()
                    continue
            theta_d = d[q] / alpha[q]
            delta = (self.x[p] - target) / w[r]
            self.iterations += 1
            self.x[self.basis] -= w * delta
            self.x[q] += delta
            d -= theta_d * alpha
            d[q] = 0.0
            self._pivot(r, q, w, AT_LOWER if going_up else AT_UPPER)
            since_refresh += 1
            if not self._etas or since_refresh >= REFACTOR_EVERY:
                # fresh factors: recompute duals exactly
                d, _ = self.reduced_costs()
                since_refresh = 0

    # -- results --------------------------------------------------------------
    def objective(self):
        return float(self.cost @ self.x)

    def structural(self):
        return self.x[: self.n].copy()

    def row_duals(self):
        _, y = self.reduced_costs()
        return y
