"""Dense bounded-variable revised simplex (primal and dual).

Works on ``min c.x  s.t.  A x + s = b,  lb <= x <= ub`` where each row gets a
logical column ``s`` whose bounds encode the row sense.  A second block of
logical columns holds the phase-one artificials (``sign_i * e_i``); they are
fixed at zero outside phase one.  Logical columns are never stored.  The
explicit basis inverse is updated in product form and refactored
periodically.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg.blas import dger

from ..errors import SolverError
from .types import Basis, LPSolution, SolverConfig

__all__ = ["SimplexEngine", "solve_lp"]

AT_LB, AT_UB, FREE, BASIC = 0, 1, 2, 3
_PIV_TOL = 1e-9
_REFACTOR = 60
_STALL = 40
_REL_PIV = 1e-7


def _scale_factors(A, passes=4):
    """Geometric-mean row and column scale factors rounded to powers of two."""
    m, n = A.shape
    rs, cs = np.ones(m), np.ones(n)
    if A.size == 0:
        return rs, cs
    absA = np.abs(A)
    nz = absA > 0
    def factor(S, axis):
        big = np.where(nz, S, 0.0).max(axis=axis)
        small = np.where(nz, S, np.inf).min(axis=axis)
        small = np.where(np.isfinite(small), small, big)
        f = np.ones_like(big)
        ok = big > 0
        f[ok] = 1.0 / np.sqrt(big[ok] * small[ok])
        return f

    for _ in range(passes):
        rs *= factor(absA * rs[:, None] * cs[None, :], 1)
        cs *= factor(absA * rs[:, None] * cs[None, :], 0)
    return 2.0 ** np.round(np.log2(rs)), 2.0 ** np.round(np.log2(cs))


class SimplexEngine:
    """Reusable LP engine; bounds and right-hand side may change between solves."""

    def __init__(self, c, A, senses, b, lb, ub, cfg=None):
        cfg = cfg or SolverConfig()
        A = np.asarray(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.cfg = cfg
        self.ftol = cfg.feas_tol
        self.rs, self.cs = _scale_factors(A)
        c = np.asarray(c, dtype=float) * self.cs
        cmax = float(np.max(np.abs(c))) if len(c) else 0.0
        self.dtol = cfg.opt_tol * max(1.0, cmax)
        self.As = np.ascontiguousarray(A * self.rs[:, None] * self.cs[None, :])
        self.art_sign = np.ones(m)
        self.N = n + 2 * m
        self.c = np.concatenate([c, np.zeros(2 * m)])
        self.b = np.asarray(b, dtype=float) * self.rs
        slack_lb = np.array([0.0 if s == "<=" else -np.inf if s == ">=" else 0.0 for s in senses])
        slack_ub = np.array([np.inf if s == "<=" else 0.0 for s in senses])
        self.base_lb = np.concatenate([np.asarray(lb, float) / self.cs, slack_lb, np.zeros(m)])
        self.base_ub = np.concatenate([np.asarray(ub, float) / self.cs, slack_ub, np.zeros(m)])
        self.max_iter = cfg.max_lp_iter or max(1000, 30 * (m + n))
        rng = np.random.default_rng(12345)
        self._pert = rng.uniform(0.5, 1.0, self.N)

    # -- column algebra --------------------------------------------------------
    def _column(self, j):
        n, m = self.n, self.m
        if j < n:
            return self.As[:, j]
        col = np.zeros(m)
        i = j - n if j < n + m else j - n - m
        col[i] = 1.0 if j < n + m else self.art_sign[i]
        return col

    def _binv_col(self, j):
        n, m = self.n, self.m
        if j < n:
            return self.Binv @ self.As[:, j]
        if j < n + m:
            return self.Binv[:, j - n].copy()
        i = j - n - m
        return self.art_sign[i] * self.Binv[:, i]

    def _row_times_A(self, v):
        """``v @ [A, I, diag(sign)]`` for a length-m vector ``v``."""
        return np.concatenate([v @ self.As, v, v * self.art_sign])

    def _activity(self, x):
        n, m = self.n, self.m
        return self.As @ x[:n] + x[n:n + m] + self.art_sign * x[n + m:]

    # -- helpers ---------------------------------------------------------------
    def _refactor(self):
        B = np.column_stack([self._column(j) for j in self.basic]) if self.m else np.zeros((0, 0))
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(Binv)):
            return False
        self.Binv = np.asfortranarray(Binv)
        self._recompute_xb()
        return True

    def _recompute_xb(self):
        x = self.x
        x[self.basic] = 0.0
        x[self.basic] = self.Binv @ (self.b - self._activity(x))

    def _place_nonbasic(self):
        lb, ub, st, x = self.lb, self.ub, self.status, self.x
        for j in np.flatnonzero(st != BASIC):
            if st[j] == AT_UB and np.isfinite(ub[j]):
                x[j] = ub[j]
            elif np.isfinite(lb[j]):
                st[j], x[j] = AT_LB, lb[j]
            elif np.isfinite(ub[j]):
                st[j], x[j] = AT_UB, ub[j]
            else:
                st[j], x[j] = FREE, 0.0

    def _cold_start(self):
        m, n = self.m, self.n
        self.status = np.full(self.N, AT_LB, dtype=np.int8)
        self.x = np.zeros(self.N)
        self._place_nonbasic()
        resid = self.b - self.As @ self.x[:n]
        basic = []
        self.art_active = np.zeros(m, dtype=bool)
        self.art_sign = np.ones(m)
        for i in range(m):
            s = n + i
            a = n + m + i
            if self.lb[s] - self.ftol <= resid[i] <= self.ub[s] + self.ftol:
                basic.append(s)
                self.x[s] = resid[i]
            else:
                bound = self.lb[s] if resid[i] < self.lb[s] else self.ub[s]
                self.x[s] = bound
                self.status[s] = AT_LB if bound == self.lb[s] else AT_UB
                self.art_sign[i] = 1.0 if resid[i] - bound > 0 else -1.0
                self.ub[a] = np.inf
                self.x[a] = abs(resid[i] - bound)
                self.art_active[i] = True
                basic.append(a)
        self.basic = np.array(basic, dtype=int)
        self.status[self.basic] = BASIC
        diag = np.where(self.art_active, self.art_sign, 1.0)
        self.Binv = np.asfortranarray(np.diag(1.0 / diag))

    def _dual_values(self, cost):
        y = cost[self.basic] @ self.Binv
        return y, cost - self._row_times_A(y)

    def _pivot(self, r, j, alpha):
        row = self.Binv[r] / alpha[r]
        self.Binv = dger(-1.0, alpha, row, a=self.Binv, overwrite_a=True)
        self.Binv[r] = row
        self.basic[r] = j
        self.status[j] = BASIC

    # -- primal simplex --------------------------------------------------------
    def _primal(self, cost):
        lb, ub, st, x = self.lb, self.ub, self.status, self.x
        degenerate = 0
        since = 0
        while True:
            self.iters += 1
            if self.iters > self.max_iter:
                return "iteration_limit"
            since += 1
            if since >= _REFACTOR:
                since = 0
                if not self._refactor():
                    return "numerical"
            y, d = self._dual_values(cost)
            movable = (st != BASIC) & (ub > lb)
            up = movable & (st != AT_UB) & (d < -self.dtol)
            down = movable & (st != AT_LB) & (d > self.dtol)
            elig = up | down
            if not elig.any():
                return "optimal"
            bland = degenerate > _STALL
            if bland:
                j = int(np.flatnonzero(elig)[0])
            else:
                j = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            dirn = 1.0 if up[j] else -1.0
            alpha = self._binv_col(j)
            g = dirn * alpha
            xb = x[self.basic]
            lbb, ubb = lb[self.basic], ub[self.basic]
            ptol = max(_PIV_TOL, _REL_PIV * float(np.abs(g).max(initial=0.0)))
            dec = g > ptol
            inc = g < -ptol
            with np.errstate(divide="ignore", invalid="ignore"):
                relaxed = np.full(self.m, np.inf)
                relaxed[dec] = (xb[dec] - lbb[dec] + self.ftol) / g[dec]
                relaxed[inc] = (ubb[inc] - xb[inc] + self.ftol) / -g[inc]
                exact = np.full(self.m, np.inf)
                exact[dec] = (xb[dec] - lbb[dec]) / g[dec]
                exact[inc] = (ubb[inc] - xb[inc]) / -g[inc]
            exact = np.maximum(exact, 0.0)
            span = ub[j] - lb[j]
            if bland:
                tmax = min(float(exact.min()) if self.m else np.inf, span)
            else:
                tmax = min(float(relaxed.min()) if self.m else np.inf, span)
            if not np.isfinite(tmax):
                return "unbounded"
            cand = np.flatnonzero(exact <= tmax)
            if span <= tmax and (len(cand) == 0 or span <= exact[cand].min()):
                x[j] = ub[j] if dirn > 0 else lb[j]
                st[j] = AT_UB if dirn > 0 else AT_LB
                x[self.basic] = xb - g * span
                degenerate = 0
                continue
            if bland:
                r = int(cand[np.argmin(self.basic[cand])])
            else:
                r = int(cand[np.argmax(np.abs(g[cand]))])
            t = float(exact[r])
            degenerate = degenerate + 1 if t < 1e-12 else 0
            x[j] += dirn * t
            x[self.basic] = xb - g * t
            leave = self.basic[r]
            if g[r] > 0:
                x[leave], st[leave] = lb[leave], AT_LB
            else:
                x[leave], st[leave] = ub[leave], AT_UB
            self._pivot(r, j, alpha)

    # -- dual simplex ----------------------------------------------------------
    def _dual_feasible(self, d):
        st, lb, ub = self.status, self.lb, self.ub
        movable = (st != BASIC) & (ub > lb)
        bad = movable & (((st == AT_LB) & (d < -self.dtol)) | ((st == AT_UB) & (d > self.dtol))
                         | ((st == FREE) & (np.abs(d) > self.dtol)))
        return not bad.any()

    def _perturbed(self, cost):
        """Shift nonbasic costs away from zero reduced cost (keeps dual feasibility)."""
        st = self.status
        eps = 1e-7 * np.maximum(1.0, np.abs(cost)) * self._pert
        shift = np.where(st == AT_LB, eps, np.where(st == AT_UB, -eps, 0.0))
        shift[self.ub <= self.lb] = 0.0
        return cost + shift

    def _dual(self, cost):
        lb, ub, st, x = self.lb, self.ub, self.status, self.x
        since = 0
        stalled = 0
        work = cost
        while True:
            self.iters += 1
            if self.iters > self.max_iter:
                return "iteration_limit"
            since += 1
            if since >= _REFACTOR:
                since = 0
                if not self._refactor():
                    return "numerical"
            xb = x[self.basic]
            lbb, ubb = lb[self.basic], ub[self.basic]
            below = lbb - xb
            above = xb - ubb
            viol = np.maximum(below, above)
            scale = np.maximum(1.0, np.abs(xb))
            r = int(np.argmax(viol / scale))
            if viol[r] <= self.ftol * scale[r]:
                return "optimal"
            to_lb = below[r] >= above[r]
            y, d = self._dual_values(work)
            alpha_r = self._row_times_A(self.Binv[r])
            movable = (st != BASIC) & (ub > lb)
            if to_lb:
                elig = movable & (((st == AT_LB) & (alpha_r < -_PIV_TOL))
                                  | ((st == AT_UB) & (alpha_r > _PIV_TOL))
                                  | ((st == FREE) & (np.abs(alpha_r) > _PIV_TOL)))
            else:
                elig = movable & (((st == AT_LB) & (alpha_r > _PIV_TOL))
                                  | ((st == AT_UB) & (alpha_r < -_PIV_TOL))
                                  | ((st == FREE) & (np.abs(alpha_r) > _PIV_TOL)))
            idx = np.flatnonzero(elig)
            if len(idx) == 0:
                return "infeasible"
            big = float(np.abs(alpha_r[idx]).max())
            keep = np.abs(alpha_r[idx]) >= _REL_PIV * big
            idx = idx[keep]
            a = np.abs(alpha_r[idx])
            dd = np.abs(d[idx])
            ratios = dd / a
            tmax = float(np.min((dd + self.dtol) / a))
            cand = idx[ratios <= tmax]
            j = int(cand[np.argmax(np.abs(alpha_r[cand]))])
            step = float(abs(d[j]) / abs(alpha_r[j]))
            stalled = stalled + 1 if step <= self.dtol else 0
            if stalled > _STALL and work is cost:
                work = self._perturbed(cost)
                stalled = 0
            alpha = self._binv_col(j)
            if abs(alpha[r]) < _PIV_TOL:
                return "numerical"
            bound = lbb[r] if to_lb else ubb[r]
            delta = (xb[r] - bound) / alpha[r]
            x[j] += delta
            x[self.basic] = xb - alpha * delta
            leave = self.basic[r]
            x[leave] = bound
            st[leave] = AT_LB if to_lb else AT_UB
            self._pivot(r, j, alpha)

    # -- driver ----------------------------------------------------------------
    def _load(self, basis):
        if basis is None or len(basis.basic) != self.m or len(basis.status) != self.N:
            return False
        self.basic = np.array(basis.basic, dtype=int)
        self.status = np.array(basis.status, dtype=np.int8)
        if basis.art_sign:
            self.art_sign = np.asarray(basis.art_sign, dtype=float).copy()
        self.x = np.zeros(self.N)
        self._place_nonbasic()
        self.status[self.basic] = BASIC
        return self._refactor()

    def solve(self, lb=None, ub=None, b=None, basis=None):
        """Solve with optional overrides of structural bounds and rhs."""
        n = self.n
        self.lb = self.base_lb.copy()
        self.ub = self.base_ub.copy()
        if lb is not None:
            self.lb[:n] = np.asarray(lb, dtype=float) / self.cs
        if ub is not None:
            self.ub[:n] = np.asarray(ub, dtype=float) / self.cs
        if b is not None:
            self.b = np.asarray(b, dtype=float) * self.rs
        self.iters = 0
        total = 0
        if np.any(self.lb[:n] > self.ub[:n] + self.ftol / self.cs):
            return LPSolution("infeasible")
        cost = self.c
        status = None
        if self._load(basis):
            xb = self.x[self.basic]
            lbb, ubb = self.lb[self.basic], self.ub[self.basic]
            scale = np.maximum(1.0, np.abs(xb))
            feasible = np.all(xb >= lbb - self.ftol * scale) and np.all(xb <= ubb + self.ftol * scale)
            if feasible:
                status = self._primal(cost)
            else:
                _, d = self._dual_values(cost)
                if self._dual_feasible(d):
                    status = self._dual(cost)
                    if status == "optimal":
                        status = self._primal(cost)
                    elif status != "infeasible":
                        status = None
        if status is None or status in ("numerical", "iteration_limit"):
            total = self.iters
            self.iters = 0
            status = self._solve_cold(cost)
        self.iters += total
        return self._result(status)

    def _solve_cold(self, cost):
        n, m = self.n, self.m
        self._cold_start()
        if self.art_active.any():
            p1 = np.zeros(self.N)
            p1[n + m + np.flatnonzero(self.art_active)] = 1.0
            status = self._primal(p1)
            if status != "optimal":
                return status
            art = self.x[n + m:]
            if art.sum() > self.ftol * max(1.0, float(np.abs(self.b).max(initial=0.0))):
                return "infeasible"
            self.ub[n + m:] = 0.0
            self.x[n + m:] = 0.0
            if not self._refactor():
                return "numerical"
        return self._primal(cost)

    def _result(self, status):
        n = self.n
        if status != "optimal":
            return LPSolution(status, iterations=self.iters)
        self._recompute_xb()
        y, d = self._dual_values(self.c)
        x = np.minimum(np.maximum(self.x[:n], self.lb[:n]), self.ub[:n])
        obj = float(self.c[:n] @ x)
        x = x * self.cs
        y = y * self.rs
        d = d[:n] / self.cs
        basis = Basis(tuple(int(v) for v in self.basic), tuple(int(s) for s in self.status),
                      tuple(float(v) for v in self.art_sign))
        return LPSolution("optimal", obj, x, y, d, basis, self.iters)


def solve_lp(model, cfg=None, lb=None, ub=None):
    """Solve the LP relaxation of a :class:`ModelIR` (integrality dropped).

    The objective, duals and reduced costs are reported in the model's sense.
    """
    c, A, senses, b, mlb, mub = model.arrays()
    sign = -1.0 if model.sense == "max" else 1.0
    eng = SimplexEngine(sign * c, A, senses, b, mlb if lb is None else lb,
                        mub if ub is None else ub, cfg)
    sol = eng.solve()
    if sol.ok:
        sol.objective = sign * sol.objective + model.constant
        sol.duals = sign * sol.duals
        sol.reduced_costs = sign * sol.reduced_costs
    return sol


def check_status(sol, context=""):
    if sol.status in ("numerical", "iteration_limit"):
        raise SolverError("LP_" + sol.status.upper(), context)
    return sol
