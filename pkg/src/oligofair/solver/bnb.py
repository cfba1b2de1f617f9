"""Best-bound branch-and-bound over binaries and SOS2 sets."""

from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import SolverError
from .simplex import SimplexEngine
from .types import MIPSolution, NodeRecord, SolverConfig

__all__ = ["sos2_violated", "branch_sos2", "solve_milp", "BranchAndBound"]


def sos2_violated(values, tol=1e-6):
    """True when the nonzero members are not confined to one adjacent pair."""
    nz = [n for n, v in enumerate(values) if abs(v) > tol]
    return bool(nz) and nz[-1] - nz[0] >= 2


def branch_sos2(values, weights=None, tol=1e-6):
    """Split a violated SOS2 set.

    Returns ``(r, zero_a, zero_b)`` with 0-based positions: child A forces the
    members before ``r`` to zero, child B the members after ``r``.  Every
    adjacent pair survives in at least one child, and the parent's point is
    cut from both since its first nonzero lies before ``r`` and its last
    after it.
    """
    values = [float(v) for v in values]
    n = len(values)
    if weights is None:
        weights = list(range(n))
    nz = [k for k, v in enumerate(values) if abs(v) > tol]
    if not nz or nz[-1] - nz[0] < 2:
        raise SolverError("NOT_VIOLATED", "SOS2 set already has adjacent support")
    lo, hi = nz[0], nz[-1]
    mass = sum(abs(values[k]) for k in nz)
    avg = sum(weights[k] * abs(values[k]) for k in nz) / mass
    r = 0
    while r + 1 < n and weights[r + 1] <= avg:
        r += 1
    r = min(max(r, lo + 1), hi - 1)
    return r, list(range(0, r)), list(range(r + 1, n))


def _sos2_violation(values, tol):
    """Mass outside the heaviest adjacent pair (0 when feasible)."""
    if not sos2_violated(values, tol):
        return 0.0
    a = np.abs(np.asarray(values))
    best = max(a[k] + a[k + 1] for k in range(len(a) - 1))
    return float(a.sum() - best)


@dataclass
class _Node:
    node_id: int
    parent: int
    depth: int
    lb: np.ndarray
    ub: np.ndarray
    bound: float  # min-form LP objective
    x: np.ndarray
    basis: object
    branch: str


class BranchAndBound:
    def __init__(self, model, cfg=None):
        self.model = model
        self.cfg = cfg or SolverConfig()
        c, A, senses, b, lb, ub = model.arrays()
        self.sign = -1.0 if model.sense == "max" else 1.0
        self.args = (self.sign * c, A, senses, b)
        self.lb0, self.ub0 = lb, ub
        self.engines = [SimplexEngine(self.sign * c, A, senses, b, lb, ub, self.cfg)
                        for _ in range(2 if self.cfg.workers > 1 else 1)]
        self.int_ids = np.array(model.integer_ids(), dtype=int)
        self.sos = model.sos2
        self.lp_iterations = 0

    # -- helpers ---------------------------------------------------------------
    def _lp(self, lb, ub, basis, engine=0):
        sol = self.engines[engine].solve(lb, ub, basis=basis)
        if sol.status in ("numerical", "iteration_limit"):
            raise SolverError("LP_" + sol.status.upper(), f"model {self.model.name}")
        return sol

    def _model_obj(self, zmin):
        return self.sign * zmin + self.model.constant

    def _fractional(self, x):
        if len(self.int_ids) == 0:
            return -1
        v = x[self.int_ids]
        dist = np.abs(v - np.round(v))
        if dist.max() <= self.cfg.int_tol:
            return -1
        # most fractional; argmax returns the smallest index on ties
        return int(self.int_ids[np.argmax(np.minimum(v - np.floor(v), np.ceil(v) - v))])

    def _violated_sos(self, x):
        best, best_k = 0.0, -1
        for k, s in enumerate(self.sos):
            viol = _sos2_violation(x[list(s.members)], self.cfg.int_tol)
            if viol > best:
                best, best_k = viol, k
        return best_k

    def _feasible_point(self, x):
        return self._fractional(x) < 0 and self._violated_sos(x) < 0

    def _round_and_fix(self, x, lb, ub, fix_sos=True):
        """Fix rounded binaries and (optionally) the heaviest adjacent SOS2 pair."""
        lb, ub = lb.copy(), ub.copy()
        if len(self.int_ids):
            v = np.clip(np.round(x[self.int_ids]), lb[self.int_ids], ub[self.int_ids])
            lb[self.int_ids] = v
            ub[self.int_ids] = v
        for s in self.sos if fix_sos else ():
            a = np.abs(x[list(s.members)])
            if len(a) < 2:
                continue
            pair = max(range(len(a) - 1), key=lambda k: (a[k] + a[k + 1], -k))
            for k, vid in enumerate(s.members):
                if k not in (pair, pair + 1):
                    ub[vid] = min(ub[vid], 0.0)
                    lb[vid] = min(lb[vid], 0.0)
        return lb, ub

    def _children(self, node):
        j = self._fractional(node.x)
        if j >= 0:
            v = node.x[j]
            lb_a, ub_a = node.lb.copy(), node.ub.copy()
            ub_a[j] = math.floor(v)
            lb_b, ub_b = node.lb.copy(), node.ub.copy()
            lb_b[j] = math.ceil(v)
            name = self.model.variables[j].name
            return [(lb_a, ub_a, f"{name}<=0"), (lb_b, ub_b, f"{name}>=1")]
        k = self._violated_sos(node.x)
        s = self.sos[k]
        r, zero_a, zero_b = branch_sos2(node.x[list(s.members)], s.weights, self.cfg.int_tol)
        out = []
        for zeros, tag in ((zero_a, "A"), (zero_b, "B")):
            lb, ub = node.lb.copy(), node.ub.copy()
            for pos in zeros:
                ub[s.members[pos]] = 0.0
            out.append((lb, ub, f"{s.name}:{tag}@{r + 1}"))
        return out

    # -- main loop -------------------------------------------------------------
    def run(self, start=None):
        cfg = self.cfg
        t0 = time.perf_counter()
        log = []
        inc_z, inc_x = math.inf, None

        def gap_tol(z):
            return cfg.mip_gap * max(1.0, abs(z))

        def try_incumbent(sol):
            nonlocal inc_z, inc_x
            if sol.ok and sol.objective < inc_z - 1e-12 * max(1.0, abs(sol.objective)):
                inc_z, inc_x = sol.objective, sol.x.copy()

        if start is not None:
            # the start's SOS2 weights may refer to another grid: fix binaries
            # only, then pin the heaviest pair of the re-solved point
            lb, ub = self._round_and_fix(np.asarray(start, float), self.lb0, self.ub0,
                                         fix_sos=False)
            sol = self._lp(lb, ub, None)
            if sol.ok and not self._feasible_point(sol.x):
                lb, ub = self._round_and_fix(sol.x, lb, ub)
                sol = self._lp(lb, ub, sol.basis)
            try_incumbent(sol)

        root = self._lp(self.lb0, self.ub0, None)
        self.lp_iterations += root.iterations
        if root.status == "infeasible":
            log.append(NodeRecord(0, -1, 0, math.nan, math.nan, math.nan, "infeasible", "root"))
            return self._finish("infeasible", inc_z, inc_x, math.inf, 1, log)
        if root.status == "unbounded":
            return self._finish("unbounded", inc_z, inc_x, -math.inf, 1, log)
        node = _Node(0, -1, 0, self.lb0.copy(), self.ub0.copy(), root.objective, root.x,
                     root.basis, "root")
        if self._feasible_point(root.x):
            try_incumbent(root)
        else:
            self._heuristic(node, try_incumbent)
        log.append(NodeRecord(0, -1, 0, self._model_obj(root.objective),
                              self._model_obj(inc_z) if inc_x is not None else math.nan,
                              self._model_obj(root.objective), "evaluated", "root"))
        heap = [(node.bound, node.node_id, node)]
        next_id = 1
        expanded = 0
        status = "optimal"
        pool = ThreadPoolExecutor(max_workers=2) if cfg.workers > 1 else None
        try:
            while heap:
                bound, _, node = heap[0]
                if inc_x is not None and bound >= inc_z - gap_tol(inc_z):
                    break
                if expanded >= cfg.node_limit:
                    status = "node-limit"
                    break
                if time.perf_counter() - t0 > cfg.time_limit:
                    status = "time-limit"
                    break
                heapq.heappop(heap)
                expanded += 1
                if node.x is None or self._feasible_point(node.x):
                    continue
                kids = self._children(node)
                if pool is not None:
                    futs = [pool.submit(self._lp, lb, ub, node.basis, e)
                            for e, (lb, ub, _) in enumerate(kids)]
                    sols = [f.result() for f in futs]
                else:
                    sols = [self._lp(lb, ub, node.basis) for lb, ub, _ in kids]
                for (lb, ub, tag), sol in zip(kids, sols):
                    nid = next_id
                    next_id += 1
                    self.lp_iterations += sol.iterations
                    global_bound = min([bound] + [h[0] for h in heap])
                    if not sol.ok:
                        log.append(NodeRecord(nid, node.node_id, node.depth + 1, math.nan,
                                              self._model_obj(inc_z) if inc_x is not None
                                              else math.nan,
                                              self._model_obj(global_bound), sol.status, tag))
                        continue
                    child = _Node(nid, node.node_id, node.depth + 1, lb, ub, sol.objective,
                                  sol.x, sol.basis, tag)
                    if self._feasible_point(sol.x):
                        try_incumbent(sol)
                    elif cfg.heuristic_every and nid % cfg.heuristic_every == 0:
                        self._heuristic(child, try_incumbent)
                    log.append(NodeRecord(nid, node.node_id, node.depth + 1,
                                          self._model_obj(sol.objective),
                                          self._model_obj(inc_z) if inc_x is not None
                                          else math.nan,
                                          self._model_obj(global_bound), "evaluated", tag))
                    if not self._feasible_point(sol.x) and (
                            inc_x is None or sol.objective < inc_z - gap_tol(inc_z)):
                        heapq.heappush(heap, (child.bound, nid, child))
        finally:
            if pool is not None:
                pool.shutdown()
        best = min([h[0] for h in heap], default=inc_z)
        best = min(best, inc_z)
        if inc_x is None:
            status = "infeasible" if status == "optimal" else status
        return self._finish(status, inc_z, inc_x, best, next_id, log)

    def _heuristic(self, node, accept):
        lb, ub = self._round_and_fix(node.x, node.lb, node.ub)
        if np.any(lb > ub):
            return
        sol = self._lp(lb, ub, node.basis)
        self.lp_iterations += sol.iterations
        if sol.ok:
            accept(sol)

    def _finish(self, status, inc_z, inc_x, best_min, nodes, log):
        if inc_x is None:
            bound = self._model_obj(best_min) if math.isfinite(best_min) else math.nan
            return MIPSolution(status, best_bound=bound, nodes=nodes,
                               lp_iterations=self.lp_iterations, node_log=log)
        obj = self._model_obj(inc_z)
        bound = self._model_obj(best_min) if math.isfinite(best_min) else obj
        gap = abs(inc_z - best_min) / max(1.0, abs(inc_z)) if math.isfinite(best_min) else 0.0
        if status == "optimal" and gap > self.cfg.mip_gap:
            status = "gap-limit"
        x = inc_x.copy()
        if len(self.int_ids):
            x[self.int_ids] = np.round(x[self.int_ids])
        return MIPSolution(status, obj, x, bound, gap, nodes, self.lp_iterations, log)


def solve_milp(model, cfg=None, start=None):
    """Solve a :class:`ModelIR` with binaries and SOS2 sets to proven optimality.

    ``start`` is an optional full-length point whose integer part seeds the
    incumbent.  Results are deterministic for a given ``(model, cfg)``.
    """
    for vid in model.integer_ids():
        v = model.variables[vid]
        if v.lb < 0 or v.ub > 1:
            raise SolverError("BAD_BINARY_BOUNDS", v.name)
    return BranchAndBound(model, cfg).run(start)
