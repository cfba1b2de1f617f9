"""Brute-force reference optimizer for tiny instances.

Every contract schedule of every customer is enumerated explicitly.  Schedules
sharing the same firm-per-period sequence incur, per firm, a constant
revenue-minus-acquisition/forfeit contribution; only Pareto-maximal
contribution vectors are kept, which is exact for any objective that is
nondecreasing in each firm's profit.  For each combination of firm
sequences and spot-tier selections the remaining continuous problem (flows,
inventory, energy) is written here from the raw instance data and solved
with the embedded simplex, warm-started across patterns.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GameError, OligofairError
from .game import GameOutcome, nash_product
from .instance import restrict_to_incumbents
from .solver.simplex import SimplexEngine
from .solver.types import SolverConfig

__all__ = ["OracleLimits", "OracleResult", "enumerate_optimal", "oracle_status_quo",
           "count_schedules"]


@dataclass(frozen=True)
class OracleLimits:
    max_firms: int = 2
    max_customers: int = 4
    max_contracts: int = 2
    max_periods: int = 4
    max_tiers: int = 2
    max_enumeration: int = 2_000_000
    max_subproblems: int = 20_000


@dataclass
class OracleResult:
    mode: str
    objective: float
    profits: dict
    outcome: GameOutcome
    schedules: int
    subproblems: int
    diagnostics: dict = field(default_factory=dict)


# -- schedules -----------------------------------------------------------------

def _schedules(P, F, durations, allowed_firms):
    """Yield tuples of blocks ``(firm, contract, start, length)`` covering 0..P-1."""
    def rec(p):
        if p == P:
            yield ()
            return
        for f in allowed_firms:
            for k, L in enumerate(durations):
                length = min(L, P - p)
                for rest in rec(p + length):
                    yield ((f, k, p, length),) + rest
    return rec(0)


def count_schedules(P, n_firms, durations):
    """Number of block schedules of one customer over ``P`` periods."""
    T = [0] * (P + 1)
    T[0] = 1
    for r in range(1, P + 1):
        T[r] = n_firms * sum(T[r - L] if L <= r else 1 for L in durations)
    return T[P]


class _Data:
    """Raw-data coefficient tables."""

    def __init__(self, inst):
        self.inst = inst
        self.P = inst.n_periods
        self.F = len(inst.firms)
        self.fids = inst.firm_ids
        self.refs = inst.tank_refs
        self.D = np.array([inst.tank(r).demand for r in self.refs], dtype=float).reshape(
            len(self.refs), self.P)
        self.tanks_of_customer = [[t for t, r in enumerate(self.refs) if r.customer == c]
                                  for c in range(len(inst.customers))]
        # unit price per (tank, firm, contract, period)
        self.price = np.zeros((len(self.refs), self.F, len(inst.contracts), self.P))
        for t, r in enumerate(self.refs):
            cust = inst.customers[r.customer]
            tank = inst.tank(r)
            for f, fid in enumerate(self.fids):
                for k, con in enumerate(inst.contracts):
                    for p in range(self.P):
                        esc = con.escalation.get(fid)
                        mult = [1.0] * len(cust.terms) if p == 0 or esc is None else \
                            [1.0 + e for e in esc[p]]
                        self.price[t, f, k, p] = tank.base_price[fid][con.id] * sum(
                            T * m for T, m in zip(cust.terms, mult))

    def acquire(self, c, f, p):
        cust = self.inst.customers[c]
        fid = self.fids[f]
        return cust.acquire_fixed.get(fid, 0.0) + sum(
            self.inst.tank(self.refs[t]).acquire_variable.get(fid, 0.0) * self.D[t, p]
            for t in self.tanks_of_customer[c])

    def forfeit(self, c, f, p):
        cust = self.inst.customers[c]
        fid = self.fids[f]
        return cust.forfeit_fixed.get(fid, 0.0) + sum(
            self.inst.tank(self.refs[t]).forfeit_variable.get(fid, 0.0) * self.D[t, p]
            for t in self.tanks_of_customer[c])

    def schedule_value(self, c, blocks):
        """Per-firm revenue minus acquisition and forfeit costs of one schedule."""
        P, F = self.P, self.F
        durations = [k.duration for k in self.inst.contracts]
        vec = np.zeros(F)
        start = np.zeros((F, len(durations), P))
        for f, k, s, length in blocks:
            start[f, k, s] = 1.0
            for p in range(s, s + length):
                vec[f] += sum(self.price[t, f, k, p] * self.D[t, p]
                              for t in self.tanks_of_customer[c])
        inc = self.inst.customers[c].incumbent_firm
        first = blocks[0][0]
        for f, fid in enumerate(self.fids):
            if fid == inc:
                if first != f:
                    vec[f] -= self.forfeit(c, f, 0)
            elif first == f:
                vec[f] -= self.acquire(c, f, 0)
            for p in range(1, P):
                signed = start[f, :, p].sum()
                ended = sum(start[f, k, p - L] for k, L in enumerate(durations) if p - L >= 0)
                vec[f] -= self.acquire(c, f, p) * max(0.0, signed - ended)
                vec[f] -= self.forfeit(c, f, p) * max(0.0, ended - signed)
        return vec


def _pareto(items):
    """Keep items whose vectors are not weakly dominated by an earlier-kept one."""
    kept = []
    for vec, sched in items:
        if any(np.all(v >= vec) for v, _ in kept):
            continue
        kept = [(v, s) for v, s in kept if not np.all(vec >= v)]
        kept.append((vec, sched))
    return kept


# -- continuous subproblem -------------------------------------------------------

class _FlowLP:
    """Flows, inventory and energy for a fixed firm/tier pattern.

    Pattern data enters only through the right-hand side, so one engine is
    reused with warm starts.
    """

    def __init__(self, data):
        inst = data.inst
        self.d = data
        P, F = data.P, data.F
        T = len(data.refs)
        B = len(inst.tiers)
        OT = inst.horizon.operating_hours
        self.cols = {}
        lb, ub = [], []

        def col(key, lo=0.0, hi=math.inf):
            self.cols[key] = len(lb)
            lb.append(lo)
            ub.append(hi)

        for t in range(T):
            for f in range(F):
                for p in range(P):
                    col(("S", t, f, p))
                    for b in range(B):
                        col(("O", t, f, b, p))
                    for g in range(F):
                        if g != f:
                            col(("SW", t, g, f, p))
        for i, prod in enumerate(inst.products):
            for f, firm in enumerate(inst.firms):
                for p in range(P):
                    col(("Q", i, f, p))
                    col(("INV", i, f, p))
                    col(("V", i, f, p), 0.0, firm.plant.max_flow.get(prod, 0.0))
        for f, fid in enumerate(data.fids):
            e = inst.energy[fid]
            for p in range(P):
                col(("TH", f, p), (1 - e.tolerance) * e.contracted, (1 + e.tolerance) * e.contracted)
                col(("DP", f, p))
                col(("DM", f, p))
        self.n_flow = len(lb)
        self.lb = np.array(lb)
        self.ub = np.array(ub)

        rows, senses, rhs = [], [], []
        self.demand_rows = {}
        self.tier_rows = {}

        def row(coeffs, sense, b=0.0):
            rows.append(coeffs)
            senses.append(sense)
            rhs.append(b)
            return len(rows) - 1

        c = self.cols
        tank_prod = [r.product for r in data.refs]
        for t in range(T):
            for f in range(F):
                for p in range(P):
                    coeffs = {c[("S", t, f, p)]: 1.0}
                    for b in range(B):
                        coeffs[c[("O", t, f, b, p)]] = 1.0
                    for g in range(F):
                        if g != f:
                            coeffs[c[("SW", t, g, f, p)]] = 1.0
                    self.demand_rows[(t, f, p)] = row(coeffs, "==")
        for i, prod in enumerate(inst.products):
            tanks = [t for t in range(T) if tank_prod[t] == i]
            for f, firm in enumerate(inst.firms):
                inv = firm.inventory[prod]
                for p in range(P):
                    out = {c[("SW", t, f, g, p)]: 1.0 for t in tanks for g in range(F) if g != f}
                    v = c[("V", i, f, p)]
                    row({**out, c[("Q", i, f, p)]: 1.0, v: -OT}, "<=")
                    row({**out, v: -inst.swap_policy.capacity_fraction * OT}, "<=")
                    bal = {**out, c[("INV", i, f, p)]: 1.0, c[("Q", i, f, p)]: -1.0}
                    for t in tanks:
                        bal[c[("S", t, f, p)]] = 1.0
                    if p > 0:
                        bal[c[("INV", i, f, p - 1)]] = -1.0
                    row(bal, "==", inv.initial if p == 0 else 0.0)
                    row({v: inv.lower_factor[p], c[("INV", i, f, p)]: -1.0}, "<=")
                    row({c[("INV", i, f, p)]: 1.0, v: -inv.upper_factor[p]}, "<=")
                    for b in range(B):
                        tot = {c[("O", t, f, b, p)]: 1.0 for t in tanks}
                        lo_r = row(dict(tot), ">=")
                        hi_r = row(dict(tot), "<=")
                        self.tier_rows[(i, f, b, p)] = (lo_r, hi_r)
            for f in range(F):
                for g in range(f + 1, F):
                    for iv in inst.swap_policy.intervals:
                        coeffs = {}
                        for q in iv:
                            for t in tanks:
                                coeffs[c[("SW", t, f, g, q - 1)]] = 1.0
                                coeffs[c[("SW", t, g, f, q - 1)]] = -1.0
                        row(coeffs, "==")
        for f, firm in enumerate(inst.firms):
            e = inst.energy[firm.id]
            plant = firm.plant
            lo, hi = (1 - e.tolerance) * e.contracted, (1 + e.tolerance) * e.contracted
            for p in range(P):
                pw = {}
                for i, prod in enumerate(inst.products):
                    pw[c[("V", i, f, p)]] = (plant.power_coeff[prod]
                                             + plant.air_power_coeff * plant.air_ratio.get(prod, 0.0))
                row({**{k: -v for k, v in pw.items()}, c[("DP", f, p)]: 1.0}, ">=", -hi)
                row({**pw, c[("DM", f, p)]: 1.0}, ">=", lo)
                row({**pw, c[("TH", f, p)]: -1.0, c[("DP", f, p)]: -1.0, c[("DM", f, p)]: 1.0}, "==")

        # per-firm profit of the flow part: minus service, energy, inventory cost
        self.profit = np.zeros((F, self.n_flow))
        for t, r in enumerate(data.refs):
            tank = inst.tank(r)
            prod = inst.products[r.product]
            for p in range(P):
                dem = data.D[t, p]
                usc = [tank.delivery_cost[fid][p] / dem if dem > 0 else 0.0 for fid in data.fids]
                for f, firm in enumerate(inst.firms):
                    self.profit[f, c[("S", t, f, p)]] -= usc[f]
                    for b, tier in enumerate(inst.tiers):
                        self.profit[f, c[("O", t, f, b, p)]] -= tier.premium * (
                            usc[f] + firm.unit_production_cost[prod])
                    for g in range(F):
                        if g != f:
                            self.profit[f, c[("SW", t, g, f, p)]] -= inst.swap_policy.eta(
                                data.fids[g], data.fids[f]) * usc[g]
        for f, firm in enumerate(inst.firms):
            e = inst.energy[firm.id]
            for p in range(P):
                rate = e.price[p] * OT
                self.profit[f, c[("TH", f, p)]] -= rate
                self.profit[f, c[("DP", f, p)]] -= e.penalty * rate
                self.profit[f, c[("DM", f, p)]] -= e.penalty * rate
                for i, prod in enumerate(inst.products):
                    self.profit[f, c[("INV", i, f, p)]] -= firm.inventory[prod].unit_cost

        self.rows, self.senses, self.rhs0 = rows, senses, np.array(rhs, dtype=float)

    def dense(self, n_total):
        A = np.zeros((len(self.rows), n_total))
        for i, coeffs in enumerate(self.rows):
            for j, a in coeffs.items():
                A[i, j] = a
        return A

    def pattern_rhs(self, served, tiers):
        """``served[c, f, p]`` in {0,1}; ``tiers[(i, f, p)]`` -> tier index or -1."""
        d, inst = self.d, self.d.inst
        b = self.rhs0.copy()
        for (t, f, p), r in self.demand_rows.items():
            b[r] = d.D[t, p] * served[d.refs[t].customer, f, p]
        for (i, f, bb, p), (lo_r, hi_r) in self.tier_rows.items():
            on = tiers.get((i, f, p), -1) == bb
            b[lo_r] = inst.tiers[bb].lower if on else 0.0
            b[hi_r] = inst.tiers[bb].upper if on else 0.0
        return b


def _tier_options(inst, data, served):
    """Per (product, firm, period) with assigned demand: tier choices to try."""
    opts = {}
    if not inst.tiers:
        return opts
    has_zero_lower = any(t.lower == 0 for t in inst.tiers)
    for i in range(len(inst.products)):
        for f in range(data.F):
            for p in range(data.P):
                demand = sum(data.D[t, p] * served[r.customer, f, p]
                             for t, r in enumerate(data.refs) if r.product == i)
                if demand > 0:
                    choices = list(range(len(inst.tiers)))
                    # a tier with zero lower bound contains the no-purchase option
                    opts[(i, f, p)] = choices if has_zero_lower else [-1] + choices
    return opts


# -- main entry ----------------------------------------------------------------

def _check_limits(inst, limits, fixed):
    n = {"firms": len(inst.firms), "customers": len(inst.customers),
         "contracts": len(inst.contracts), "periods": inst.n_periods, "tiers": len(inst.tiers)}
    for key, val in n.items():
        if val > getattr(limits, f"max_{key}"):
            raise OligofairError("TOO_LARGE", f"{val} {key} exceeds oracle limit")
    durations = [k.duration for k in inst.contracts]
    total = 1
    for c in range(len(inst.customers)):
        nf = 1 if fixed and c in fixed else len(inst.firms)
        total *= count_schedules(inst.n_periods, nf, durations)
    if total > limits.max_enumeration:
        raise OligofairError("TOO_LARGE", f"{total} schedule combinations exceed "
                                          f"{limits.max_enumeration}")
    return total


def enumerate_optimal(inst, mode="social-welfare", sq=None, limits=None, grids=None,
                      fixed_firms=None, cfg=None, nash_method=None):
    """Exhaustive optimum.

    ``mode`` is ``"social-welfare"`` (maximize total profit) or ``"nash"``.
    Nash mode maximizes the exact log-Nash objective by default; passing
    ``grids`` (profit grid per firm id) instead maximizes its piecewise-linear
    interpolation over the same grids.  ``fixed_firms`` maps customer index
    to the only firm index allowed to serve it.
    """
    limits = limits or OracleLimits()
    cfg = cfg or SolverConfig()
    if mode not in ("social-welfare", "nash"):
        raise OligofairError("BAD_MODE", mode)
    method = nash_method or ("linearized" if grids is not None else "exact")
    sqp = None
    if mode == "nash":
        if sq is None:
            raise GameError("STATUS_QUO_REQUIRED", "nash mode needs status-quo profits")
        sqp = dict(getattr(sq, "profits", sq))
    n_sched = _check_limits(inst, limits, fixed_firms)
    data = _Data(inst)
    P, F = data.P, data.F
    C = len(inst.customers)
    durations = [k.duration for k in inst.contracts]

    groups = []
    for c in range(C):
        allowed = [fixed_firms[c]] if fixed_firms and c in fixed_firms else list(range(F))
        by_seq = {}
        for sched in _schedules(P, F, durations, allowed):
            seq = [0] * P
            for f, k, s, length in sched:
                for p in range(s, s + length):
                    seq[p] = f
            by_seq.setdefault(tuple(seq), []).append((data.schedule_value(c, sched), sched))
        if mode == "social-welfare":
            groups.append({s: [max(items, key=lambda it: it[0].sum())]
                           for s, items in by_seq.items()})
        else:
            groups.append({s: _pareto(items) for s, items in by_seq.items()})

    lp = _FlowLP(data)
    n_flow = lp.n_flow
    alpha = inst.game.negotiation_power
    if mode == "social-welfare":
        n_extra = 0
        eng = SimplexEngine(-lp.profit.sum(axis=0), lp.dense(n_flow), lp.senses, lp.rhs0,
                            lp.lb, lp.ub, cfg)
    elif method == "linearized":
        eng, n_extra, seg_rows = _nash_engine(lp, data, alpha, sqp, grids, cfg)
    else:
        eng = None
    basis = None
    best = None
    subproblems = 0
    seq_lists = [sorted(g) for g in groups]
    for combo in itertools.product(*seq_lists):
        served = np.zeros((C, F, P))
        for c, seq in enumerate(combo):
            for p, f in enumerate(seq):
                served[c, f, p] = 1.0
        topts = _tier_options(inst, data, served)
        keys = sorted(topts)
        for choice in itertools.product(*[topts[k] for k in keys]):
            tiers = dict(zip(keys, choice))
            subproblems += 1
            if subproblems > limits.max_subproblems:
                raise OligofairError("TOO_LARGE", "subproblem limit exceeded")
            b = lp.pattern_rhs(served, tiers)
            for parts in itertools.product(*[groups[c][combo[c]] for c in range(C)]):
                K = np.sum([v for v, _ in parts], axis=0)
                if mode == "social-welfare":
                    sol = eng.solve(b=b, basis=basis)
                    if not sol.ok:
                        break
                    basis = sol.basis
                    x = sol.x
                    total = K.sum() + float(lp.profit.sum(axis=0) @ x)
                    score = total
                elif method == "linearized":
                    bb = np.concatenate([b, _nash_rhs(lp, data, sqp, grids, K, seg_rows)])
                    sol = eng.solve(b=bb, basis=basis)
                    if not sol.ok:
                        continue
                    basis = sol.basis
                    x = sol.x[:n_flow]
                    score = -sol.objective
                else:
                    res = _nash_exact(lp, data, alpha, sqp, K, b, cfg)
                    if res is None:
                        continue
                    x, score = res
                profits = {fid: float(K[f] + lp.profit[f] @ x) for f, fid in enumerate(data.fids)}
                if best is None or score > best[0]:
                    best = (score, profits, combo, parts, tiers, x.copy())
    if best is None:
        if mode == "nash":
            raise GameError("NO_BARGAINING_SOLUTION", "no rational pattern")
        raise GameError("INFEASIBLE", "no feasible schedule pattern")
    score, profits, combo, parts, tiers, x = best
    outcome = _build_outcome(inst, data, lp, mode, combo, parts, tiers, x, profits, score)
    diag = {"method": method if mode == "nash" else "sum"}
    if mode == "nash":
        phi = nash_product(profits, sqp, alpha)
        diag.update(phi=phi)
        outcome.status_quo = dict(sqp)
    return OracleResult(mode, score, profits, outcome, n_sched, subproblems, diag)


def _nash_engine(lp, data, alpha, sqp, grids, cfg):
    """Epigraph LP: t_f below every secant of the interpolated log surplus."""
    F = data.F
    n_flow = lp.n_flow
    n = n_flow + F
    A_flow = lp.dense(n)
    rows, senses = [], []
    seg_rows = []
    for f, fid in enumerate(data.fids):
        g = np.asarray(grids[fid], dtype=float)
        for k in range(len(g) - 1):
            slope = alpha[fid] * (math.log(g[k + 1] - sqp[fid]) - math.log(g[k] - sqp[fid])) / (
                g[k + 1] - g[k])
            r = np.zeros(n)
            r[n_flow + f] = 1.0
            r[:n_flow] = -slope * lp.profit[f]
            rows.append(r)
            senses.append("<=")
            seg_rows.append(("seg", f, k, slope))
        r = np.zeros(n)
        r[:n_flow] = lp.profit[f]
        rows.append(r.copy())
        senses.append(">=")
        seg_rows.append(("lo", f))
        rows.append(r)
        senses.append("<=")
        seg_rows.append(("hi", f))
    A = np.vstack([A_flow, np.array(rows)]) if rows else A_flow
    c = np.zeros(n)
    c[n_flow:] = -1.0  # minimize -sum t_f; alpha is folded into the secants
    lb = np.concatenate([lp.lb, np.full(F, -math.inf)])
    ub = np.concatenate([lp.ub, np.full(F, math.inf)])
    eng = SimplexEngine(c, A, list(lp.senses) + senses,
                        np.concatenate([lp.rhs0, np.zeros(len(rows))]), lb, ub, cfg)
    return eng, F, seg_rows


def _nash_rhs(lp, data, sqp, grids, K, seg_rows):
    out = np.zeros(len(seg_rows))
    alpha = data.inst.game.negotiation_power
    for n, spec in enumerate(seg_rows):
        f = spec[1]
        fid = data.fids[f]
        g = np.asarray(grids[fid], dtype=float)
        if spec[0] == "seg":
            k, slope = spec[2], spec[3]
            val = alpha[fid] * math.log(g[k] - sqp[fid])
            out[n] = val + slope * (K[f] - g[k])
        elif spec[0] == "lo":
            out[n] = g[0] - K[f]
        else:
            out[n] = g[-1] - K[f]
    return out


def _nash_exact(lp, data, alpha, sqp, K, b, cfg, max_rounds=200):
    """Kelley cutting planes on ``sum alpha ln(surplus)`` for one pattern."""
    F = data.F
    n_flow = lp.n_flow
    n = n_flow + F
    A_flow = lp.dense(n)
    base_rows, base_senses, base_rhs = [], [], []
    for f, fid in enumerate(data.fids):
        r = np.zeros(n)
        r[:n_flow] = lp.profit[f]
        base_rows.append(r)
        base_senses.append(">=")
        base_rhs.append(sqp[fid] - K[f])
    # probe the largest attainable surplus of each firm to place initial cuts
    A_probe = lp.dense(n_flow)
    points = {}
    for f, fid in enumerate(data.fids):
        sol = SimplexEngine(-lp.profit[f], A_probe, lp.senses, b, lp.lb, lp.ub, cfg).solve()
        if not sol.ok:
            return None
        smax = K[f] + lp.profit[f] @ sol.x - sqp[fid]
        if smax <= 0:
            return None
        points[f] = [smax * q for q in (1e-6, 1e-3, 0.1, 0.5, 1.0)]
    cuts = []  # (f, s0)
    for f in range(F):
        cuts += [(f, s0) for s0 in points[f]]
    c = np.zeros(n)
    c[n_flow:] = -1.0
    best = None
    for _ in range(max_rounds):
        rows, senses, rhs = list(base_rows), list(base_senses), list(base_rhs)
        for f, s0 in cuts:
            fid = data.fids[f]
            a = alpha[fid]
            # t_f <= a ln s0 + a (s - s0)/s0, s = K_f + profit_f.x - sq_f
            r = np.zeros(n)
            r[n_flow + f] = 1.0
            r[:n_flow] = -(a / s0) * lp.profit[f]
            rows.append(r)
            senses.append("<=")
            rhs.append(a * math.log(s0) + (a / s0) * (K[f] - sqp[fid] - s0))
        A = np.vstack([A_flow, np.array(rows)])
        eng = SimplexEngine(c, A, list(lp.senses) + senses, np.concatenate([b, rhs]),
                            np.concatenate([lp.lb, np.full(F, -math.inf)]),
                            np.concatenate([lp.ub, np.full(F, math.inf)]), cfg)
        sol = eng.solve()
        if not sol.ok:
            return None
        x = sol.x[:n_flow]
        upper = -sol.objective
        s = np.array([K[f] + lp.profit[f] @ x - sqp[fid] for f, fid in enumerate(data.fids)])
        if np.any(s <= 0):
            val = -math.inf
        else:
            val = float(sum(alpha[fid] * math.log(s[f]) for f, fid in enumerate(data.fids)))
        if best is None or val > best[1]:
            best = (x.copy(), val)
        if upper - best[1] <= 1e-11 * max(1.0, abs(upper)):
            break
        for f in range(F):
            if s[f] > 0:
                cuts.append((f, float(s[f])))
            else:
                cuts.append((f, points[f][0] * 1e-3))
    return best


def _build_outcome(inst, data, lp, mode, combo, parts, tiers, x, profits, score):
    P, F = data.P, data.F
    C = len(inst.customers)
    K_n = len(inst.contracts)
    T = len(data.refs)
    B = len(inst.tiers)
    I = len(inst.products)
    OT = inst.horizon.operating_hours
    durations = [k.duration for k in inst.contracts]
    W = np.zeros((C, F, K_n, P))
    WS = np.zeros((C, F, K_n, P))
    for c, (_, sched) in enumerate(parts):
        for f, k, s, length in sched:
            WS[c, f, k, s] = 1.0
            W[c, f, k, s:s + length] = 1.0
    WN = np.zeros((C, F, P))
    WD = np.zeros((C, F, P))
    for c in range(C):
        for f in range(F):
            for p in range(1, P):
                signed = WS[c, f, :, p].sum()
                ended = sum(WS[c, f, k, p - L] for k, L in enumerate(durations) if p - L >= 0)
                WN[c, f, p] = max(0.0, signed - ended)
                WD[c, f, p] = max(0.0, ended - signed)
    cols = lp.cols
    S = np.zeros((T, F, P))
    SW = np.zeros((T, F, F, P))
    OH = np.zeros((T, F, B, P))
    for t in range(T):
        for f in range(F):
            for p in range(P):
                S[t, f, p] = x[cols[("S", t, f, p)]]
                for b in range(B):
                    OH[t, f, b, p] = x[cols[("O", t, f, b, p)]]
                for g in range(F):
                    if g != f:
                        SW[t, g, f, p] = x[cols[("SW", t, g, f, p)]]
    Y = np.zeros((I, F, B, P))
    for (i, f, p), b in tiers.items():
        if b >= 0:
            Y[i, f, b, p] = 1.0
    Q = np.zeros((I, F, P))
    INV = np.zeros((I, F, P))
    V = np.zeros((I, F, P))
    for i in range(I):
        for f in range(F):
            for p in range(P):
                Q[i, f, p] = x[cols[("Q", i, f, p)]]
                INV[i, f, p] = x[cols[("INV", i, f, p)]]
                V[i, f, p] = x[cols[("V", i, f, p)]]
    TH = np.array([[x[cols[("TH", f, p)]] for p in range(P)] for f in range(F)])
    DP = np.array([[x[cols[("DP", f, p)]] for p in range(P)] for f in range(F)])
    DM = np.array([[x[cols[("DM", f, p)]] for p in range(P)] for f in range(F)])
    VAIR = np.zeros((F, P))
    PW = np.zeros((F, P))
    SC, NC, RC, EC, IC = (np.zeros((F, P)) for _ in range(5))
    for f, firm in enumerate(inst.firms):
        plant = firm.plant
        e = inst.energy[firm.id]
        for p in range(P):
            VAIR[f, p] = sum(plant.air_ratio.get(prod, 0.0) * V[i, f, p]
                             for i, prod in enumerate(inst.products))
            PW[f, p] = plant.air_power_coeff * VAIR[f, p] + sum(
                plant.power_coeff[prod] * V[i, f, p] for i, prod in enumerate(inst.products))
            rate = e.price[p] * OT
            EC[f, p] = rate * TH[f, p] + e.penalty * rate * (DP[f, p] + DM[f, p])
            IC[f, p] = sum(firm.inventory[prod].unit_cost * INV[i, f, p]
                           for i, prod in enumerate(inst.products))
            for t, r in enumerate(data.refs):
                tank = inst.tank(r)
                dem = data.D[t, p]
                usc = [tank.delivery_cost[fid][p] / dem if dem > 0 else 0.0 for fid in data.fids]
                upc = firm.unit_production_cost[inst.products[r.product]]
                SC[f, p] += usc[f] * S[t, f, p]
                SC[f, p] += sum(inst.swap_policy.eta(data.fids[g], firm.id) * usc[g] * SW[t, g, f, p]
                                for g in range(F) if g != f)
                SC[f, p] += sum(tier.premium * (usc[f] + upc) * OH[t, f, b, p]
                                for b, tier in enumerate(inst.tiers))
            for c, cust in enumerate(inst.customers):
                if p == 0:
                    signed = WS[c, f, :, 0].sum()
                    if cust.incumbent_firm == firm.id:
                        RC[f, p] += data.forfeit(c, f, 0) * (1.0 - signed)
                    else:
                        NC[f, p] += data.acquire(c, f, 0) * signed
                else:
                    NC[f, p] += data.acquire(c, f, p) * WN[c, f, p]
                    RC[f, p] += data.forfeit(c, f, p) * WD[c, f, p]
    arr = dict(W=W, WS=WS, WN=WN, WD=WD, Y=Y, S=S, SW=SW, O=OH.sum(axis=2), OH=OH, Q=Q, INV=INV,
               V=V, CAP=OT * V, VAIR=VAIR, PW=PW, THETA=TH, DPLUS=DP, DMINUS=DM, SC=SC, NC=NC,
               RC=RC, EC=EC, IC=IC)
    return GameOutcome(
        mode=f"oracle-{mode}", firm_ids=list(data.fids), customer_ids=list(inst.customer_ids),
        contract_ids=list(inst.contract_ids), products=list(inst.products),
        tier_ids=[t.id for t in inst.tiers],
        tanks=[(inst.customers[r.customer].id, inst.tank(r).id, inst.products[r.product])
               for r in data.refs],
        n_periods=P, profits=profits, objective=float(score), arrays=arr,
        diagnostics={"pattern": [list(s) for s in combo],
                     "energy_unit": {fid: inst.energy[fid].unit for fid in data.fids}})


def oracle_status_quo(inst, limits=None, cfg=None):
    """Status-quo profits by enumeration on the restricted instance."""
    r = restrict_to_incumbents(inst)
    fixed = {c: r.firm_index(cust.incumbent_firm) for c, cust in enumerate(r.customers)}
    res = enumerate_optimal(r, "social-welfare", limits=limits, fixed_firms=fixed, cfg=cfg)
    return res, r
