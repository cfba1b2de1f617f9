"""Translate an instance and a fairness mode into a :class:`ModelIR`.

Index conventions inside the builder: customers ``c``, firms ``f``, contracts
``k``, flat tank list ``t`` (see ``Instance.tank_refs``), products ``i``,
tiers ``b``, 0-based periods ``p``.  Variable names carry ids and 1-based
periods, e.g. ``W(c1,A,k2,3)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ModelError
from ..pricing import premium_table, price_table
from .ir import INF, ModelIR

__all__ = [
    "PROVENANCE_TAGS", "ModelBuilder", "build_model", "make_profit_grid",
    "default_margin",
]

# Every row the builder emits carries one of these tags.
PROVENANCE_TAGS = frozenset({
    "binassign", "startup", "start_contract", "mintime", "new_customer",
    "drop_customer", "demand_satisfaction", "capacity", "inventory_balance",
    "inventory_capacity", "outsource_disaggregate", "outsource_tier_bounds",
    "outsource_logic", "outsource_one_tier", "swap_bound", "swap_logic",
    "swap_balance", "surrogate_air", "surrogate_power", "capacity_definition",
    "production_limit", "serving_cost", "acquisition_cost", "forfeit_cost",
    "energy_upper_deviation", "energy_lower_deviation", "energy_balance",
    "electricity_cost", "inventory_cost", "profit", "rational",
    "sos2_convexity", "profit_approximation",
})


def default_margin(pi_sq):
    return max(1.0, 1e-6 * abs(pi_sq))


def make_profit_grid(pi_sq, upper, n, margin=None):
    """``n`` evenly spaced profit levels from ``pi_sq + margin`` to ``upper``."""
    if margin is None:
        margin = default_margin(pi_sq)
    if n < 2:
        raise ModelError("GRID_SIZE", "a profit grid needs at least two points")
    if margin <= 0:
        raise ModelError("GRID_MARGIN", "margin must be positive")
    lo = pi_sq + margin
    if not upper > lo:
        raise ModelError("EMPTY_BARGAINING_RANGE",
                         f"upper bound {upper} does not exceed status quo {pi_sq} + {margin}")
    return np.linspace(lo, upper, n)


class ModelBuilder:
    """Holds variable-id arrays per family so solutions can be decoded."""

    def __init__(self, inst, fixed_firms=None, name="model"):
        self.inst = inst
        self.m = ModelIR(name=name)
        self.fixed_firms = dict(fixed_firms or {})
        self.P = inst.n_periods
        self.F = len(inst.firms)
        self.C = len(inst.customers)
        self.K = len(inst.contracts)
        self.I = len(inst.products)
        self.B = len(inst.tiers)
        self.T = len(inst.tank_refs)
        self.durations = [k.duration for k in inst.contracts]
        for k in inst.contracts:
            if k.duration > self.P:
                raise ModelError("DURATION_EXCEEDS_HORIZON",
                                 f"contract {k.id} lasts {k.duration} > {self.P} periods")
        self.price = price_table(inst).values
        self.premium = premium_table(inst)
        self.demand = inst.demand
        self.tank_customer = np.array([r.customer for r in inst.tank_refs], dtype=int)
        self.tank_product = np.array([r.product for r in inst.tank_refs], dtype=int)
        self._declare()

    # -- variables -------------------------------------------------------------
    def _ids(self, t):
        inst = self.inst
        cid = inst.customers[inst.tank_refs[t].customer].id
        tank = inst.tank(inst.tank_refs[t])
        return tank.product, cid, tank.id

    def _declare(self):
        inst, m = self.inst, self.m
        P, F, C, K, I, B, T = self.P, self.F, self.C, self.K, self.I, self.B, self.T
        fids, cids, kids = inst.firm_ids, inst.customer_ids, inst.contract_ids
        prods = inst.products
        arr = lambda *shape: np.full(shape, -1, dtype=int)  # noqa: E731

        self.W, self.WS = arr(C, F, K, P), arr(C, F, K, P)
        self.WN, self.WD = arr(C, F, P), arr(C, F, P)
        for c in range(C):
            forced = self.fixed_firms.get(c)
            for f in range(F):
                ub = 0.0 if forced is not None and forced != f else 1.0
                for k in range(K):
                    for p in range(P):
                        idx = (cids[c], fids[f], kids[k], p + 1)
                        self.W[c, f, k, p] = m.add_var("W", idx, "B", 0.0, ub)
                        self.WS[c, f, k, p] = m.add_var("WS", idx, "B", 0.0, ub)
                for p in range(1, P):
                    self.WN[c, f, p] = m.add_var("WN", (cids[c], fids[f], p + 1), "B")
                    self.WD[c, f, p] = m.add_var("WD", (cids[c], fids[f], p + 1), "B")

        self.Y = arr(I, F, B, P)
        for i in range(I):
            for f in range(F):
                for b in range(B):
                    for p in range(P):
                        self.Y[i, f, b, p] = m.add_var(
                            "Y", (prods[i], fids[f], inst.tiers[b].id, p + 1), "B")

        self.S, self.O = arr(T, F, P), arr(T, F, P)
        self.SW = arr(T, F, F, P)  # SW[t, g, f, p]: produced by g for f's customer
        self.OH = arr(T, F, B, P)
        for t in range(T):
            tid = self._ids(t)
            for f in range(F):
                for p in range(P):
                    self.S[t, f, p] = m.add_var("S", (*tid, fids[f], p + 1))
                    self.O[t, f, p] = m.add_var("O", (*tid, fids[f], p + 1))
                    for g in range(F):
                        if g != f:
                            self.SW[t, g, f, p] = m.add_var(
                                "SW", (*tid, fids[g], fids[f], p + 1))
                    for b in range(B):
                        self.OH[t, f, b, p] = m.add_var(
                            "OH", (*tid, fids[f], inst.tiers[b].id, p + 1))

        self.Q, self.INV = arr(I, F, P), arr(I, F, P)
        self.V, self.CAP = arr(I, F, P), arr(I, F, P)
        for i in range(I):
            for f, firm in enumerate(inst.firms):
                vmax = firm.plant.max_flow.get(prods[i], 0.0)
                for p in range(P):
                    idx = (prods[i], fids[f], p + 1)
                    self.Q[i, f, p] = m.add_var("Q", idx)
                    self.INV[i, f, p] = m.add_var("INV", idx)
                    self.V[i, f, p] = m.add_var("V", idx, "C", 0.0, vmax)
                    self.CAP[i, f, p] = m.add_var("CAP", idx)

        fams = ["VAIR", "PW", "THETA", "DPLUS", "DMINUS", "SC", "NC", "RC", "EC", "IC"]
        self.fp = {name: arr(F, P) for name in fams}
        for f, fid in enumerate(fids):
            e = inst.energy[fid]
            lo, hi = (1 - e.tolerance) * e.contracted, (1 + e.tolerance) * e.contracted
            for p in range(P):
                for name in fams:
                    lb, ub = (lo, hi) if name == "THETA" else (0.0, INF)
                    self.fp[name][f, p] = m.add_var(name, (fid, p + 1), "C", lb, ub)
        self.PI = np.array([m.add_var("PI", (fid,), "C", -INF, INF) for fid in fids])
        self.LAM = None

    # -- blocks ----------------------------------------------------------------
    def _rows_since(self, start):
        return list(range(start, self.m.n_rows))

    def build_assignment_block(self):
        m, inst = self.m, self.inst
        start = m.n_rows
        P, F, C, K = self.P, self.F, self.C, self.K
        cids, fids, kids = inst.customer_ids, inst.firm_ids, inst.contract_ids
        W, WS = self.W, self.WS
        for c in range(C):
            for p in range(P):
                m.add_row("binassign", {W[c, f, k, p]: 1.0 for f in range(F) for k in range(K)},
                          "==", 1.0, (cids[c], p + 1))
                m.add_row("start_contract",
                          {WS[c, f, k, p]: 1.0 for f in range(F) for k in range(K)},
                          "<=", 1.0, (cids[c], p + 1))
            for f in range(F):
                for k in range(K):
                    L = self.durations[k]
                    for p in range(P):
                        idx = (cids[c], fids[f], kids[k], p + 1)
                        row = {W[c, f, k, p]: 1.0, WS[c, f, k, p]: -1.0}
                        if p > 0:
                            row[W[c, f, k, p - 1]] = -1.0
                        m.add_row("startup", row, "<=", 0.0, idx)
                        # coverage window truncated at the first period
                        row = {WS[c, f, k, q]: 1.0 for q in range(max(0, p - L + 1), p + 1)}
                        row[W[c, f, k, p]] = row.get(W[c, f, k, p], 0.0) - 1.0
                        m.add_row("mintime", row, "==", 0.0, idx)
                for p in range(1, P):
                    signed = {WS[c, f, k, p]: 1.0 for k in range(K)}
                    ended = {WS[c, f, k, p - self.durations[k]]: 1.0
                             for k in range(K) if p - self.durations[k] >= 0}
                    row = {self.WN[c, f, p]: 1.0}
                    for v, a in signed.items():
                        row[v] = row.get(v, 0.0) - a
                    for v, a in ended.items():
                        row[v] = row.get(v, 0.0) + a
                    m.add_row("new_customer", row, ">=", 0.0, (cids[c], fids[f], p + 1))
                    row = {self.WD[c, f, p]: 1.0}
                    for v, a in ended.items():
                        row[v] = row.get(v, 0.0) - a
                    for v, a in signed.items():
                        row[v] = row.get(v, 0.0) + a
                    m.add_row("drop_customer", row, ">=", 0.0, (cids[c], fids[f], p + 1))
        return self._rows_since(start)

    def _assigned(self, row, t, f, p, scale):
        """Add ``scale * D[t,p] * sum_k W[c,f,k,p]`` to ``row``."""
        c = self.tank_customer[t]
        d = self.demand[t, p]
        if d != 0.0:
            for k in range(self.K):
                vid = self.W[c, f, k, p]
                row[vid] = row.get(vid, 0.0) + scale * d
        return row

    def build_flow_block(self):
        m, inst = self.m, self.inst
        start = m.n_rows
        P, F, I, B, T = self.P, self.F, self.I, self.B, self.T
        fids = inst.firm_ids
        S, SW, O, OH = self.S, self.SW, self.O, self.OH
        xi = inst.swap_policy.capacity_fraction
        tanks_of = [np.flatnonzero(self.tank_product == i) for i in range(I)]

        for t in range(T):
            tid = self._ids(t)
            for f in range(F):
                for p in range(P):
                    idx = (*tid, fids[f], p + 1)
                    row = {S[t, f, p]: 1.0, O[t, f, p]: 1.0}
                    for g in range(F):
                        if g != f:
                            row[SW[t, g, f, p]] = 1.0
                    m.add_row("demand_satisfaction", self._assigned(row, t, f, p, -1.0),
                              "==", 0.0, idx)
                    row = {O[t, f, p]: 1.0}
                    for b in range(B):
                        row[OH[t, f, b, p]] = -1.0
                    m.add_row("outsource_disaggregate", row, "==", 0.0, idx)
                    row = {OH[t, f, b, p]: 1.0 for b in range(B)}
                    if row:
                        m.add_row("outsource_logic", self._assigned(row, t, f, p, -1.0),
                                  "<=", 0.0, idx)
                    for g in range(F):
                        if g != f:
                            row = self._assigned({SW[t, g, f, p]: 1.0}, t, f, p, -1.0)
                            m.add_row("swap_logic", row, "<=", 0.0,
                                      (*tid, fids[g], fids[f], p + 1))

        for i in range(I):
            for f, firm in enumerate(inst.firms):
                inv0 = firm.inventory[inst.products[i]].initial
                for p in range(P):
                    idx = (inst.products[i], fids[f], p + 1)
                    out_sw = {SW[t, f, g, p]: 1.0 for t in tanks_of[i] for g in range(F) if g != f}
                    row = {self.Q[i, f, p]: 1.0, self.CAP[i, f, p]: -1.0, **out_sw}
                    m.add_row("capacity", row, "<=", 0.0, idx)
                    row = {**out_sw, self.CAP[i, f, p]: -xi}
                    m.add_row("swap_bound", row, "<=", 0.0, idx)
                    row = {self.INV[i, f, p]: 1.0, self.Q[i, f, p]: -1.0, **out_sw}
                    for t in tanks_of[i]:
                        row[S[t, f, p]] = 1.0
                    if p > 0:
                        row[self.INV[i, f, p - 1]] = -1.0
                    m.add_row("inventory_balance", row, "==", inv0 if p == 0 else 0.0, idx)
                    for b, tier in enumerate(inst.tiers):
                        tot = {OH[t, f, b, p]: 1.0 for t in tanks_of[i]}
                        bidx = (inst.products[i], fids[f], tier.id, p + 1)
                        m.add_row("outsource_tier_bounds",
                                  {**tot, self.Y[i, f, b, p]: -tier.lower}, ">=", 0.0, bidx)
                        m.add_row("outsource_tier_bounds",
                                  {**tot, self.Y[i, f, b, p]: -tier.upper}, "<=", 0.0,
                                  (*bidx, "U"))
                    if B:
                        m.add_row("outsource_one_tier",
                                  {self.Y[i, f, b, p]: 1.0 for b in range(B)}, "<=", 1.0, idx)

        for n, interval in enumerate(inst.swap_policy.intervals):
            periods = [q - 1 for q in interval]
            for i in range(I):
                for f in range(F):
                    for g in range(f + 1, F):
                        row = {}
                        for p in periods:
                            for t in tanks_of[i]:
                                row[SW[t, f, g, p]] = 1.0
                                row[SW[t, g, f, p]] = -1.0
                        m.add_row("swap_balance", row, "==", 0.0,
                                  (inst.products[i], fids[f], fids[g], n + 1))
        return self._rows_since(start)

    def build_plant_block(self):
        m, inst = self.m, self.inst
        start = m.n_rows
        OT = inst.horizon.operating_hours
        prods = inst.products
        for f, firm in enumerate(inst.firms):
            plant = firm.plant
            for prod in prods:
                if prod not in plant.max_flow or prod not in plant.power_coeff:
                    raise ModelError("PLANT_COEFFICIENT",
                                     f"firm {firm.id} lacks surrogate data for {prod}")
            for p in range(self.P):
                idx = (firm.id, p + 1)
                row = {self.fp["VAIR"][f, p]: 1.0}
                for i, prod in enumerate(prods):
                    row[self.V[i, f, p]] = -plant.air_ratio.get(prod, 0.0)
                m.add_row("surrogate_air", row, "==", 0.0, idx)
                row = {self.fp["PW"][f, p]: 1.0, self.fp["VAIR"][f, p]: -plant.air_power_coeff}
                for i, prod in enumerate(prods):
                    row[self.V[i, f, p]] = -plant.power_coeff[prod]
                m.add_row("surrogate_power", row, "==", 0.0, idx)
                for i, prod in enumerate(prods):
                    inv = firm.inventory[prod]
                    iidx = (prod, firm.id, p + 1)
                    m.add_row("capacity_definition",
                              {self.CAP[i, f, p]: 1.0, self.V[i, f, p]: -OT}, "==", 0.0, iidx)
                    m.add_row("production_limit",
                              {self.Q[i, f, p]: 1.0, self.CAP[i, f, p]: -1.0}, "<=", 0.0, iidx)
                    m.add_row("inventory_capacity",
                              {self.INV[i, f, p]: 1.0, self.V[i, f, p]: -inv.lower_factor[p]},
                              ">=", 0.0, iidx)
                    m.add_row("inventory_capacity",
                              {self.INV[i, f, p]: 1.0, self.V[i, f, p]: -inv.upper_factor[p]},
                              "<=", 0.0, (*iidx, "U"))
        return self._rows_since(start)

    def acquisition_amount(self, c, f, p):
        """Fixed plus demand-proportional cost of acquiring customer ``c``."""
        inst = self.inst
        cust = inst.customers[c]
        fid = inst.firm_ids[f]
        total = cust.acquire_fixed.get(fid, 0.0)
        for t in np.flatnonzero(self.tank_customer == c):
            tank = inst.tank(inst.tank_refs[t])
            total += tank.acquire_variable.get(fid, 0.0) * self.demand[t, p]
        return total

    def forfeit_amount(self, c, f, p):
        inst = self.inst
        cust = inst.customers[c]
        fid = inst.firm_ids[f]
        total = cust.forfeit_fixed.get(fid, 0.0)
        for t in np.flatnonzero(self.tank_customer == c):
            tank = inst.tank(inst.tank_refs[t])
            total += tank.forfeit_variable.get(fid, 0.0) * self.demand[t, p]
        return total

    def build_cost_blocks(self):
        m, inst = self.m, self.inst
        start = m.n_rows
        OT = inst.horizon.operating_hours
        usc, swc, oc = self.premium.usc, self.premium.swap, self.premium.spot
        fp = self.fp
        for f, fid in enumerate(inst.firm_ids):
            e = inst.energy[fid]
            firm = inst.firms[f]
            for p in range(self.P):
                idx = (fid, p + 1)
                row = {fp["SC"][f, p]: 1.0}
                for t in range(self.T):
                    row[self.S[t, f, p]] = -usc[t, f, p]
                    for g in range(self.F):
                        if g != f:
                            row[self.SW[t, g, f, p]] = -swc[t, g, f, p]
                    for b in range(self.B):
                        row[self.OH[t, f, b, p]] = -oc[t, f, b, p]
                m.add_row("serving_cost", row, "==", 0.0, idx)

                row, rhs = {fp["NC"][f, p]: 1.0}, 0.0
                if p == 0:
                    for c, cust in enumerate(inst.customers):
                        if cust.incumbent_firm != fid:
                            a = self.acquisition_amount(c, f, 0)
                            for k in range(self.K):
                                row[self.WS[c, f, k, 0]] = -a
                else:
                    for c in range(self.C):
                        row[self.WN[c, f, p]] = -self.acquisition_amount(c, f, p)
                m.add_row("acquisition_cost", row, "==", rhs, idx)

                row, rhs = {fp["RC"][f, p]: 1.0}, 0.0
                if p == 0:
                    for c, cust in enumerate(inst.customers):
                        if cust.incumbent_firm == fid:
                            a = self.forfeit_amount(c, f, 0)
                            rhs += a
                            for k in range(self.K):
                                row[self.WS[c, f, k, 0]] = a
                else:
                    for c in range(self.C):
                        row[self.WD[c, f, p]] = -self.forfeit_amount(c, f, p)
                m.add_row("forfeit_cost", row, "==", rhs, idx)

                pw, th = fp["PW"][f, p], fp["THETA"][f, p]
                dp, dm = fp["DPLUS"][f, p], fp["DMINUS"][f, p]
                m.add_row("energy_upper_deviation", {dp: 1.0, pw: -1.0}, ">=",
                          -(1 + e.tolerance) * e.contracted, idx)
                m.add_row("energy_lower_deviation", {dm: 1.0, pw: 1.0}, ">=",
                          (1 - e.tolerance) * e.contracted, idx)
                m.add_row("energy_balance", {pw: 1.0, th: -1.0, dp: -1.0, dm: 1.0}, "==", 0.0, idx)
                rate = e.price[p] * OT
                m.add_row("electricity_cost",
                          {fp["EC"][f, p]: 1.0, th: -rate, dp: -e.penalty * rate,
                           dm: -e.penalty * rate}, "==", 0.0, idx)
                row = {fp["IC"][f, p]: 1.0}
                for i, prod in enumerate(inst.products):
                    row[self.INV[i, f, p]] = -firm.inventory[prod].unit_cost
                m.add_row("inventory_cost", row, "==", 0.0, idx)
        return self._rows_since(start)

    def revenue_coefficients(self, f):
        """``{W var id: price * demand}`` summed over the customer's tanks."""
        coeffs = {}
        for t in range(self.T):
            c = self.tank_customer[t]
            for k in range(self.K):
                for p in range(self.P):
                    a = self.price[t, f, k, p] * self.demand[t, p]
                    if a:
                        vid = self.W[c, f, k, p]
                        coeffs[vid] = coeffs.get(vid, 0.0) + a
        return coeffs

    def build_profit_and_rationality(self, mode="social-welfare", status_quo=None):
        m, inst = self.m, self.inst
        start = m.n_rows
        if mode == "nash" and status_quo is None:
            raise ModelError("STATUS_QUO_REQUIRED", "nash mode needs status-quo profits")
        for f, fid in enumerate(inst.firm_ids):
            row = {self.PI[f]: 1.0}
            for vid, a in self.revenue_coefficients(f).items():
                row[vid] = -a
            for name in ("SC", "RC", "NC", "EC", "IC"):
                for p in range(self.P):
                    row[self.fp[name][f, p]] = 1.0
            m.add_row("profit", row, "==", 0.0, (fid,))
        if mode == "nash":
            for f, fid in enumerate(inst.firm_ids):
                m.add_row("rational", {self.PI[f]: 1.0}, ">=", float(status_quo[fid]), (fid,))
        return self._rows_since(start)

    def build_nash_sos2(self, status_quo, grids):
        """SOS2 interpolation of each firm's profit and the log-Nash objective."""
        m, inst = self.m, self.inst
        start = m.n_rows
        alpha = inst.game.negotiation_power
        self.LAM = []
        obj = {}
        for f, fid in enumerate(inst.firm_ids):
            grid = np.asarray(grids[fid], dtype=float)
            sq = float(status_quo[fid])
            if np.any(grid <= sq):
                raise ModelError("LOG_DOMAIN", f"firm {fid}: grid point at or below status quo")
            lam = [m.add_var("LAM", (fid, n + 1), "C", 0.0, 1.0) for n in range(len(grid))]
            self.LAM.append(lam)
            m.add_row("sos2_convexity", {v: 1.0 for v in lam}, "==", 1.0, (fid,))
            row = {self.PI[f]: 1.0}
            for v, g in zip(lam, grid):
                row[v] = -g
            m.add_row("profit_approximation", row, "==", 0.0, (fid,))
            m.add_sos2(lam, grid, firm=fid, name=f"SOS2({fid})")
            for v, g in zip(lam, grid):
                obj[v] = alpha[fid] * math.log(g - sq)
        m.set_objective("max", obj)
        return self._rows_since(start)

    def build_social_welfare_objective(self):
        self.m.set_objective("max", {int(v): 1.0 for v in self.PI})


def build_model(inst, mode="social-welfare", status_quo=None, grids=None,
                fixed_firms=None, name=None):
    """Assemble the full model. Returns ``(model, builder)``.

    ``mode`` is ``"social-welfare"``, ``"status-quo"`` (same model, callers
    pass the restricted instance and ``fixed_firms``) or ``"nash"`` (needs
    ``status_quo`` profits by firm id and ``grids`` by firm id).
    """
    b = ModelBuilder(inst, fixed_firms=fixed_firms, name=name or mode)
    b.build_assignment_block()
    b.build_flow_block()
    b.build_plant_block()
    b.build_cost_blocks()
    b.build_profit_and_rationality("nash" if mode == "nash" else "social-welfare", status_quo)
    if mode == "nash":
        if grids is None:
            raise ModelError("GRID_REQUIRED", "nash mode needs profit grids")
        b.build_nash_sos2(status_quo, grids)
    else:
        b.build_social_welfare_objective()
    b.m.freeze()
    return b.m, b
