"""Status quo, social welfare and Nash bargaining solves, plus verification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GameError, ModelError, SolverError
from .instance import check_instance, restrict_to_incumbents
from .model.builder import build_model, default_margin, make_profit_grid
from .solver.bnb import solve_milp
from .solver.simplex import solve_lp

__all__ = [
    "StatusQuo", "GameOutcome", "VerificationReport", "compute_status_quo",
    "solve_social_welfare", "solve_nash", "nash_product", "true_nash_objective",
    "verify_outcome", "decode_solution", "solve_model", "bargaining_upper_bounds",
    "initial_nash_grids", "outcome_from_solution",
]

ARRAY_KEYS = ("W", "WS", "WN", "WD", "Y", "S", "SW", "O", "OH", "Q", "INV", "V", "CAP",
              "VAIR", "PW", "THETA", "DPLUS", "DMINUS", "SC", "NC", "RC", "EC", "IC")
COST_KEYS = ("SC", "NC", "RC", "EC", "IC")


@dataclass
class GameOutcome:
    mode: str
    firm_ids: list
    customer_ids: list
    contract_ids: list
    products: list
    tier_ids: list
    tanks: list  # [(customer id, tank id, product)]
    n_periods: int
    profits: dict
    objective: float
    arrays: dict
    diagnostics: dict = field(default_factory=dict)
    status_quo: dict = None

    @property
    def total_profit(self):
        return float(sum(self.profits.values()))

    def to_dict(self):
        return {
            "mode": self.mode, "firm_ids": list(self.firm_ids),
            "customer_ids": list(self.customer_ids), "contract_ids": list(self.contract_ids),
            "products": list(self.products), "tier_ids": list(self.tier_ids),
            "tanks": [list(t) for t in self.tanks], "n_periods": self.n_periods,
            "profits": {k: float(v) for k, v in self.profits.items()},
            "objective": float(self.objective),
            "status_quo": None if self.status_quo is None
            else {k: float(v) for k, v in self.status_quo.items()},
            "arrays": {k: np.asarray(v).tolist() for k, v in self.arrays.items()},
            "diagnostics": _jsonable(self.diagnostics),
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, allow_nan=True)

    @classmethod
    def from_dict(cls, d):
        return cls(
            mode=d["mode"], firm_ids=list(d["firm_ids"]), customer_ids=list(d["customer_ids"]),
            contract_ids=list(d["contract_ids"]), products=list(d["products"]),
            tier_ids=list(d["tier_ids"]), tanks=[tuple(t) for t in d["tanks"]],
            n_periods=int(d["n_periods"]), profits=dict(d["profits"]),
            objective=float(d["objective"]),
            arrays={k: np.asarray(v, dtype=float) for k, v in d["arrays"].items()},
            diagnostics=dict(d.get("diagnostics", {})), status_quo=d.get("status_quo"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass
class StatusQuo:
    profits: dict
    outcome: GameOutcome
    instance: object  # the restricted instance the outcome refers to

    def __getitem__(self, firm):
        return self.profits[firm]


# -- solving -------------------------------------------------------------------

def solve_model(model, cfg=None, solver="embedded", start=None):
    if solver == "embedded":
        return solve_milp(model, cfg, start=start)
    if solver == "external":
        from .solver.external import solve_external
        return solve_external(model, cfg)
    raise SolverError("UNKNOWN_SOLVER", solver)


def decode_solution(builder, x):
    """Arrays per variable family, indexed like the builder's id arrays."""
    x = np.asarray(x, dtype=float)
    out = {}
    for key in ARRAY_KEYS:
        ids = builder.fp[key] if key in builder.fp else getattr(builder, key)
        vals = np.where(ids >= 0, x[np.maximum(ids, 0)], 0.0)
        if key in ("W", "WS", "WN", "WD", "Y"):
            vals = np.round(vals)
        out[key] = vals
    return out


def _outcome(inst, builder, sol, mode, extra=None):
    x = sol.x
    arrays = decode_solution(builder, x)
    profits = {fid: float(x[builder.PI[f]]) for f, fid in enumerate(inst.firm_ids)}
    diag = {"status": sol.status, "objective": sol.objective, "best_bound": sol.best_bound,
            "gap": sol.gap, "nodes": sol.nodes, "lp_iterations": sol.lp_iterations,
            "n_vars": builder.m.n_vars, "n_rows": builder.m.n_rows,
            "energy_unit": {fid: inst.energy[fid].unit for fid in inst.firm_ids}}
    if extra:
        diag.update(extra)
    return GameOutcome(
        mode=mode, firm_ids=list(inst.firm_ids), customer_ids=list(inst.customer_ids),
        contract_ids=list(inst.contract_ids), products=list(inst.products),
        tier_ids=[t.id for t in inst.tiers],
        tanks=[(inst.customers[r.customer].id, inst.tank(r).id, inst.products[r.product])
               for r in inst.tank_refs],
        n_periods=inst.n_periods, profits=profits, objective=float(sol.objective),
        arrays=arrays, diagnostics=diag)


def outcome_from_solution(inst, builder, sol, mode, extra=None):
    """Decode a solution vector of a built model into a :class:`GameOutcome`."""
    return _outcome(inst, builder, sol, mode, extra)


def _raise_for_status(sol, code, model, cfg):
    if sol.status == "infeasible":
        raise GameError(code, _infeasibility_witness(model, cfg))
    if not sol.has_solution:
        raise SolverError("NO_SOLUTION", f"solver status {sol.status}")


def _infeasibility_witness(model, cfg):
    """Name the row carrying the largest elastic slack in the LP relaxation."""
    lp = solve_lp(model, cfg)
    if lp.ok:
        return f"model {model.name}: LP relaxation feasible; integer restrictions infeasible"
    from .model.ir import ModelIR
    el = ModelIR(name=model.name + "_elastic")
    for v in model.variables:
        el.add_var(v.family, v.index, "C", v.lb, v.ub)
    slack = {}
    for r in model.rows:
        coeffs = dict(r.coeffs)
        if r.sense in ("<=", "=="):
            s = el.add_var("_neg", (len(slack),))
            slack[s] = r.name
            coeffs[s] = -1.0
        if r.sense in (">=", "=="):
            s = el.add_var("_pos", (len(slack),))
            slack[s] = r.name
            coeffs[s] = 1.0
        el.add_row(r.tag, coeffs, r.sense, r.rhs, name=r.name)
    el.set_objective("min", {s: 1.0 for s in slack})
    sol = solve_lp(el.freeze(), cfg)
    if not sol.ok:
        return f"model {model.name}: infeasible"
    worst = max(slack, key=lambda s: (sol.x[s], -s))
    return f"violated row {slack[worst]} (elastic slack {sol.x[worst]:.6g})"


def compute_status_quo(inst, cfg=None, solver="embedded"):
    """Best centralized profit with free customers removed and incumbents fixed."""
    check_instance(inst)
    r = restrict_to_incumbents(inst)
    fixed = {c: r.firm_index(cust.incumbent_firm) for c, cust in enumerate(r.customers)}
    model, b = build_model(r, "status-quo", fixed_firms=fixed, name="status_quo")
    sol = solve_model(model, cfg, solver)
    _raise_for_status(sol, "STATUS_QUO_INFEASIBLE", model, cfg)
    out = _outcome(r, b, sol, "sq")
    out.status_quo = dict(out.profits)
    return StatusQuo(dict(out.profits), out, r)


def solve_social_welfare(inst, cfg=None, solver="embedded", status_quo=None):
    check_instance(inst)
    model, b = build_model(inst, "social-welfare", name="social_welfare")
    sol = solve_model(model, cfg, solver)
    _raise_for_status(sol, "INFEASIBLE", model, cfg)
    out = _outcome(inst, b, sol, "fsw")
    if status_quo is not None:
        out.status_quo = dict(status_quo.profits)
    return out


def nash_product(profits, sq, alpha):
    """``prod (pi_f - sq_f) ** alpha_f``; zero when any surplus is zero."""
    val = 1.0
    for f in alpha:
        s = float(profits[f]) - float(sq[f])
        if s < 0:
            raise GameError("NEGATIVE_SURPLUS", f"firm {f}: surplus {s}", firm=f)
        val *= s ** float(alpha[f])
    return val


def true_nash_objective(profits, sq, alpha, strict=True):
    """Return ``(Phi, Psi)`` for the Nash product and its logarithm.

    With ``strict`` a zero surplus raises ``LOG_DOMAIN``; otherwise ``Psi``
    is ``-inf`` there.
    """
    if isinstance(sq, StatusQuo):
        sq = sq.profits
    phi = nash_product(profits, sq, alpha)
    psi = 0.0
    for f in alpha:
        s = float(profits[f]) - float(sq[f])
        if s <= 0:
            if strict:
                raise GameError("LOG_DOMAIN", f"firm {f} has zero surplus", firm=f)
            return phi, -math.inf
        psi += float(alpha[f]) * math.log(s)
    return phi, psi


def bargaining_upper_bounds(inst, sq, welfare_bound, headroom=0.05):
    """Per-firm grid ceilings.

    A rational outcome gives firm ``f`` at most the welfare bound minus the
    other firms' status-quo profits; ``headroom`` widens that by a fraction
    of the firm's bargaining range.
    """
    total_sq = sum(sq.values())
    out = {}
    for fid in inst.firm_ids:
        cap = welfare_bound - (total_sq - sq[fid])
        out[fid] = cap + headroom * max(0.0, cap - sq[fid])
    return out


def initial_nash_grids(inst, sq, fsw=None, n=None, upper=None):
    """First-round profit grids; returns ``(grids, upper, margins)``.

    ``upper`` defaults to :func:`bargaining_upper_bounds` at the welfare
    outcome's proven bound (or objective).
    """
    sq = dict(getattr(sq, "profits", sq))
    n = n or inst.game.grid_size
    if upper is None:
        bound = fsw.diagnostics.get("best_bound", fsw.objective)
        if bound is None or not math.isfinite(bound):
            bound = fsw.objective
        upper = bargaining_upper_bounds(inst, sq, max(bound, fsw.objective))
    margins = {f: default_margin(sq[f]) for f in inst.firm_ids}
    grids = {}
    for f in inst.firm_ids:
        try:
            grids[f] = make_profit_grid(sq[f], upper[f], n, margins[f])
        except ModelError as exc:
            raise GameError(exc.code, f"firm {f}: {exc}", firm=f) from None
    return grids, dict(upper), margins


def _refined_grid(center, span, lo, hi, n):
    span = min(span, hi - lo)
    a = center - span / 2.0
    a = min(max(a, lo), hi - span)
    return np.linspace(a, a + span, n)


def solve_nash(inst, sq=None, fsw=None, cfg=None, grid_size=None, refine_rounds=None,
               solver="embedded", upper=None):
    """SOS2-linearized Nash bargaining with best-of-rounds grid refinement."""
    check_instance(inst)
    if sq is None:
        sq = compute_status_quo(inst, cfg, solver)
    if sq.outcome.customer_ids and set(sq.outcome.customer_ids) - set(inst.customer_ids):
        raise GameError("STATUS_QUO_MISMATCH", "status quo refers to other customers")
    n = grid_size or inst.game.grid_size
    rounds = inst.game.refine_rounds if refine_rounds is None else refine_rounds
    alpha = dict(inst.game.negotiation_power)
    sqp = sq.profits
    if upper is None and fsw is None:
        fsw = solve_social_welfare(inst, cfg, solver)
    grids, upper, margins = initial_nash_grids(inst, sqp, fsw, n, upper)

    best, best_psi, start = None, -math.inf, None
    history = []
    for rnd in range(rounds + 1):
        model, b = build_model(inst, "nash", status_quo=sqp, grids=grids, name=f"nash_r{rnd}")
        sol = solve_model(model, cfg, solver, start=start)
        if sol.status == "infeasible":
            if best is None:
                raise GameError("NO_BARGAINING_SOLUTION",
                                _infeasibility_witness(model, cfg))
            break
        if not sol.has_solution:
            raise SolverError("NO_SOLUTION", f"solver status {sol.status}")
        profits = {fid: float(sol.x[b.PI[f]]) for f, fid in enumerate(inst.firm_ids)}
        _, psi = true_nash_objective(profits, sqp, alpha, strict=False)
        rec = {"round": rnd, "psi_tilde": sol.objective, "psi": psi,
               "grid": {f: [float(grids[f][0]), float(grids[f][-1])] for f in grids},
               "nodes": sol.nodes}
        if best is None or psi > best_psi:
            best_psi = psi
            best = _outcome(inst, b, sol, "flns", {
                "grid_size": n, "round": rnd,
                "grids": {f: grids[f].tolist() for f in grids}})
            best.diagnostics["psi_tilde"] = sol.objective
            best.diagnostics["psi"] = psi
        rec["best_psi"] = best_psi
        history.append(rec)
        if rnd == rounds:
            break
        start = sol.x
        for fid in inst.firm_ids:
            g = grids[fid]
            grids[fid] = _refined_grid(profits[fid], (g[-1] - g[0]) / 2.0,
                                       sqp[fid] + margins[fid], upper[fid], n)
    best.diagnostics["rounds"] = history
    best.diagnostics["upper"] = dict(upper)
    best.status_quo = dict(sqp)
    return best


# -- verification --------------------------------------------------------------

@dataclass
class VerificationReport:
    max_violation: dict  # family -> scaled max violation
    worst_location: dict
    profit_recomputed: dict
    profit_mismatch: float
    tol: float

    @property
    def ok(self):
        return (all(v <= self.tol for v in self.max_violation.values())
                and self.profit_mismatch <= 1e-6)

    @property
    def worst(self):
        return max(self.max_violation.values(), default=0.0)

    def failures(self):
        return {k: v for k, v in self.max_violation.items() if v > self.tol}


def _contract_prices(inst):
    """Price per (tank, firm, contract, period) re-derived from raw inputs."""
    P = inst.n_periods
    refs = inst.tank_refs
    out = np.zeros((len(refs), len(inst.firms), len(inst.contracts), P))
    for t, ref in enumerate(refs):
        cust = inst.customers[ref.customer]
        tank = cust.tanks[ref.tank]
        base = sum(cust.terms)
        for f, fid in enumerate(inst.firm_ids):
            for k, con in enumerate(inst.contracts):
                beta = tank.base_price[fid][con.id]
                esc = con.escalation.get(fid)
                for p in range(P):
                    if p == 0 or esc is None:
                        out[t, f, k, p] = beta * base
                    else:
                        out[t, f, k, p] = beta * sum(T * (1 + e) for T, e in zip(cust.terms, esc[p]))
    return out


def verify_outcome(inst, outcome, tol=1e-7):
    """Re-evaluate every constraint family and cost from raw instance data."""
    if list(outcome.customer_ids) != list(inst.customer_ids):
        raise GameError("OUTCOME_MISMATCH", "outcome customers differ from the instance")
    a = {k: np.asarray(v, dtype=float) for k, v in outcome.arrays.items()}
    P, F = inst.n_periods, len(inst.firms)
    fids = inst.firm_ids
    refs = inst.tank_refs
    D = inst.demand
    OT = inst.horizon.operating_hours
    W, WS, WN, WD = a["W"], a["WS"], a["WN"], a["WD"]
    S, SW, O, OH, Y = a["S"], a["SW"], a["O"], a["OH"], a["Y"]
    worst, where = {}, {}

    def note(family, amount, scale, loc):
        v = max(0.0, float(amount)) / max(1.0, float(scale))
        if v > worst.get(family, -1.0):
            worst[family] = v
            where[family] = loc

    def eq(family, lhs, rhs, loc, scale=None):
        note(family, abs(lhs - rhs), scale if scale is not None else max(abs(lhs), abs(rhs)), loc)

    def le(family, lhs, rhs, loc, scale=None):
        note(family, lhs - rhs, scale if scale is not None else max(abs(lhs), abs(rhs)), loc)

    for key in ("W", "WS", "WN", "WD", "Y"):
        arr = a[key]
        note("INTEGRALITY", float(np.max(np.abs(arr - np.round(arr)), initial=0.0)), 1.0, key)
        note("INTEGRALITY", float(np.max(np.maximum(-arr, arr - 1), initial=0.0)), 1.0, key)
    for key in ("S", "SW", "O", "OH", "Q", "INV", "V", "CAP", "DPLUS", "DMINUS"):
        note("NONNEGATIVITY", float(np.max(-a[key], initial=0.0)), 1.0, key)

    for c, cust in enumerate(inst.customers):
        for p in range(P):
            eq("EXACT_ASSIGNMENT", W[c, :, :, p].sum(), 1.0, (cust.id, p + 1))
            le("SINGLE_SIGNATURE", WS[c, :, :, p].sum(), 1.0, (cust.id, p + 1))
        for f in range(F):
            for k, con in enumerate(inst.contracts):
                L = con.duration
                for p in range(P):
                    prev = W[c, f, k, p - 1] if p else 0.0
                    le("STARTUP", W[c, f, k, p] - prev, WS[c, f, k, p], (cust.id, fids[f], con.id, p + 1))
                    eq("DURATION_COVERAGE", WS[c, f, k, max(0, p - L + 1):p + 1].sum(),
                       W[c, f, k, p], (cust.id, fids[f], con.id, p + 1))
            for p in range(1, P):
                signed = WS[c, f, :, p].sum()
                ended = sum(WS[c, f, k, p - con.duration] for k, con in enumerate(inst.contracts)
                            if p - con.duration >= 0)
                le("ACQUISITION_LINK", signed - ended, WN[c, f, p], (cust.id, fids[f], p + 1))
                le("FORFEIT_LINK", ended - signed, WD[c, f, p], (cust.id, fids[f], p + 1))

    served = np.einsum("cfkp->cfp", W)
    tank_c = np.array([r.customer for r in refs], dtype=int)
    tank_i = np.array([r.product for r in refs], dtype=int)
    for t, r in enumerate(refs):
        loc_base = (inst.customers[r.customer].id, inst.tank(r).id)
        for f in range(F):
            for p in range(P):
                assigned = D[t, p] * served[r.customer, f, p]
                incoming = sum(SW[t, g, f, p] for g in range(F) if g != f)
                eq("DEMAND_EQUALITY", S[t, f, p] + incoming + O[t, f, p], assigned,
                   (*loc_base, fids[f], p + 1))
                eq("TIER_LOGIC", O[t, f, p], OH[t, f, :, p].sum(), (*loc_base, fids[f], p + 1))
                if len(inst.tiers):
                    le("TIER_LOGIC", OH[t, f, :, p].sum(), assigned, (*loc_base, fids[f], p + 1))
                for g in range(F):
                    if g != f:
                        le("SWAP_LOGIC", SW[t, g, f, p], assigned, (*loc_base, fids[g], fids[f], p + 1))

    xi = inst.swap_policy.capacity_fraction
    for i, prod in enumerate(inst.products):
        tanks = np.flatnonzero(tank_i == i)
        for f, firm in enumerate(inst.firms):
            inv = firm.inventory[prod]
            vmax = firm.plant.max_flow.get(prod, 0.0)
            for p in range(P):
                loc = (prod, fids[f], p + 1)
                out_sw = sum(SW[t, f, g, p] for t in tanks for g in range(F) if g != f)
                cap = OT * a["V"][i, f, p]
                eq("PLANT", a["CAP"][i, f, p], cap, loc)
                le("PLANT", a["V"][i, f, p], vmax, loc)
                le("CAPACITY", a["Q"][i, f, p] + out_sw, cap, loc)
                le("CAPACITY", a["Q"][i, f, p], cap, loc)
                le("SWAP_BOUND", out_sw, xi * cap, loc, scale=max(abs(out_sw), abs(cap)))
                prev = a["INV"][i, f, p - 1] if p else inv.initial
                delivered = sum(S[t, f, p] for t in tanks)
                eq("INVENTORY", a["INV"][i, f, p], prev + a["Q"][i, f, p] - out_sw - delivered, loc,
                   scale=max(abs(prev), abs(a["Q"][i, f, p]), abs(out_sw), abs(delivered)))
                le("INVENTORY", inv.lower_factor[p] * a["V"][i, f, p], a["INV"][i, f, p], loc)
                le("INVENTORY", a["INV"][i, f, p], inv.upper_factor[p] * a["V"][i, f, p], loc)
                le("TIER_LOGIC", Y[i, f, :, p].sum(), 1.0, loc)
                for b, tier in enumerate(inst.tiers):
                    tot = sum(OH[t, f, b, p] for t in tanks)
                    le("TIER_LOGIC", tier.lower * Y[i, f, b, p], tot, (*loc, tier.id))
                    le("TIER_LOGIC", tot, tier.upper * Y[i, f, b, p], (*loc, tier.id))
        for f in range(F):
            for g in range(f + 1, F):
                for n, iv in enumerate(inst.swap_policy.intervals):
                    fwd = sum(SW[t, f, g, q - 1] for t in tanks for q in iv)
                    back = sum(SW[t, g, f, q - 1] for t in tanks for q in iv)
                    eq("SWAP_BALANCE", fwd, back, (prod, fids[f], fids[g], n + 1))

    # costs from raw data
    prices = _contract_prices(inst)
    recomputed = {}
    for f, firm in enumerate(inst.firms):
        fid = firm.id
        e = inst.energy[fid]
        plant = firm.plant
        revenue = 0.0
        for t, r in enumerate(refs):
            for k in range(len(inst.contracts)):
                revenue += float(np.sum(prices[t, f, k, :] * D[t, :] * W[r.customer, f, k, :]))
        total_cost = 0.0
        for p in range(P):
            loc = (fid, p + 1)
            vair = sum(plant.air_ratio.get(prod, 0.0) * a["V"][i, f, p]
                       for i, prod in enumerate(inst.products))
            eq("PLANT", a["VAIR"][f, p], vair, loc)
            pw = plant.air_power_coeff * vair + sum(plant.power_coeff[prod] * a["V"][i, f, p]
                                                     for i, prod in enumerate(inst.products))
            eq("PLANT", a["PW"][f, p], pw, loc)
            th, dp, dm = a["THETA"][f, p], a["DPLUS"][f, p], a["DMINUS"][f, p]
            lo, hi = (1 - e.tolerance) * e.contracted, (1 + e.tolerance) * e.contracted
            eq("ENERGY_DECOMPOSITION", pw, th + dp - dm, loc)
            le("ENERGY_DECOMPOSITION", lo, th, loc)
            le("ENERGY_DECOMPOSITION", th, hi, loc)
            le("ENERGY_DECOMPOSITION", pw - hi, dp, loc)
            le("ENERGY_DECOMPOSITION", lo - pw, dm, loc)

            sc = 0.0
            for t, r in enumerate(refs):
                tank = inst.tank(r)
                d = D[t, p]
                usc_f = tank.delivery_cost[fid][p] / d if d > 0 else 0.0
                sc += usc_f * S[t, f, p]
                for g in range(F):
                    if g != f:
                        gid = fids[g]
                        usc_g = tank.delivery_cost[gid][p] / d if d > 0 else 0.0
                        sc += inst.swap_policy.eta(gid, fid) * usc_g * SW[t, g, f, p]
                upc = firm.unit_production_cost[inst.products[r.product]]
                for b, tier in enumerate(inst.tiers):
                    sc += tier.premium * (usc_f + upc) * OH[t, f, b, p]
            nc = rc = 0.0
            for c, cust in enumerate(inst.customers):
                acq = cust.acquire_fixed.get(fid, 0.0) + sum(
                    inst.tank(r).acquire_variable.get(fid, 0.0) * D[t, p]
                    for t, r in enumerate(refs) if tank_c[t] == c)
                forf = cust.forfeit_fixed.get(fid, 0.0) + sum(
                    inst.tank(r).forfeit_variable.get(fid, 0.0) * D[t, p]
                    for t, r in enumerate(refs) if tank_c[t] == c)
                if p == 0:
                    signed = WS[c, f, :, 0].sum()
                    if cust.incumbent_firm == fid:
                        rc += forf * (1.0 - signed)
                    else:
                        nc += acq * signed
                else:
                    nc += acq * WN[c, f, p]
                    rc += forf * WD[c, f, p]
            rate = e.price[p] * OT
            ec = rate * th + e.penalty * rate * (dp + dm)
            ic = sum(firm.inventory[prod].unit_cost * a["INV"][i, f, p]
                     for i, prod in enumerate(inst.products))
            for key, val in (("SC", sc), ("NC", nc), ("RC", rc), ("EC", ec), ("IC", ic)):
                eq("COST_DEFINITIONS", a[key][f, p], val, (key, fid, p + 1))
            total_cost += sc + nc + rc + ec + ic
        recomputed[fid] = revenue - total_cost
    mismatch = max((abs(recomputed[f] - outcome.profits[f]) / max(1.0, abs(recomputed[f]))
                    for f in fids), default=0.0)
    return VerificationReport(worst, where, recomputed, mismatch, tol)
