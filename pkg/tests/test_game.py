import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oligofair.errors import GameError
from oligofair.game import (GameOutcome, compute_status_quo, initial_nash_grids, nash_product,
                            solve_nash, solve_social_welfare, true_nash_objective,
                            verify_outcome)
from oligofair.instance import parse_instance, serialize_instance
from oligofair.model.builder import build_model
from oligofair.solver.bnb import solve_milp

from _builders import customer, document, firm, instance, symmetric_duopoly_doc, tank, \
    tiny_synthetic


def hand_status_quo_doc():
    # revenue 10 * 10 = 100, delivery 30, energy 2 * 1 * 10 = 20
    f = firm("A", max_flow=10.0, power=1.0)
    c = customer("c1", [tank(demand=10.0, price=10.0, delivery={"A": 30.0}, firms=("A",))],
                 ("A", "k1"))
    return document([f], [c], energy={"A": {"contracted": 10.0, "tolerance": 0.0,
                                            "price": 2.0}},
                    game={"negotiation_power": {"A": 1.0}})


def test_hand_status_quo_profit():
    sq = compute_status_quo(instance(hand_status_quo_doc()))
    assert sq.profits["A"] == pytest.approx(50.0, abs=1e-9)
    costs = {k: sq.outcome.arrays[k].sum() for k in ("SC", "EC", "IC", "NC", "RC")}
    assert costs == pytest.approx({"SC": 30.0, "EC": 20.0, "IC": 0.0, "NC": 0.0, "RC": 0.0},
                                  abs=1e-9)


def test_status_quo_rescored_equals_objective():
    inst = tiny_synthetic(3)
    sq = compute_status_quo(inst)
    rep = verify_outcome(sq.instance, sq.outcome)
    assert rep.ok
    for f, p in sq.profits.items():
        assert rep.profit_recomputed[f] == pytest.approx(p, rel=1e-9, abs=1e-9)
    assert sum(sq.profits.values()) == pytest.approx(sq.outcome.objective, rel=1e-12)


def test_status_quo_removes_free_customers():
    inst = instance(symmetric_duopoly_doc())
    sq = compute_status_quo(inst)
    assert sq.outcome.customer_ids == ["c1", "c2"]
    W = sq.outcome.arrays["W"]  # [c, f, k, p]
    assert np.all(W[0, 0].sum(axis=0) == 1) and np.all(W[1, 1].sum(axis=0) == 1)


def losing_firm_doc():
    doc = symmetric_duopoly_doc()
    # A delivers everywhere more cheaply, so the centralized plan hands B's
    # incumbent to A as well
    doc["customers"][1]["tanks"][0]["delivery_cost"] = {"A": 10.0, "B": 100.0}
    for n in (0, 2, 3):
        doc["customers"][n]["tanks"][0]["delivery_cost"] = {"A": 10.0, "B": 350.0}
    doc["swap_policy"]["capacity_fraction"] = 0.0
    doc["firms"][0]["plant"]["max_flow"]["LOX"] = 3.0
    return doc


def test_welfare_can_hurt_a_firm():
    inst = instance(losing_firm_doc())
    sq = compute_status_quo(inst)
    fsw = solve_social_welfare(inst, status_quo=sq)
    assert fsw.total_profit >= sum(sq.profits.values())
    assert fsw.profits["B"] < sq.profits["B"]
    nb = solve_nash(inst, sq, fsw, grid_size=20, refine_rounds=1)
    assert all(nb.profits[f] >= sq.profits[f] - 1e-9 for f in sq.profits)


def test_symmetric_duopoly_equal_split():
    inst = instance(symmetric_duopoly_doc())
    sq = compute_status_quo(inst)
    fsw = solve_social_welfare(inst)
    nb = solve_nash(inst, sq, fsw, grid_size=40, refine_rounds=0)
    step = np.diff(nb.diagnostics["grids"]["A"])[0]
    s = {f: nb.profits[f] - sq.profits[f] for f in ("A", "B")}
    assert abs(s["A"] - s["B"]) <= step


def test_refinement_never_worsens():
    inst = tiny_synthetic(11, customers=3, periods=2)
    nb = solve_nash(inst, grid_size=6, refine_rounds=3)
    best = [r["best_psi"] for r in nb.diagnostics["rounds"]]
    assert best == sorted(best)
    assert nb.diagnostics["psi"] == best[-1]
    rounds = nb.diagnostics["rounds"]
    spans = [r["grid"]["A"][1] - r["grid"]["A"][0] for r in rounds]
    for a, b in zip(spans, spans[1:]):
        assert b <= a / 2 + 1e-9 * abs(a)


def test_empty_bargaining_range_names_firm():
    inst = instance(symmetric_duopoly_doc())
    sq = compute_status_quo(inst)
    with pytest.raises(GameError) as exc:
        solve_nash(inst, sq, upper={"A": sq.profits["A"], "B": 1e9})
    assert exc.value.code == "EMPTY_BARGAINING_RANGE"
    assert "A" in str(exc.value)


def test_nash_product_units():
    alpha = {"A": 0.5, "B": 0.5}
    sq = {"A": 10.0, "B": 20.0}
    assert nash_product({"A": 10.0, "B": 25.0}, sq, alpha) == 0.0
    phi, psi = true_nash_objective({"A": 14.0, "B": 29.0}, sq, alpha)
    assert phi == 6.0
    assert math.exp(psi) == pytest.approx(phi, rel=1e-12)
    with pytest.raises(GameError) as exc:
        true_nash_objective({"A": 10.0, "B": 25.0}, sq, alpha)
    assert exc.value.code == "LOG_DOMAIN"
    assert true_nash_objective({"A": 10.0, "B": 25.0}, sq, alpha, strict=False)[1] == -math.inf


@given(st.dictionaries(st.sampled_from("ABC"), st.floats(1e-3, 1e4), min_size=1),
       st.data())
def test_exp_psi_equals_phi(surplus, data):
    firms = sorted(surplus)
    raw = [data.draw(st.floats(0.05, 1.0)) for _ in firms]
    alpha = {f: w / sum(raw) for f, w in zip(firms, raw)}
    sq = {f: data.draw(st.floats(-1e4, 1e4)) for f in firms}
    profits = {f: sq[f] + surplus[f] for f in firms}
    phi, psi = true_nash_objective(profits, sq, alpha)
    assert math.exp(psi) == pytest.approx(phi, rel=1e-12)


# -- verification -----------------------------------------------------------------------

def test_corrupted_assignment_flagged():
    inst = tiny_synthetic(2)
    out = solve_social_welfare(inst)
    assert verify_outcome(inst, out).ok
    bad = GameOutcome.from_json(out.to_json())
    W = bad.arrays["W"]
    c, p = 0, 0
    f = int(np.argmax(W[c, :, :, p].sum(axis=1)))
    W[c, 1 - f, 0, p] = 1.0
    rep = verify_outcome(inst, bad)
    assert not rep.ok
    assert rep.max_violation["EXACT_ASSIGNMENT"] >= 0.5


def test_corrupted_profit_flagged():
    inst = tiny_synthetic(2)
    out = solve_social_welfare(inst)
    bad = GameOutcome.from_json(out.to_json())
    bad.profits["A"] += 1.0
    assert verify_outcome(inst, bad).profit_mismatch > 1e-6


def test_swap_balance_per_interval():
    inst = tiny_synthetic(8, customers=3, periods=4)
    doc = serialize_instance(inst)
    doc["swap_policy"]["intervals"] = [[1, 2], [3, 4]]
    inst = parse_instance(doc)
    out = solve_social_welfare(inst)
    SW = out.arrays["SW"]
    for iv in ([0, 1], [2, 3]):
        ab = SW[:, 0, 1, iv].sum()
        ba = SW[:, 1, 0, iv].sum()
        assert abs(ab - ba) <= 1e-7 * max(1.0, ab)
    assert verify_outcome(inst, out).max_violation["SWAP_BALANCE"] <= 1e-7


def test_outcome_json_round_trip():
    out = solve_social_welfare(tiny_synthetic(1))
    again = GameOutcome.from_json(out.to_json())
    assert again.profits == out.profits
    for k, v in out.arrays.items():
        assert np.array_equal(np.asarray(v, float), again.arrays[k])


# -- invariances --------------------------------------------------------------------------

MONEY_SCALE = 2.0


def scale_money(doc, c):
    doc = copy.deepcopy(doc)
    for f in doc["firms"]:
        f["unit_production_cost"] = {k: c * v for k, v in f["unit_production_cost"].items()}
        for spec in f["inventory"].values():
            spec["unit_cost"] *= c
    for cust in doc["customers"]:
        for key in ("acquire_fixed", "forfeit_fixed"):
            cust[key] = {k: c * v for k, v in cust[key].items()}
        for t in cust["tanks"]:
            t["delivery_cost"] = {k: [c * x for x in v] for k, v in t["delivery_cost"].items()}
            t["base_price"] = {k: {kk: c * x for kk, x in v.items()}
                               for k, v in t["base_price"].items()}
            for key in ("acquire_variable", "forfeit_variable"):
                t[key] = {k: c * v for k, v in t[key].items()}
    for e in doc["energy"].values():
        e["price"] = [c * x for x in e["price"]]
    return doc


@settings(max_examples=6, deadline=None)
@given(seed=st.integers(0, 500))
def test_surplus_scaling_keeps_argmax(seed):
    inst = tiny_synthetic(seed, customers=2, periods=2)
    try:
        sq = compute_status_quo(inst)
        fsw = solve_social_welfare(inst)
        grids, _, _ = initial_nash_grids(inst, sq, fsw, 8)
    except GameError:
        return
    inst2 = parse_instance(scale_money(serialize_instance(inst), MONEY_SCALE))
    sq2 = {f: MONEY_SCALE * v for f, v in sq.profits.items()}
    grids2 = {f: MONEY_SCALE * g for f, g in grids.items()}
    m1, b1 = build_model(inst, "nash", status_quo=sq.profits, grids=grids)
    m2, b2 = build_model(inst2, "nash", status_quo=sq2, grids=grids2)
    s1, s2 = solve_milp(m1), solve_milp(m2)
    assert s1.has_solution == s2.has_solution
    if not s1.has_solution:
        return
    alpha_sum = sum(inst.game.negotiation_power.values())
    assert s2.objective == pytest.approx(s1.objective + alpha_sum * math.log(MONEY_SCALE),
                                         abs=1e-7)
    lam1 = np.concatenate([s1.x[v] for v in b1.LAM])
    lam2 = np.concatenate([s2.x[v] for v in b2.LAM])
    assert lam2 == pytest.approx(lam1, abs=1e-6)


def test_shifted_status_quo_same_coefficients():
    inst = instance(symmetric_duopoly_doc())
    g = np.linspace(5.0, 40.0, 7)
    shift = 1000.0
    m1, b1 = build_model(inst, "nash", status_quo={"A": 0.0, "B": 0.0}, grids={"A": g, "B": g})
    m2, b2 = build_model(inst, "nash", status_quo={"A": shift, "B": shift},
                         grids={"A": g + shift, "B": g + shift})
    c1 = [m1.objective.get(v, 0.0) for lam in b1.LAM for v in lam]
    c2 = [m2.objective.get(v, 0.0) for lam in b2.LAM for v in lam]
    assert c2 == pytest.approx(c1, abs=1e-12)
