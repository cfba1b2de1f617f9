import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oligofair.errors import SolverError
from oligofair.model.ir import ModelIR
from oligofair.solver.bnb import branch_sos2, solve_milp, sos2_violated
from oligofair.solver.external import solve_external
from oligofair.solver.types import SolverConfig

from _builders import adjacency_model, knapsack_model
from _oracles import knapsack_enumeration, sos2_supports


def knapsack(values, weights, capacity):
    m = ModelIR(name="kp")
    x = [m.add_var("x", (j,), "B") for j in range(len(values))]
    m.add_row("cap", dict(zip(x, weights)), "<=", capacity)
    m.set_objective("max", dict(zip(x, values)))
    return m.freeze()


def assert_weak_duality(sol, sense="max"):
    for rec in sol.node_log:
        if math.isnan(rec.incumbent) or math.isnan(rec.global_bound):
            continue
        tol = 1e-9 * max(1.0, abs(rec.incumbent))
        if sense == "max":
            assert rec.global_bound >= rec.incumbent - tol, rec
        else:
            assert rec.global_bound <= rec.incumbent + tol, rec
    if sol.has_solution:
        tol = 1e-9 * max(1.0, abs(sol.objective))
        assert (sol.best_bound >= sol.objective - tol if sense == "max"
                else sol.best_bound <= sol.objective + tol)


def test_knapsack_proven_optimal():
    assert knapsack_enumeration((6, 5, 4), (3, 2, 2), 4) == 9
    sol = solve_milp(knapsack_model())
    assert sol.status == "optimal"
    assert sol.objective == 9.0
    assert sol.gap <= SolverConfig().mip_gap
    assert sol.x.tolist() == [0.0, 1.0, 1.0]
    assert_weak_duality(sol)


def test_integral_relaxation_solved_at_root():
    m = ModelIR()
    x = m.add_var("x", (), "B")
    y = m.add_var("y", (), "B")
    m.add_row("r", {x: 1.0, y: 1.0}, "<=", 1.0)
    m.set_objective("max", {x: 2.0, y: 1.0})
    sol = solve_milp(m.freeze())
    assert sol.status == "optimal" and sol.nodes == 1 and sol.objective == 2.0


def test_adjacent_pair_selected():
    sol = solve_milp(adjacency_model())
    assert sol.status == "optimal"
    lam = sol.x[:3]
    nz = [n for n, v in enumerate(lam) if abs(v) > 1e-9]
    assert nz == [0, 1]
    assert lam[:2] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert sol.objective == pytest.approx(0.5, abs=1e-12)
    assert sol.nodes > 1
    assert_weak_duality(sol)


def test_adjacency_enumeration_agrees():
    # the three adjacency patterns of a 3-point set: only (1,2) and (2,3) can
    # reach pi = 1.5, and the convex objective prefers the lower pair
    best = max(0.5 * a + 0.5 * b for a, b in ((1.0, 0.0), (0.0, 1.0)))
    assert best == 0.5
    assert solve_milp(adjacency_model()).objective == best


def test_branch_non_adjacent():
    r, a, b = branch_sos2([0.5, 0.0, 0.5], [1.0, 2.0, 3.0])
    assert (a, b) == ([0], [2])


def test_branch_not_violated():
    with pytest.raises(SolverError) as exc:
        branch_sos2([0.3, 0.7, 0.0], [1.0, 2.0, 3.0])
    assert exc.value.code == "NOT_VIOLATED"


def test_branch_three_nonzero():
    values = [0.2, 0.3, 0.5]
    r, a, b = branch_sos2(values, [1.0, 2.0, 3.0])
    assert a and b and len(a) < 3 and len(b) < 3
    for zeros in (a, b):
        assert any(values[k] > 0 for k in zeros)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 1.0]), min_size=3, max_size=5),
       st.booleans())
def test_sos2_branch_sound(values, uneven):
    n = len(values)
    weights = np.cumsum(np.arange(1, n + 1)) if uneven else np.arange(1.0, n + 1)
    if not sos2_violated(values):
        with pytest.raises(SolverError):
            branch_sos2(values, list(weights))
        return
    r, zero_a, zero_b = branch_sos2(values, list(weights))
    for support in sos2_supports(n):
        keeps = [not set(support) & set(z) for z in (zero_a, zero_b)]
        assert any(keeps), (support, zero_a, zero_b)
    nz = {k for k, v in enumerate(values) if v > 0}
    assert nz & set(zero_a) and nz & set(zero_b)


def test_deterministic_and_parallel_identical():
    models = [knapsack_model(), adjacency_model(),
              knapsack([7, 3, 9, 4, 6, 8], [4, 2, 5, 3, 3, 4], 11)]
    for m in models:
        runs = [solve_milp(m), solve_milp(m), solve_milp(m, SolverConfig(workers=4))]
        for other in runs[1:]:
            assert other.objective == runs[0].objective
            assert np.array_equal(other.x, runs[0].x)
            assert other.node_log == runs[0].node_log
            assert other.nodes == runs[0].nodes


def test_infeasible_milp():
    m = ModelIR()
    x = m.add_var("x", (), "B")
    m.add_row("r", {x: 2.0}, "==", 1.0)
    m.set_objective("max", {x: 1.0})
    assert solve_milp(m.freeze()).status == "infeasible"


def test_node_limit_status():
    m = knapsack([7, 3, 9, 4, 6, 8, 5, 2], [4, 2, 5, 3, 3, 4, 3, 1], 11)
    sol = solve_milp(m, SolverConfig(node_limit=1))
    assert sol.status in ("node-limit", "optimal")
    if sol.status == "node-limit":
        assert math.isfinite(sol.best_bound)
        assert sol.best_bound >= knapsack_enumeration([7, 3, 9, 4, 6, 8, 5, 2],
                                                      [4, 2, 5, 3, 3, 4, 3, 1], 11)
        if sol.has_solution:
            assert sol.best_bound >= sol.objective


def test_binary_bounds_checked():
    m = ModelIR()
    m.add_var("x", (), "B")
    m.set_bounds(0, ub=2.0)
    m.set_objective("max", {0: 1.0})
    with pytest.raises(SolverError):
        solve_milp(m.freeze())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 20), st.integers(1, 10)), min_size=1, max_size=7),
       st.integers(0, 30))
def test_random_knapsacks(items, capacity):
    values, weights = zip(*items)
    sol = solve_milp(knapsack(values, weights, capacity))
    assert sol.status == "optimal"
    assert sol.objective == knapsack_enumeration(values, weights, capacity)
    assert_weak_duality(sol)


def pwl_model(grid, heights, target_lo, extra_cost):
    """Max of a piecewise-linear function over one SOS2 set with a floor on x."""
    m = ModelIR(name="pwl")
    lam = [m.add_var("LAM", (n,)) for n in range(len(grid))]
    x = m.add_var("X", ())
    yb = m.add_var("Y", (), "B")
    m.add_row("sos2_convexity", {v: 1.0 for v in lam}, "==", 1.0)
    row = {x: 1.0}
    row.update({v: -g for v, g in zip(lam, grid)})
    m.add_row("profit_approximation", row, "==", 0.0)
    m.add_row("floor", {x: 1.0, yb: -target_lo}, ">=", 0.0)
    m.add_sos2(lam, grid)
    obj = {v: h for v, h in zip(lam, heights)}
    obj[yb] = extra_cost
    m.set_objective("max", obj)
    return m.freeze()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-10, 10), min_size=3, max_size=6), st.integers(0, 5),
       st.integers(-3, 3))
def test_sos2_milps_agree_with_highs(heights, floor, bonus):
    grid = [float(g) for g in range(len(heights))]
    m = pwl_model(grid, [float(h) for h in heights], float(floor), float(bonus))
    ours = solve_milp(m)
    ref = solve_external(m)
    assert ours.status == ref.status == "optimal"
    assert ours.objective == pytest.approx(ref.objective, abs=1e-7)
    assert not m.violations(ours.x)
    assert_weak_duality(ours)
