import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from oligofair.model.ir import ModelIR
from oligofair.solver.simplex import SimplexEngine, solve_lp
from oligofair.solver.types import SolverConfig
from oligofair.errors import SolverError

from _oracles import rational_lp_max


def lp(sense, obj, rows, bounds):
    m = ModelIR()
    xs = [m.add_var("x", (j,), "C", lo, hi) for j, (lo, hi) in enumerate(bounds)]
    for coeffs, s, rhs in rows:
        m.add_row("r", dict(zip(xs, coeffs)), s, rhs)
    m.set_objective(sense, dict(zip(xs, obj)))
    return m.freeze()


def test_bound_attained():
    sol = solve_lp(lp("max", [1.0], [], [(0.0, 5.0)]))
    assert sol.status == "optimal" and sol.x[0] == 5.0 and sol.objective == 5.0


def test_two_variable_lp():
    m = lp("max", [1.0, 1.0], [([1, 1], "<=", 3.0)], [(0.0, 2.0), (0.0, 2.0)])
    sol = solve_lp(m)
    assert sol.ok and sol.objective == pytest.approx(3.0, abs=1e-12)


def test_contradictory_rows():
    m = lp("max", [1.0], [([1], ">=", 1.0), ([1], "<=", 0.0)], [(-np.inf, np.inf)])
    assert solve_lp(m).status == "infeasible"


def test_unbounded():
    m = lp("max", [1.0, 0.0], [([1, -1], "<=", 1.0)], [(0.0, np.inf), (0.0, np.inf)])
    assert solve_lp(m).status == "unbounded"


def test_equality_and_free_variables():
    # x = 4 - y and x - y >= -2 give y <= 3, so max x + 2y = 4 + y peaks at 7
    m = lp("max", [1.0, 2.0], [([1, 1], "==", 4.0), ([1, -1], ">=", -2.0)],
           [(-np.inf, np.inf), (-np.inf, 10.0)])
    sol = solve_lp(m)
    assert sol.ok
    assert sol.objective == pytest.approx(7.0, abs=1e-12)
    assert sol.x == pytest.approx([1.0, 3.0], abs=1e-12)
    flipped = lp("min", [1.0, 2.0], [([1, 1], "==", 4.0), ([1, -1], ">=", -2.0)],
                 [(-np.inf, np.inf), (-np.inf, 10.0)])
    assert solve_lp(flipped).status == "unbounded"


def test_duals_satisfy_complementary_slackness():
    m = lp("max", [3.0, 2.0], [([1, 1], "<=", 4.0), ([1, 3], "<=", 6.0)],
           [(0.0, 3.0), (0.0, np.inf)])
    sol = solve_lp(m)
    assert sol.objective == pytest.approx(11.0, abs=1e-12)
    _, A, _, b, _, _ = m.arrays()
    slack = b - A @ sol.x
    assert np.all(np.abs(sol.duals * slack) <= 1e-9)
    # strong duality with the bound on x0 active
    assert sol.duals @ b + sol.reduced_costs[0] * 3.0 == pytest.approx(11.0, abs=1e-9)


def test_warm_start_reuses_basis():
    c = np.array([-1.0, -1.0])
    A = np.array([[1.0, 2.0], [3.0, 1.0]])
    eng = SimplexEngine(c, A, ["<=", "<="], np.array([4.0, 6.0]), np.zeros(2),
                        np.full(2, np.inf))
    first = eng.solve()
    again = eng.solve(basis=first.basis)
    assert again.iterations <= 1
    assert again.objective == first.objective


def test_config_rejects_bad_tolerances():
    with pytest.raises(SolverError):
        SolverConfig(feas_tol=0.0)


small = st.integers(-6, 6)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), n=st.integers(1, 3), m_rows=st.integers(0, 3))
def test_matches_exact_rational_solve(data, n, m_rows):
    c = data.draw(st.lists(small, min_size=n, max_size=n))
    ub = data.draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    rows = [(data.draw(st.lists(small, min_size=n, max_size=n)), data.draw(st.integers(-4, 8)))
            for _ in range(m_rows)]
    exact = rational_lp_max(c, rows, ub)
    model = lp("max", [float(v) for v in c], [(a, "<=", float(b)) for a, b in rows],
               [(0.0, float(u)) for u in ub])
    sol = solve_lp(model)
    if exact is None:
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(float(exact), abs=1e-9)
        assert not model.violations(sol.x, tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 8), m_rows=st.integers(1, 8))
def test_matches_highs_on_random_lps(seed, n, m_rows):
    rng = np.random.default_rng(seed)
    A = rng.integers(-5, 6, size=(m_rows, n)).astype(float)
    b = rng.integers(0, 20, size=m_rows).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    ub = rng.integers(1, 10, size=n).astype(float)
    senses = rng.choice(["<=", ">=", "=="], size=m_rows, p=[0.6, 0.3, 0.1])
    model = lp("min", c, [(A[i], senses[i], b[i]) for i in range(m_rows)],
               [(0.0, u) for u in ub])
    sol = solve_lp(model)
    A_ub = [A[i] if s == "<=" else -A[i] for i, s in enumerate(senses) if s != "=="]
    b_ub = [b[i] if s == "<=" else -b[i] for i, s in enumerate(senses) if s != "=="]
    eq = [i for i, s in enumerate(senses) if s == "=="]
    ref = linprog(c, A_ub=A_ub or None, b_ub=b_ub or None,
                  A_eq=A[eq] if eq else None, b_eq=b[eq] if eq else None,
                  bounds=list(zip(np.zeros(n), ub)), method="highs")
    if ref.status == 2:
        assert sol.status == "infeasible"
    else:
        assert ref.status == 0
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7 * max(1.0, abs(ref.fun)))


def test_deterministic_reruns():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(6, 9))
    model = lp("max", rng.normal(size=9), [(A[i], "<=", 1.0) for i in range(6)],
               [(0.0, 2.0)] * 9)
    a, b = solve_lp(model), solve_lp(model)
    assert a.objective == b.objective and np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations
