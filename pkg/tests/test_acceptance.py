"""Top-level acceptance checks; each test records one PASS/FAIL line that the
terminal summary prints (see conftest.py)."""

import math
import time

import numpy as np
import pytest

from oligofair.cli import main
from oligofair.game import (GameOutcome, compute_status_quo, initial_nash_grids, nash_product,
                            solve_nash, solve_social_welfare, true_nash_objective,
                            verify_outcome)
from oligofair.instance import load_instance, restrict_to_incumbents
from oligofair.model.builder import build_model
from oligofair.model.ir import ModelIR
from oligofair.oracle import enumerate_optimal
from oligofair.report import contract_gantt, market_report
from oligofair.solver.bnb import solve_milp
from oligofair.solver.mps import export_mps, export_solution, import_mps, import_solution
from oligofair.solver.types import SolverConfig

import conftest
from _builders import (ORACLE_SHAPES, adjacency_model, empty_model, fixed_flow_lp, instance,
                       knapsack_model, one_firm_doc, oracle_instance, symmetric_duopoly_doc,
                       tiny_synthetic)
from _oracles import knapsack_enumeration, log_secant_error, segment_of

TIGHT = SolverConfig(mip_gap=1e-9)
VERIFY_TOL = 1e-7


def record(name, ok, detail):
    conftest.RESULTS[name] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# -- shared solves -----------------------------------------------------------------

@pytest.fixture(scope="module")
def oracle_runs():
    runs, t0 = [], time.perf_counter()
    for n in range(len(ORACLE_SHAPES)):
        inst = oracle_instance(n)
        sq = compute_status_quo(inst, TIGHT)
        fsw = solve_social_welfare(inst, TIGHT, status_quo=sq)
        nb = solve_nash(inst, sq, fsw, TIGHT, refine_rounds=0)
        grids = {f: np.asarray(g) for f, g in nb.diagnostics["grids"].items()}
        runs.append({
            "inst": inst, "sq": sq, "fsw": fsw, "nb": nb,
            "oracle_fsw": enumerate_optimal(inst, cfg=TIGHT),
            "oracle_nb": enumerate_optimal(inst, "nash", sq=sq, grids=grids, cfg=TIGHT),
        })
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def duopoly():
    inst = instance(symmetric_duopoly_doc())
    sq = compute_status_quo(inst, TIGHT)
    fsw = solve_social_welfare(inst, TIGHT, status_quo=sq)
    nb = {N: solve_nash(inst, sq, fsw, TIGHT, grid_size=N, refine_rounds=0) for N in (40, 80)}
    return inst, sq, fsw, nb


DIMS = "firms=3,customers=20,periods=12,contracts=3,durations=4/8/12"


@pytest.fixture(scope="module")
def structural(tmp_path_factory):
    pytest.importorskip("highspy")
    from oligofair.solver.external import solve_mps_file

    d = tmp_path_factory.mktemp("structural")
    t0 = time.perf_counter()
    inst_path = d / "inst.json"
    assert main(["generate", "--seed", "7", "--dims", DIMS, "--out", str(inst_path)]) == 0

    def run(mode, *extra):
        mps, sol, out = d / f"{mode}.mps", d / f"{mode}.sol", d / f"{mode}.json"
        assert main(["solve", str(inst_path), "--mode", mode, "--mps-out", str(mps),
                     "--mps-sos", "binary", "--export-only", *extra]) == 0
        sol.write_text(solve_mps_file(mps))
        assert main(["solve", str(inst_path), "--mode", mode, "--import-solution", str(sol),
                     "--out", str(out), *extra]) == 0
        return out

    sq = run("sq")
    fsw = run("fsw", "--status-quo", str(sq))
    flns = run("flns", "--status-quo", str(sq), "--welfare", str(fsw))
    for fmt in ("text", "csv", "svg"):
        target = d / ("report.txt" if fmt == "text" else fmt)
        assert main(["report", str(flns), "--status-quo", str(sq), "--format", fmt,
                     "--out", str(target)]) == 0
    elapsed = time.perf_counter() - t0
    inst = load_instance(inst_path)
    outs = {m: GameOutcome.from_json(p.read_text()) for m, p in
            (("sq", sq), ("fsw", fsw), ("flns", flns))}
    return inst, outs, d, elapsed


# -- criteria ----------------------------------------------------------------------

def test_oracle_equivalence(oracle_runs):
    runs, elapsed = oracle_runs
    worst = 0.0
    for r in runs:
        worst = max(worst, rel(r["fsw"].objective, r["oracle_fsw"].objective),
                    rel(r["nb"].diagnostics["psi_tilde"], r["oracle_nb"].objective))
    record("oracle equivalence", len(runs) >= 20 and worst <= 1e-6 and elapsed < 60.0,
           f"{len(runs)} instances, worst relative gap {worst:.2e}, {elapsed:.1f} s")


def test_constraint_family_verification(oracle_runs, duopoly, structural):
    checked = []
    for r in oracle_runs[0]:
        checked += [(r["sq"].instance, r["sq"].outcome), (r["inst"], r["fsw"]),
                    (r["inst"], r["nb"]), (r["inst"], r["oracle_fsw"].outcome),
                    (r["inst"], r["oracle_nb"].outcome)]
    inst, sq, fsw, nb = duopoly
    checked += [(sq.instance, sq.outcome), (inst, fsw)] + [(inst, o) for o in nb.values()]
    big, outs, _, _ = structural
    checked += [(restrict_to_incumbents(big), outs["sq"]), (big, outs["fsw"]),
                (big, outs["flns"])]
    worst, where = 0.0, None
    for inst, out in checked:
        rep = verify_outcome(inst, out, VERIFY_TOL)
        if rep.worst > worst:
            family = max(rep.max_violation, key=rep.max_violation.get)
            worst, where = rep.worst, (out.mode, family, rep.worst_location.get(family))
        if not rep.ok:
            worst = max(worst, math.inf if rep.profit_mismatch > 1e-6 else rep.worst)
    record("constraint-family verification", worst <= VERIFY_TOL,
           f"{len(checked)} outcomes, max violation {worst:.2e} at {where}")


def test_rationality_and_sandwich(oracle_runs, structural):
    cases = [(r["sq"].profits, r["nb"].profits, r["fsw"].total_profit) for r in oracle_runs[0]]
    _, outs, _, _ = structural
    cases.append((outs["sq"].profits, outs["flns"].profits, outs["fsw"].total_profit))
    bad = []
    for n, (sq, nb, fsw_total) in enumerate(cases):
        sq_total, nb_total = sum(sq.values()), sum(nb.values())
        rational = all(nb[f] >= sq[f] - 1e-9 * max(1.0, abs(sq[f])) for f in sq)
        tol = 1e-6 * max(1.0, abs(fsw_total))
        if not (rational and sq_total <= nb_total + tol and nb_total <= fsw_total + tol):
            bad.append(n)
    record("rationality and sandwich", not bad,
           f"{len(cases)} instances, violations at {bad or 'none'}")


def test_nash_symmetry(duopoly):
    _, sq, _, nb = duopoly
    step40 = float(np.diff(nb[40].diagnostics["grids"]["A"])[0])
    diffs = {}
    for N, out in nb.items():
        s = {f: out.profits[f] - sq.profits[f] for f in ("A", "B")}
        diffs[N] = abs(s["A"] - s["B"])
    ok = diffs[40] <= step40 and diffs[80] <= step40 / 2
    record("nash symmetry", ok,
           f"|sA - sB| = {diffs[40]:.3g} (N=40, step {step40:.3g}), "
           f"{diffs[80]:.3g} (N=80, half step {step40 / 2:.3g})")


CONVERGENCE_SET = ["duopoly"] + list(range(10))


def test_sos2_convergence():
    failures, bound_breaches, table = [], [], []
    for key in CONVERGENCE_SET:
        inst = instance(symmetric_duopoly_doc()) if key == "duopoly" else tiny_synthetic(key)
        sq = compute_status_quo(inst, TIGHT)
        fsw = solve_social_welfare(inst, TIGHT, status_quo=sq)
        alpha = inst.game.negotiation_power
        gaps = []
        for N in (10, 20, 40, 80):
            out = solve_nash(inst, sq, fsw, TIGHT, grid_size=N, refine_rounds=0)
            _, psi = true_nash_objective(out.profits, sq.profits, alpha)
            gap = abs(psi - out.diagnostics["psi_tilde"])
            bound = 0.0
            for f, g in out.diagnostics["grids"].items():
                g = np.asarray(g)
                n = segment_of(g, out.profits[f])
                bound += log_secant_error(g[n] - sq.profits[f], g[n + 1] - sq.profits[f],
                                          alpha[f])
            if gap > bound * (1 + 1e-9) + 1e-12:
                bound_breaches.append((key, N))
            gaps.append(gap)
        table.append(f"{key}:" + "/".join(f"{g:.1e}" for g in gaps))
        if not all(b < a for a, b in zip(gaps, gaps[1:])):
            failures.append(key)
    record("sos2 convergence", not failures and not bound_breaches,
           f"non-decreasing at {failures or 'none'}, bound breaches {bound_breaches or 'none'}"
           f" [{' '.join(table)}]")


def test_nash_units():
    alpha = {"A": 0.5, "B": 0.5}
    sq = {"A": 0.0, "B": 0.0}
    zero = nash_product({"A": 0.0, "B": 9.0}, sq, alpha) == 0.0
    phi, psi = true_nash_objective({"A": 4.0, "B": 9.0}, sq, alpha)
    ok = zero and phi == 6.0 and rel(math.exp(psi), phi) <= 1e-12
    record("nash evaluation units", ok, f"Phi(4,9) = {phi!r}, exp(Psi) = {math.exp(psi)!r}")


def test_solver_correctness(duopoly):
    notes = []
    kp = solve_milp(knapsack_model())
    adj = solve_milp(adjacency_model())
    ok = (kp.status == adj.status == "optimal"
          and kp.objective == knapsack_enumeration((6, 5, 4), (3, 2, 2), 4) == 9
          and abs(adj.objective - 0.5) <= 1e-12)
    notes.append(f"knapsack {kp.objective}, adjacency {adj.objective}")
    inst, sq, fsw, _ = duopoly
    grids, _, _ = initial_nash_grids(inst, sq, fsw, 12)
    nash_model, _ = build_model(inst, "nash", status_quo=sq.profits, grids=grids)
    models = [knapsack_model(), adjacency_model(), nash_model]
    rng = np.random.default_rng(0)
    for _ in range(3):
        v, w = rng.integers(5, 40, 14), rng.integers(3, 20, 14)
        m = ModelIR(name="kp")
        x = [m.add_var("x", (j,), "B") for j in range(14)]
        m.add_row("cap", dict(zip(x, map(float, w))), "<=", float(w.sum() // 3))
        m.set_objective("max", dict(zip(x, map(float, v))))
        models.append(m.freeze())
        ok &= solve_milp(models[-1]).objective == knapsack_enumeration(v, w, w.sum() // 3)
    logs = 0
    for m in models:
        a, b, c = solve_milp(m), solve_milp(m), solve_milp(m, SolverConfig(workers=4))
        same = all(o.objective == a.objective and np.array_equal(o.x, a.x)
                   and o.node_log == a.node_log for o in (b, c))
        ok &= same
        sign = 1.0 if m.sense == "max" else -1.0
        for rec in a.node_log:
            logs += 1
            if math.isnan(rec.incumbent) or math.isnan(rec.global_bound):
                continue
            ok &= sign * (rec.global_bound - rec.incumbent) >= -1e-9 * max(1, abs(rec.incumbent))
    notes.append(f"{logs} logged nodes, reruns identical")
    record("solver correctness", ok, "; ".join(notes))


def test_mps_round_trip(duopoly, tmp_path):
    pytest.importorskip("highspy")
    from oligofair.solver.external import solve_mps_file

    inst, sq, fsw, _ = duopoly
    grids, _, _ = initial_nash_grids(inst, sq, fsw, 8)
    models = [knapsack_model(), adjacency_model(), empty_model(),
              build_model(inst, "social-welfare")[0],
              build_model(inst, "nash", status_quo=sq.profits, grids=grids)[0]]
    worst = 0.0
    for m in models:
        a, b = solve_milp(m), solve_milp(import_mps(export_mps(m)))
        if a.status != b.status:
            worst = math.inf
        elif a.has_solution:
            worst = max(worst, abs(a.objective - b.objective))
    path = tmp_path / "knapsack.mps"
    path.write_text(export_mps(knapsack_model()))
    ext = import_solution(solve_mps_file(path), knapsack_model())
    own = import_solution(export_solution(knapsack_model(), solve_milp(knapsack_model()).x),
                          knapsack_model())
    ok = worst <= 1e-9 and ext.status == own.status == "accepted" and ext.objective == 9.0
    record("mps round-trip", ok,
           f"{len(models)} models, worst optimum drift {worst:.1e}; external knapsack "
           f"{ext.status} with objective {ext.objective}")


def test_structural_reproduction(structural):
    inst, outs, folder, elapsed = structural
    flns = outs["flns"]
    rep = market_report(flns, outs["sq"].profits)
    problems = []
    shares = [s for s in rep.shares.shares.values()]
    if None in shares or abs(sum(shares) - 100.0) > 0.1:
        problems.append("shares")
    for out in outs.values():
        costs = market_report(out).costs
        for f in costs.firms:
            pct = [v for v in costs.percent[f].values() if v is not None]
            if abs(sum(pct) - 100.0) > 0.1:
                problems.append(f"costs {out.mode} {f}")
        gantt = contract_gantt(out)
        for cid in gantt.customers:
            spans = sorted((r.start, r.end) for r in gantt.rows if r.customer == cid)
            cover = [p for s, e in spans for p in range(s, e + 1)]
            if cover != list(range(1, out.n_periods + 1)):
                problems.append(f"gantt {out.mode} {cid}")
        for fid in out.firm_ids:
            for fr in market_report(out).demand[fid].fractions:
                if fr is not None and abs(sum(fr) - 1.0) > 1e-9:
                    problems.append(f"demand {out.mode} {fid}")
    text = (folder / "report.txt").read_text()
    for heading in ("Market share", "Cost breakdown", "Contract timeline", "Demand sources",
                    "Electricity"):
        if heading not in text:
            problems.append(heading)
    n_svg = len(list((folder / "svg").iterdir()))
    n_csv = len(list((folder / "csv").iterdir()))
    dims = (len(inst.firms), len(inst.customers), inst.n_periods, len(inst.contracts))
    record("structural reproduction", not problems and elapsed < 300.0 and dims == (3, 20, 12, 3),
           f"dims {dims}, {n_csv} csv + {n_svg} svg files, {elapsed:.1f} s, "
           f"problems {problems or 'none'}")


def test_energy_model():
    inst = instance(one_firm_doc(power=1.0, contracted=10.0, tolerance=0.1, price=3.0,
                                 hours=2.0))
    checks = {}
    _, val = fixed_flow_lp(inst, 10.0)  # PW = 10, band [9, 11]
    checks["inside band"] = val("DPLUS") == 0.0 and val("DMINUS") == 0.0
    _, val = fixed_flow_lp(inst, 0.0)
    checks["idle plant"] = (abs(val("THETA") - 9.0) <= 1e-12 and abs(val("DMINUS") - 9.0) <= 1e-12
                            and abs(val("DPLUS")) <= 1e-12)
    model, b = build_model(inst)
    row = model.rows_with_tag("electricity_cost")[0]
    rate = 3.0 * 2.0
    checks["1.2 multiplier"] = (row.coeffs[b.fp["THETA"][0, 0]] == -rate
                                and row.coeffs[b.fp["DPLUS"][0, 0]] == -1.2 * rate
                                and row.coeffs[b.fp["DMINUS"][0, 0]] == -1.2 * rate)
    record("energy model", all(checks.values()),
           ", ".join(f"{k} {'ok' if v else 'wrong'}" for k, v in checks.items()))
