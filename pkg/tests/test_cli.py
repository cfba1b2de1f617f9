import json

import pytest

from oligofair.cli import main, parse_dims
from oligofair.game import GameOutcome, verify_outcome
from oligofair.instance import dumps_instance, load_instance, restrict_to_incumbents

from _builders import customer, document, firm, symmetric_duopoly_doc, tank, tiny_synthetic


def _restricted(path):
    return restrict_to_incumbents(load_instance(path))


@pytest.fixture
def duopoly_file(tmp_path):
    path = tmp_path / "duopoly.json"
    path.write_text(json.dumps(symmetric_duopoly_doc()))
    return path


def test_parse_dims_forms():
    d = parse_dims("3x20x12")
    assert (d.firms, d.customers, d.periods) == (3, 20, 12)
    d = parse_dims("firms=2,durations=4/8,free_fraction=0.5")
    assert d.durations == (4, 8) and d.free_fraction == 0.5


def test_generate_then_validate(tmp_path, capsys):
    path = tmp_path / "gen.json"
    assert main(["generate", "--seed", "3", "--dims", "2x3x4", "--out", str(path)]) == 0
    inst = load_instance(path)
    assert len(inst.customers) == 3 and inst.n_periods == 4
    assert main(["validate", str(path)]) == 0
    assert "ok:" in capsys.readouterr().out


def test_validate_failure_exit_code(tmp_path, capsys):
    doc = symmetric_duopoly_doc()
    doc["game"]["negotiation_power"] = {"A": 0.9, "B": 0.9}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 1
    assert "NEGOTIATION_POWER" in capsys.readouterr().out
    assert main(["solve", str(bad), "--mode", "fsw"]) == 1


def test_unparseable_file(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert main(["validate", str(path)]) == 1


def test_infeasible_exit_code(tmp_path):
    f = firm("A", max_flow=1.0)
    doc = document([f], [customer("c1", [tank(demand=50.0, firms=("A",))], ("A", "k1"))],
                   game={"negotiation_power": {"A": 1.0}})
    path = tmp_path / "inf.json"
    path.write_text(json.dumps(doc))
    assert main(["solve", str(path), "--mode", "sq"]) == 2


def test_solve_and_report_each_mode(tmp_path, duopoly_file, capsys):
    for mode in ("sq", "fsw", "flns"):
        out = tmp_path / f"{mode}.json"
        args = ["solve", str(duopoly_file), "--mode", mode, "--out", str(out)]
        if mode == "flns":
            args += ["--grid", "10", "--refine", "0"]
        assert main(args) == 0
        outcome = GameOutcome.from_json(out.read_text())
        ref = _restricted(duopoly_file) if mode == "sq" else load_instance(duopoly_file)
        assert verify_outcome(ref, outcome).ok
    text = tmp_path / "report.txt"
    assert main(["report", str(tmp_path / "flns.json"), "--status-quo",
                 str(tmp_path / "sq.json"), "--out", str(text)]) == 0
    assert "Market share" in text.read_text()
    for fmt in ("csv", "svg"):
        folder = tmp_path / fmt
        assert main(["report", str(tmp_path / "fsw.json"), "--format", fmt,
                     "--out", str(folder)]) == 0
        assert sorted(p.suffix for p in folder.iterdir()) == [f".{fmt}"] * len(
            list(folder.iterdir()))
    assert main(["report", str(tmp_path / "fsw.json"), "--format", "csv"]) == 1


def test_outputs_only_at_declared_paths(tmp_path, duopoly_file, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "o.json"
    assert main(["solve", str(duopoly_file), "--mode", "fsw", "--out", str(out)]) == 0
    assert not list(work.iterdir())


@pytest.mark.parametrize("seed", [0, 1])
def test_node_limit_exit_code(tmp_path, capsys, seed):
    # seed 0 stops without an incumbent, seed 1 with one
    path = tmp_path / "t.json"
    path.write_text(dumps_instance(tiny_synthetic(seed, customers=3, periods=2)))
    out = tmp_path / "o.json"
    assert main(["solve", str(path), "--mode", "fsw", "--node-limit", "1",
                 "--out", str(out)]) == 3
    assert "node-limit" in capsys.readouterr().err


def test_mps_export_and_import(tmp_path, duopoly_file):
    pytest.importorskip("highspy")
    from oligofair.solver.external import solve_mps_file
    mps = tmp_path / "fsw.mps"
    assert main(["solve", str(duopoly_file), "--mode", "fsw", "--mps-out", str(mps),
                 "--export-only"]) == 0
    sol = tmp_path / "fsw.sol"
    sol.write_text(solve_mps_file(mps))
    out = tmp_path / "fsw.json"
    assert main(["solve", str(duopoly_file), "--mode", "fsw", "--import-solution", str(sol),
                 "--out", str(out)]) == 0
    outcome = GameOutcome.from_json(out.read_text())
    assert outcome.total_profit == pytest.approx(2270.0, rel=1e-6)
    assert verify_outcome(load_instance(duopoly_file), outcome).ok


def test_rejected_solution_exit_code(tmp_path, duopoly_file):
    pytest.importorskip("highspy")
    from oligofair.solver.external import solve_mps_file
    mps = tmp_path / "fsw.mps"
    main(["solve", str(duopoly_file), "--mode", "fsw", "--mps-out", str(mps), "--export-only"])
    lines = solve_mps_file(mps).splitlines()
    # push one assignment binary off its integral value
    for n, ln in enumerate(lines):
        name, value = ln.split()
        if name.startswith("W("):
            lines[n] = f"{name} 0.5"
            break
    sol = tmp_path / "bad.sol"
    sol.write_text("\n".join(lines) + "\n")
    assert main(["solve", str(duopoly_file), "--mode", "fsw", "--import-solution",
                 str(sol)]) == 1
