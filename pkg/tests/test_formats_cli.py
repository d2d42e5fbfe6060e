import io
import json

import pytest

from pmlo import automata as A
from pmlo import formats, logic as L
from pmlo.cli import EXIT_CAP, EXIT_FAILS, EXIT_HOLDS, EXIT_USAGE, run_cli
from pmlo.errors import PmloError
from pmlo.pta import CAnd, CAtom, COr, CTrue


def cli(*argv):
    out = io.StringIO()
    code = run_cli([str(a) for a in argv], out)
    return code, out.getvalue()


def test_check_coin_positive(fixtures_dir):
    code, out = cli("check", "--model", fixtures_dir / "coin.smp",
                    "--formula", fixtures_dir / "eventually_acc_positive.pmlo")
    assert code == EXIT_HOLDS
    assert "verdict: holds" in out and "witness:" in out and "time_s:" in out


def test_check_coin_sure_fails(fixtures_dir):
    code, out = cli("check", "--model", fixtures_dir / "coin.smp",
                    "--formula", fixtures_dir / "eventually_acc_sure.pmlo")
    assert code == EXIT_FAILS and "counterexample" in out


def test_check_quantitative_prints_probability(fixtures_dir):
    code, out = cli("check", "--model", fixtures_dir / "gambler.smp",
                    "--formula", fixtures_dir / "eventually_acc_half.pmlo")
    assert code == EXIT_HOLDS and "= 2/3" in out


def test_check_urgent_pta(fixtures_dir):
    code, out = cli("check", "--pta", fixtures_dir / "coin_urgent.pta", "--semantics", "urgent",
                    "--formula", fixtures_dir / "urgent_half.pmlo")
    assert code == EXIT_HOLDS and "= 1/2" in out and "region_states" in out
    code, _ = cli("check", "--pta", fixtures_dir / "coin_urgent.pta", "--semantics", "urgent",
                  "--formula", fixtures_dir / "urgent_over_half.pmlo")
    assert code == EXIT_FAILS


def test_ldiff_exit_code(fixtures_dir, capsys):
    code, _ = cli("check", "--pta", fixtures_dir / "coin_urgent.pta",
                  "--formula", fixtures_dir / "cross_step.pmlo")
    assert code == EXIT_USAGE
    assert "L_DIFF_UNDECIDABLE" in capsys.readouterr().err


def test_usage_errors(fixtures_dir, tmp_path):
    assert cli()[0] == EXIT_USAGE
    assert cli("check", "--formula", fixtures_dir / "coin.smp")[0] == EXIT_USAGE
    assert cli("check", "--model", tmp_path / "missing.smp", "--formula", fixtures_dir / "cross_step.pmlo")[0] \
        == EXIT_USAGE
    bad = tmp_path / "bad.pmlo"
    bad.write_text("exists t. B(t")
    assert cli("check", "--model", fixtures_dir / "coin.smp", "--formula", bad)[0] == EXIT_USAGE


def test_cap_exit_code(fixtures_dir):
    code, _ = cli("check", "--pta", fixtures_dir / "coin_urgent.pta", "--region-cap", "1",
                  "--formula", fixtures_dir / "urgent_half.pmlo", "--semantics", "urgent")
    assert code == EXIT_CAP


def test_product_command(fixtures_dir, tmp_path):
    out_file = tmp_path / "prod.pta"
    code, _ = cli("product", fixtures_dir / "unit_a.pta", fixtures_dir / "unit_b.pta", "-o", out_file)
    assert code == EXIT_HOLDS
    prod = formats.read_pta(out_file)
    assert len(prod.locations) == 4
    assert any(e.prob * 6 == 1 for e in prod.transitions)


def test_region_graph_export(fixtures_dir, tmp_path):
    code, _ = cli("region-graph", "--pta", fixtures_dir / "coin_urgent.pta", "--semantics", "urgent",
                  "-o", tmp_path / "g")
    assert code == EXIT_HOLDS
    smp = formats.read_smp(tmp_path / "g.smp")
    side = json.loads((tmp_path / "g.regions.json").read_text())
    assert len(side["states"]) == len(smp.states)
    assert side["semantics"] == "urgent"


def test_simulate_and_automaton(fixtures_dir, tmp_path):
    code, out = cli("simulate", "--pta", fixtures_dir / "coin_urgent.pta", "--steps", "3", "--seed", "1")
    assert code == EXIT_HOLDS and "measure: 1/2" in out
    pf = tmp_path / "pf.pmlo"
    pf.write_text("exists t. B(t)\n")
    code, out = cli("automaton", "--formula", pf)
    assert code == EXIT_HOLDS and "edge:" in out
    code, _ = cli("automaton", "--formula", pf, "-o", tmp_path / "a.txt")
    assert code == EXIT_HOLDS and (tmp_path / "a.txt").exists()
    assert cli("automaton", "--formula", fixtures_dir / "eventually_acc_positive.pmlo")[0] == EXIT_USAGE
    code, out = cli("automaton", "--formula", fixtures_dir / "cross_step.pmlo")
    assert code == EXIT_USAGE


def test_case_study_write(tmp_path):
    code, _ = cli("case-study", "--n", "2", "--write", tmp_path)
    assert code == EXIT_HOLDS
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "client.pta" in names and "recovery_possible.pmlo" in names
    for p in tmp_path.glob("*.pta"):
        formats.read_pta(p)
    for p in tmp_path.glob("*.pmlo"):
        formats.read_formula(p)


def test_automaton_text():
    a = A.compile_wmlo(L.parse_formula("exists t. B(t)"))
    text = formats.write_automaton(a)
    assert "tracks: B" in text and "edge:" in text


@pytest.mark.parametrize("text,expected", [
    ("x <= 1", CAtom("x", "<=", 1)),
    ("x - y > -2", CAtom("x", ">", -2, "y")),
    ("true", CTrue()),
    ("x < 1 | x > 2", COr(CAtom("x", "<", 1), CAtom("x", ">", 2))),
    ("(x >= 1 & y < 1)", CAnd(CAtom("x", ">=", 1), CAtom("y", "<", 1))),
])
def test_guard_grammar(text, expected):
    assert formats.parse_guard(text) == expected


def test_guard_errors():
    with pytest.raises(PmloError):
        formats.parse_guard("x <=")
