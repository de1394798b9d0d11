import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difflab.cli import scenarios
from difflab.cli.config import Check, ScenarioError, dump, dumps, load, parse_text
from difflab.cli.diagnostics import REPRESENTATIONS, validate_operator
from difflab.cli.main import main
from difflab.cli.runner import run_scenario

SMALL = """
[scenario]
name = small-pme
equation = PME
nonlinearity = Power
m = 2.0
initial = BarenblattSample
t0 = 1.0
t_end = 1.2
outputs = 1.1
[grid]
left = -4.0
length = 8.0
n = 128
geometry = TruncatedLine
[step]
h = 0.01
[diagnostics]
mass_drift = <= 1e-8
support_monotone = true
"""


def small(**edits):
    text = SMALL
    for old, new in edits.items():
        text = text.replace(old, new)
    return text


# -- configs --------------------------------------------------------------------------

@settings(deadline=None, max_examples=len(scenarios.BUILTINS))
@given(st.sampled_from(sorted(scenarios.BUILTINS)))
def test_builtin_round_trip(name):
    sc = scenarios.get(name)
    assert parse_text(dumps(sc)) == sc


def test_file_round_trip(tmp_path):
    sc = parse_text(SMALL)
    dump(sc, tmp_path / "a.ini")
    assert load(tmp_path / "a.ini") == sc


@pytest.mark.parametrize("text,good,bad", [
    ("<= 1e-6", 1e-7, 2e-6),
    ("> 0", 1.0, 0.0),
    ("-1.5 +- 0.1", -1.45, -1.7),
    ("2.0 +- 5%", 2.09, 2.2),
    ("true", True, False),
])
def test_check_evaluation(text, good, bad):
    c = Check(text)
    assert c.active and c.evaluate(good) and not c.evaluate(bad)


def test_check_edge_cases():
    assert not Check("").active
    assert not Check("< 1").evaluate(float("nan"))
    assert Check("2.0 +- 5%").describe() == {"kind": "+-", "target": 2.0, "tol": 5.0, "relative": True}
    with pytest.raises(ScenarioError):
        Check("about 3")


def test_validate_lists_every_problem():
    bad = small(**{"equation = PME": "equation = PMFP", "t_end = 1.2": "t_end = 0.5", "outputs = 1.1": "outputs = 3.0"})
    with pytest.raises(ScenarioError) as err:
        parse_text(bad).validate()
    msg = str(err.value)
    for part in ("periodic", "t_end must exceed t0", "output times"):
        assert part in msg


def test_parse_errors():
    with pytest.raises(ScenarioError):
        parse_text("[scenario]\nname = x\n")
    with pytest.raises(ScenarioError):
        parse_text(small(**{"n = 128": "n = many"}))
    with pytest.raises(ScenarioError):
        parse_text(small(**{"mass_drift = <= 1e-8": "mass_drift = small"}))


def test_expand_cases():
    text = SMALL + "[case:coarse]\ngrid.n = 64\n[case:strict]\ndiagnostics.mass_drift = <= 1e-12\n"
    sc = parse_text(text)
    coarse, strict = sc.expand()
    assert coarse.name == "small-pme/coarse" and coarse.grid.n == 64
    assert dict(coarse.diagnostics) == dict(sc.diagnostics)
    assert dict(strict.diagnostics) == {"mass_drift": "<= 1e-12"}
    assert parse_text(SMALL).expand() == [parse_text(SMALL)]


def test_registry_covers_each_criterion_once():
    crit = [b.criterion for b in scenarios.BUILTINS.values() if b.criterion is not None]
    assert sorted(crit) == list(range(1, 16))
    for b in scenarios.BUILTINS.values():
        assert b.anchor
        b.scenario().validate()
        for case in b.scenario().expand():
            case.validate()


# -- running --------------------------------------------------------------------------

def _csvs(folder):
    return {p.relative_to(folder): p.read_bytes() for p in sorted(folder.rglob("*.csv"))}


def test_runs_are_deterministic(tmp_path):
    sc = parse_text(SMALL)
    s1 = run_scenario(sc, tmp_path / "a")
    s2 = run_scenario(sc, tmp_path / "b")
    assert s1.ok and s2.ok and s1.n_checks == 2
    a, b = _csvs(tmp_path / "a"), _csvs(tmp_path / "b")
    assert a and a == b
    summary = json.loads((tmp_path / "a" / "small-pme" / "summary.json").read_text())
    assert summary["ok"] and {d["name"] for d in summary["diagnostics"]} == {"mass_drift", "support_monotone"}


def test_empty_diagnostics_run_without_checks(tmp_path):
    text = SMALL.split("[diagnostics]")[0]
    s = run_scenario(parse_text(text), tmp_path)
    assert s.ok and s.n_checks == 0 and s.diagnostics == []


def test_runtime_abort_keeps_partial_summary(tmp_path):
    text = SMALL + f"[case:fine]\ngrid.n = 128\n[case:broken]\nscenario.initial = Custom\ninitial.table = {tmp_path / 'missing.csv'}\n"
    s = run_scenario(parse_text(text), tmp_path)
    assert not s.ok and "broken" in s.error
    assert [d.name for d in s.diagnostics] == ["fine.mass_drift", "fine.support_monotone"]
    assert json.loads((tmp_path / "small-pme" / "summary.json").read_text())["error"]


def test_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.ini"
    good.write_text(SMALL)
    assert main(["run", str(good), "--out", str(tmp_path / "o")]) == 0
    failing = tmp_path / "failing.ini"
    failing.write_text(small(**{"mass_drift = <= 1e-8": "mass_drift = >= 1.0"}))
    assert main(["run", str(failing), "--out", str(tmp_path / "o")]) == 1
    invalid = tmp_path / "invalid.ini"
    invalid.write_text(small(**{"t_end = 1.2": "t_end = 0.5"}))
    assert main(["run", str(invalid), "--out", str(tmp_path / "o")]) == 2
    assert main(["validate", str(invalid)]) == 2
    assert main(["validate", str(good)]) == 0
    assert "validation error" in capsys.readouterr().err


def test_output_directory_resolution(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    monkeypatch.setenv("DIFFLAB_OUT", str(tmp_path / "env"))
    assert main(["run", str(cfg)]) == 0
    assert (tmp_path / "env" / "small-pme" / "summary.json").exists()
    assert main(["run", str(cfg), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "small-pme" / "summary.json").exists()


def test_list_and_show(capsys):
    assert main(["list-scenarios"]) == 0
    listing = capsys.readouterr().out
    assert all(name in listing for name in scenarios.BUILTINS)
    assert main(["show", "pme-barenblatt-m2"]) == 0
    assert parse_text(capsys.readouterr().out) == scenarios.get("pme-barenblatt-m2")
    assert main(["show", "nope"]) == 2


def test_validate_operator():
    rep = validate_operator(0.5, ("spectral", "spectral"))
    assert max(rep.values()) == 0.0
    assert main(["validate-operator", "--s", "0.5", "--pair", "spectral,semigroup"]) == 0
    assert main(["validate-operator", "--s", "0.5", "--pair", "spectral"]) == 2
    assert set(REPRESENTATIONS) >= {"spectral", "quadrature", "semigroup"}


def test_kernel_table(tmp_path):
    assert main(["kernel-table", "--s", "0.5", "--t", "1.0", "--n", "1024", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "kernel_s0.5_t1.csv").read_text().splitlines()
    assert rows[0] == "x,P_t,envelope,ratio" and len(rows) == 1025
    table = [[float(v) for v in r.split(",")] for r in rows[1:]]
    x, p, env, ratio = min(table, key=lambda r: abs(r[0]))
    assert x == 0.0 and ratio == pytest.approx(1 / math.pi, rel=1e-6) and p / env == pytest.approx(ratio)
    assert main(["kernel-table", "--s", "1.0", "--t", "1.0", "--out", str(tmp_path)]) == 2


def test_figures_are_opt_in(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    assert main(["run", str(cfg), "--out", str(tmp_path / "plain")]) == 0
    assert not list((tmp_path / "plain").rglob("*.png"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "fig"), "--figures"]) == 0
    assert list((tmp_path / "fig" / "small-pme" / "figures").glob("*.png"))
