import csv
import io
import json
import os
import subprocess
import sys

import pytest

from rwlab import cli, scenarios
from rwlab.errors import ConfigError
from rwlab.scenarios import CheckResult, Report, Scenario, emit, run_scenario

SMALL_CALDERON = {"kind": "calderon", "omega": "std:gamma=1", "nu": "std:gamma=0", "p": 2.0,
                  "n_profiles": 20, "seed": 7}


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_scenario_validation():
    with pytest.raises(ConfigError):
        Scenario.from_dict({"kind": "calderon", "bogus": 1})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"kind": "nope"})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"kind": "calderon", "omega": "std:gamma=0", "nu": "std:gamma=0", "p": 1.0})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"kind": "counterexample", "checks": ["sign"]})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"kind": "calderon", "omega": "std:gamma=-3", "nu": "std:gamma=0", "p": 2.0})
    with pytest.raises(ConfigError):
        Scenario.load("/nonexistent/scenario.toml")


def test_forelli_rudin_single_case():
    rep = run_scenario(Scenario.from_dict({"kind": "forelli-rudin", "gamma": 1.0, "beta": 0.0, "p": 2.0}))
    assert rep.passed
    names = {c.name.split("[")[0] for c in rep.checks}
    assert names == {"sign", "constant", "representation"}


def test_check_selection():
    rep = run_scenario(Scenario.from_dict({"kind": "forelli-rudin", "gamma": 0.0, "beta": 1.0, "p": 3.0,
                                           "checks": ["sign"]}))
    assert {c.name.split("[")[0] for c in rep.checks} == {"sign"}


def test_calderon_small_deterministic():
    s = Scenario.from_dict(SMALL_CALDERON)
    a, b = emit(run_scenario(s)), emit(run_scenario(s))
    assert a == b
    d = json.loads(a)
    assert d["pass"] is True and "wall_time" not in d
    assert "double_stieltjes_excess" in json.dumps(d)


def test_csv_report_shape():
    rep = run_scenario(Scenario.from_dict({"kind": "forelli-rudin", "gamma": 0.0, "beta": 0.0, "p": 2.0}))
    rows = list(csv.reader(io.StringIO(emit(rep, "csv"))))
    assert rows[0] == ["section", "name", "value", "expected", "tolerance", "pass"]
    assert all(r[0] in ("check", "profile") for r in rows[1:])
    with pytest.raises(ConfigError):
        emit(rep, "xml")


def test_verify_toml_file(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text('kind = "forelli-rudin"\ngamma = 2.0\nbeta = -0.5\np = [1.5, 3.0]\n')
    out = tmp_path / "r.json"
    code, _, _ = run_cli(["verify", "--scenario", str(path), "--out", str(out)], capsys)
    assert code == 0
    assert json.loads(out.read_text())["pass"] is True


def test_verify_exit_code_on_failure(monkeypatch, capsys):
    bad = Report("x", [CheckResult("sign", 1.0, 0.0, 0.0, False)], {}, {})
    monkeypatch.setattr(cli, "run_scenario", lambda s: bad)
    code, out, _ = run_cli(["verify", "--scenario", "counterexample"], capsys)
    assert code == 1 and json.loads(out)["pass"] is False


def test_verify_bad_scenario(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text('kind = "calderon"\nwhat = 1\n')
    code, _, err = run_cli(["verify", "--scenario", str(path)], capsys)
    assert code == 2 and "unknown scenario keys" in err


def test_ap_csv(capsys):
    code, out, _ = run_cli(["ap", "--omega", "std:gamma=1", "--nu", "std:gamma=0", "--p", "2",
                            "--grid-min", "0.999999", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["r", "A_p"] and len(rows) > 3


def test_mp_and_classes(capsys):
    code, out, _ = run_cli(["mp", "--omega", "std:gamma=0", "--nu", "log:alpha=2", "--p", "2",
                            "--grid-min", "0.999999"], capsys)
    assert code == 0 and json.loads(out)["p"] == 2.0
    code, out, _ = run_cli(["classes", "--weight", "std:gamma=0", "--grid-min", "0.999999"], capsys)
    assert code == 0 and {"Dhat", "Dcheck"} <= set(json.loads(out))


def test_kernel_project_blocks(capsys):
    code, out, _ = run_cli(["kernel", "--weight", "std:gamma=0", "--u", "0.5"], capsys)
    assert code == 0 and json.loads(out)["value"][0] == pytest.approx(4.0, rel=1e-12)
    code, out, _ = run_cli(["project", "--weight", "std:gamma=0", "--mode", "0", "--g", "poly:0,0,1"], capsys)
    assert json.loads(out)["coefficient"] == pytest.approx(0.5, rel=1e-12)
    code, out, _ = run_cli(["project", "--weight", "std:gamma=0", "--mode", "-2", "--g", "const:1"], capsys)
    assert json.loads(out)["coefficient"] == 0.0
    code, out, _ = run_cli(["blocks", "--omega", "std:gamma=0", "--degree", "40"], capsys)
    d = json.loads(out)
    assert code == 0 and all(0.125 <= b["monomial_ratio"] <= 8 for b in d["blocks"])


def test_opnorm_cli(capsys):
    code, out, _ = run_cli(["opnorm", "--op", "h", "--omega", "std:gamma=0", "--nu", "std:gamma=0",
                            "--p", "2", "--grid", "64"], capsys)
    d = json.loads(out)
    assert code == 0 and d["heuristic_estimate"] >= d["lower_bound"] >= 1.0 - 1e-9


def test_errors_exit_two(capsys):
    code, _, err = run_cli(["kernel", "--weight", "std:gamma=0", "--u", "1.5"], capsys)
    assert code == 2 and err.startswith("rwlab: error")
    code, _, _ = run_cli(["kernel", "--weight", "bogus:x=1", "--u", "0.1"], capsys)
    assert code == 2


def test_pure_backend_subprocess():
    env = dict(os.environ, RWLAB_PURE="1")
    code = ("import rwlab._backend as b, rwlab; print(b.BACKEND); "
            "print(rwlab.kernel_eval(rwlab.KernelSeries(rwlab.standard(0)), 0.5).real)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    lines = out.stdout.split()
    assert lines[0] == "python" and float(lines[1]) == pytest.approx(4.0, rel=1e-12)


def test_builtin_names():
    for name in scenarios.BUILTIN:
        assert Scenario.load(name).name == name
