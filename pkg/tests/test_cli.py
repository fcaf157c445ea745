import json

import numpy as np
import pytest

from wignerctx.cli import _normalize_argv, run


@pytest.fixture
def states(tmp_path):
    paths = {}
    for name, argv in {
        "fock1": ["--kind", "fock", "--n", "1", "--backbone", "fock", "--cutoff", "10"],
        "vac2": ["--kind", "vacuum", "--modes", "2"],
        "therm": ["--kind", "thermal", "--nbar", "0.5", "--backbone", "fock", "--cutoff", "30"],
    }.items():
        paths[name] = tmp_path / f"{name}.json"
        assert run(["state", *argv, "--out", str(paths[name])]) == 0
    return paths


def read_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_argv_normalization():
    assert _normalize_argv(["wigner", "--grid", "-6:6:3", "--edges", "-1:1:3"]) == [
        "wigner", "--grid=-6:6:3", "--edges=-1:1:3"
    ]


def test_verdict_contextual(states, capsys):
    assert run(["verdict", "--state", str(states["fock1"]), "--grid", "-6:6:241"]) == 0
    out = read_json(capsys)
    assert out["verdict"] == "contextual"
    assert out["negativity_volume"] > 0.2


def test_verdict_noncontextual(states, capsys):
    assert run(["verdict", "--state", str(states["vac2"]), "--grid", "-6:6:21"]) == 0
    assert read_json(capsys)["verdict"] == "noncontextual"


def test_missing_input_is_io_error(tmp_path):
    out = tmp_path / "w.csv"
    assert run(["wigner", "--state", str(tmp_path / "missing.json"), "--grid", "-6:6:11", "--out", str(out)]) == 2
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_usage_errors(states):
    assert run([]) == 2
    assert run(["bogus"]) == 2
    assert run(["hvm-sample", "--state", str(states["vac2"]), "--seed", "-1"]) == 2
    assert run(["hvm-sample", "--state", str(states["vac2"]), "--seed", str(2**64)]) == 2
    assert run(["simulate", "--state", str(states["vac2"]), "--label", "q1", "--shots", "-3"]) == 2
    assert run(["quad-pdf", "--state", str(states["vac2"]), "--label", "q1 +* p1"]) == 2
    assert run(["wigner", "--state", str(states["vac2"]), "--grid", "1:2", "--out", "x.csv"]) == 2


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0


def test_domain_errors(states, tmp_path):
    assert run(["hvm-sample", "--state", str(states["fock1"]), "--grid", "-6:6:61"]) == 1
    out = tmp_path / "w.csv"
    assert run(["wigner", "--state", str(states["fock1"]), "--grid", "-1:1:5", "--out", str(out)]) == 1
    assert not out.exists()
    assert run(["state", "--kind", "cat", "--alpha", "4", "--cutoff", "10", "--out", str(tmp_path / "c.json")]) == 1


def test_quad_pdf_methods_agree(states, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["quad-pdf", "--state", str(states["therm"]), "--label", "q1 - 0.5 p1", "--edges", "-6:6:61"]
    assert run([*base, "--out", str(a)]) == 0
    assert run([*base, "--method", "born", "--out", str(b)]) == 0
    ma = np.loadtxt(a, delimiter=",", skiprows=1)[:, 2]
    mb = np.loadtxt(b, delimiter=",", skiprows=1)[:, 2]
    assert 0.5 * np.abs(ma - mb).sum() < 1e-4


def test_compile_and_simulate(states, tmp_path, capsys):
    plan = tmp_path / "plan.json"
    assert run(["compile", "--label", "q1 + 2 p1 + 5 q2", "--modes", "2", "--out", str(plan)]) == 0
    body = json.loads(plan.read_text())
    assert body["gates"][1]["cz"]["g"] == pytest.approx(5**0.5)
    shots = tmp_path / "shots.csv"
    assert run(["simulate", "--state", str(states["vac2"]), "--plan", str(plan), "--shots", "20000",
                "--out", str(shots)]) == 0
    assert np.var(np.loadtxt(shots)) == pytest.approx(15.0, rel=0.05)


def test_context_pdf(states, capsys):
    assert run(["context-pdf", "--state", str(states["vac2"]), "--context", "q1; p2"]) == 0
    out = read_json(capsys)
    np.testing.assert_allclose(out["representation"]["gaussian"]["cov"], np.eye(2) * 0.5)


def test_hvm_check(states, capsys):
    assert run(["hvm-check", "--state", str(states["vac2"]), "--count", "20000", "--context", "q1;q2"]) == 0
    out = read_json(capsys)
    assert len(out["labels"]) == 4
    assert all(r["ks"] < 0.02 for r in out["labels"])
    assert out["contexts"][0]["tv"] < 0.05


def test_product_state(states, tmp_path, capsys):
    out = tmp_path / "prod.json"
    assert run(["state", "--kind", "product", "--inputs", str(states["fock1"]), str(states["therm"]),
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["cutoffs"] == [10, 30]
    assert run(["state", "--kind", "product", "--inputs", str(states["fock1"]), str(states["vac2"]),
                "--out", str(out)]) == 1
