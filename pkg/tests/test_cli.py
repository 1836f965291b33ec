from __future__ import annotations

import json
import math

import pytest

from quadkernel.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, dumps, main
from quadkernel.model import D1, M1, M2


@pytest.fixture
def configs(tmp_path):
    paths = {}
    for name, m in (("m1", M1()), ("m2", M2()), ("d1", D1())):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(m.to_dict()))
        paths[name] = str(p)
    return paths


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    return main(list(argv) + ["--out", str(out)]), out


def test_analyze_continuous(tmp_path, configs):
    code, out = _run(tmp_path, "analyze", "--config", configs["m1"])
    assert code == EXIT_OK
    rep = json.loads((out / "analyze.json").read_text())
    assert rep["theta1_pm"] == pytest.approx([1 - math.sqrt(2), 1 + math.sqrt(2)], abs=1e-14)
    assert rep["beta"] == pytest.approx(math.pi / 2) and rep["group"] == "Finite(4)"
    assert rep["manifest"] == "analyze.manifest.json"
    man = json.loads((out / "analyze.manifest.json").read_text())
    assert set(man["outputs"]) == {"analyze.json", "curve_R.csv"} and man["tool_version"]
    assert (out / "curve_R.csv").read_text().startswith("# manifest=analyze.manifest.json")


def test_analyze_discrete(tmp_path, configs):
    code, out = _run(tmp_path, "analyze", "--config", configs["d1"])
    rep = json.loads((out / "analyze.json").read_text())
    assert code == EXIT_OK and rep["group_order"] == 4
    assert rep["inside_roots"] == pytest.approx([0.2918, 0.7639], abs=1e-4)


def test_config_errors(tmp_path, configs, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert _run(tmp_path, "analyze", "--config", str(bad))[0] == EXIT_CONFIG
    assert "parse" in capsys.readouterr().err
    bad.write_text(json.dumps(M1().to_dict() | {"extra": 1}))
    assert _run(tmp_path, "analyze", "--config", str(bad))[0] == EXIT_CONFIG
    assert _run(tmp_path, "analyze", "--config", str(tmp_path / "missing.json"))[0] == EXIT_CONFIG
    assert _run(tmp_path, "density", "--config", configs["d1"])[0] == EXIT_CONFIG
    oblique = tmp_path / "ob.json"
    oblique.write_text(json.dumps(M1().to_dict() | {"refl": [[1, 0.3], [0.2, 1]]}))
    assert _run(tmp_path, "transform", "--config", str(oblique), "--points=-1")[0] == EXIT_CONFIG
    assert main(["bogus"]) == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path, configs):
    assert _run(tmp_path, "transform", "--config", configs["m1"], "--points", "2")[0] == EXIT_NUMERIC


def test_transform_csv_roundtrip(tmp_path, configs):
    code, out = _run(tmp_path, "transform", "--config", configs["m2"], "--points=-1;0.5+1j")
    lines = (out / "transform.csv").read_text().splitlines()
    assert code == EXIT_OK and len(lines) == 4
    vals = [complex(float(l.split(",")[2]), float(l.split(",")[3])) for l in lines[2:]]
    assert vals[0] == 4 / 3 or abs(vals[0] - 4 / 3) < 1e-15
    assert abs(vals[1] - 4 / (2 - (0.5 + 1j))) < 1e-14


def test_asymptotics_transition(tmp_path, configs):
    alphas = ",".join(repr(a) for a in (0.3, math.atan(0.5), 0.7))
    code, out = _run(tmp_path, "asymptotics", "--config", configs["m2"], "--alpha", alphas, "--format", "json")
    rows = json.loads((out / "asymptotics.json").read_text())["rows"]
    assert code == EXIT_OK and [r[1] for r in rows] == ["Q-+", "Boundary", "Q+-"]
    code, out = _run(tmp_path, "asymptotics", "--config", configs["m2"])
    assert len((out / "asymptotics.csv").read_text().splitlines()) == 11


def test_group_and_discrete(tmp_path, configs):
    code, out = _run(tmp_path, "group", "--config", configs["m1"])
    assert code == EXIT_OK and json.loads((out / "group.json").read_text())["verdict"] == "Finite(4)"
    code, out = _run(tmp_path, "discrete", "--config", configs["d1"], "--alpha", "0.4", "--lattice", "20")
    assert code == EXIT_OK and (out / "lattice.json").exists()


def test_density_normalization(tmp_path, configs):
    code, out = _run(tmp_path, "density", "--config", configs["m1"], "--grid", "20", "--T", "4")
    mass = json.loads((out / "density_summary.json").read_text())["normalization"]
    assert code == EXIT_OK and abs(mass - 1) < 2e-3


def test_simulate_is_reproducible(tmp_path, configs):
    args = ["simulate", "--config", configs["m1"], "--horizon", "20", "--burn-in", "1", "--replicas", "2",
            "--seed", "11", "--theta=-1,-1;-0.5,-0.5"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for f in ("simulate.json", "accumulators.npz", "accumulators.json", "simulate.manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert json.loads((tmp_path / "a" / "accumulators.json").read_text())["manifest"] == "simulate.manifest.json"


def test_float_formatting():
    x = 0.1 + 0.2
    assert float(json.loads(dumps({"x": x}))["x"]) == x
    assert json.loads(dumps({"nan": float("nan")}))["nan"] is None
