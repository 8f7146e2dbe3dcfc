import io
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from pathvisc import cli, config
from pathvisc import geometry as G
from pathvisc.errors import ConfigError

HERE = os.path.dirname(__file__)
CONFIGS = os.path.join(HERE, os.pardir, "configs")


def cfgpath(name):
    return os.path.join(CONFIGS, name)


def test_parse_number():
    assert config.parse_number("2pi") == pytest.approx(2 * math.pi)
    assert config.parse_number("-pi") == pytest.approx(-math.pi)
    assert config.parse_number("0.5*pi") == pytest.approx(0.5 * math.pi)
    assert config.parse_number("inf") == math.inf
    assert config.parse_number("1e-3") == 1e-3
    with pytest.raises(ValueError):
        config.parse_number("two")


def test_parse_scalar_field():
    sf = config.parse_scalar_field("0.1 + lin(0.5,0) + 0.2*sin(1,0) + -0.1*sin(0,2,p=0.3)", 2)
    x = np.array([0.7, 1.3])
    ref = 0.1 + 0.5 * 0.7 + 0.2 * np.sin(0.7) - 0.1 * np.sin(2 * 1.3 + 0.3)
    assert float(sf.value(x)) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(ValueError):
        config.parse_scalar_field("cos(1)", 1)


def test_parse_matrix():
    assert np.array_equal(config.parse_matrix("0.5", 2), 0.5 * np.eye(2))
    assert np.array_equal(config.parse_matrix("1,0.1;0.1,2", 2), [[1, 0.1], [0.1, 2]])
    with pytest.raises(ValueError):
        config.parse_matrix("1,2,3", 2)


def test_isaacs_family_shapes():
    fam = config.parse_isaacs_family("sigma=0.3+0.1*sin(1,0) c=1 | sigma=0.2 ; drift=0.5 source=-1", 2)
    assert [len(r) for r in fam] == [2, 1]
    s = fam[0][0].sigma_at(np.array([np.pi / 2, 0.0]), 2)
    assert np.allclose(s, 0.4 * np.eye(2))
    assert fam[1][0].scalar_at("source", np.zeros(2)) == -1.0
    with pytest.raises(ValueError):
        config.parse_isaacs_family("mu=1", 2)


@pytest.mark.parametrize("name", sorted(f for f in os.listdir(CONFIGS) if f != "bad.ini"))
def test_shipped_configs_load(name):
    lc = config.load_config(cfgpath(name))
    assert lc.experiment.grid.dim == lc.experiment.metric.dim


def test_conformal_config_builds_metric():
    lc = config.load_config(cfgpath("geometry_conformal.ini"))
    m = lc.experiment.metric
    assert isinstance(m, G.ConformalMetric)
    assert lc.get("radius_grid", kind=list) == [0.25, 0.5, 1.0, 1.5, 2.0]
    assert lc.get("missing", 7) == 7


def test_seed_override():
    assert config.load_config(cfgpath("extend_brownian.ini"), seed=5).experiment.seed == 5


@pytest.mark.parametrize("text, line, section", [
    ("[metric]\nfamily = klein_bottle\n", 2, "metric"),
    ("[metric]\ndim = 1\n[grid]\npoints = many\n", 4, "grid"),
    ("[metric]\ndim = 1\n\n[bogus]\nx = 1\n", 4, "bogus"),
    ("[signal.a]\ngenerator = zigzag\n", 1, "signal.a"),
    ("[F]\nkind = isaacs\nfamily = mu=3\n", 3, "F"),
])
def test_config_errors_carry_location(text, line, section):
    with pytest.raises(ConfigError) as exc:
        config.loads_config(text)
    assert exc.value.line == line and exc.value.section == section
    assert f"line {line}" in str(exc.value)


def test_check_and_summary_order():
    checks = [cli.Check("a", 1.0, 2.0), cli.Check("b", 3.0, 2.0), cli.Check("c", math.nan, 1.0)]
    assert [c.passed for c in checks] == [True, False, False]
    out = cli.emit_summary(checks).splitlines()
    assert out[0].split()[:4] == ["name", "measured", "bound", "margin"]
    assert out[1].endswith("FAIL") and out[-1].endswith("PASS")
    assert cli.exit_status(checks) == 1 and cli.exit_status(checks[:1]) == 0


@pytest.mark.parametrize("verb, name, outfile", [
    ("geometry-check", "geometry_identity.ini", "geometry.csv"),
    ("solve", "solve_hopf_lax.ini", "trajectory.csv"),
    ("compare1", "compare1_zigzag.ini", "compare1.csv"),
    ("compare2", "compare2_diffusion.ini", "compare2.csv"),
    ("isaacs-check", "isaacs_lipschitz.ini", "isaacs.csv"),
    ("phi-check", "phi_conformal.ini", "phi_sweep.csv"),
])
def test_verbs_pass(tmp_path, verb, name, outfile):
    buf = io.StringIO()
    status, reports = cli.dispatch(verb, cfgpath(name), str(tmp_path), stream=buf)
    assert status == 0, buf.getvalue()
    assert (tmp_path / outfile).exists()
    assert "FAIL" not in buf.getvalue()


def test_extend_verb_small(tmp_path):
    p = tmp_path / "ext.ini"
    p.write_text("[metric]\nfamily = identity\ndim = 1\n[grid]\npoints = 256\n"
                 "[run]\nlevels = 2, 4\ntrend_from = 2\nupsilon = 2\n")
    status, reports = cli.dispatch("extend", str(p), str(tmp_path), stream=io.StringIO())
    assert (tmp_path / "extension.csv").exists()
    assert {r.name for r in reports} == {"extension_bound", "extension_trend"}


def test_bad_config_and_verb_exit_two(tmp_path, capsys):
    assert cli.main(["solve", "--config", cfgpath("bad.ini"), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["frobnicate", "--config", cfgpath("bad.ini")]) == 2
    assert cli.main(["solve"]) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PATHVISC_OUT", str(tmp_path / "envout"))
    status, _ = cli.dispatch("compare1", cfgpath("compare1_zigzag.ini"), stream=io.StringIO())
    assert status == 0 and (tmp_path / "envout" / "compare1.csv").exists()


def test_failing_check_exits_one(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[metric]\nfamily = identity\ndim = 1\n[grid]\npoints = 32\n"
                 "[signal.a]\ngenerator = linear\n[signal.b]\ngenerator = zero\n"
                 "[run]\nupsilon = 0.5\n")
    status, reports = cli.dispatch("compare1", str(p), str(tmp_path), stream=io.StringIO())
    assert status == 1 and "error" in reports[0].metadata


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pathvisc.cli", "compare1", "--config",
                        cfgpath("compare1_zigzag.ini"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "PASS" in r.stdout
