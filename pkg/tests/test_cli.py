import json
import os
import subprocess
import sys

import pytest

from magnus_midpoint import __version__, cli

EXPERIMENTS = os.path.join(os.path.dirname(__file__), os.pardir, "experiments")


def write_spec(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(spec if isinstance(spec, str) else json.dumps(spec))
    return str(p)


def test_constant_global_order(tmp_path):
    spec = {"family": {"label": "constant", "dim": 4, "seed": 3}, "analysis": "global_order", "ns": [1, 2, 8]}
    out = tmp_path / "out"
    assert cli.run(write_spec(tmp_path, spec), str(out)) == 0
    rows = (out / "spec.csv").read_text().splitlines()
    assert rows[0] == "n,h,error,masked"
    assert len(rows) == 4 and all(r.endswith(",true") for r in rows[1:])
    summary = json.loads((out / "spec.json").read_text())
    assert summary["exact_scheme"] is True
    assert summary["fitted_order"] is None
    assert summary["spec"] == spec and summary["seed"] == 3
    assert summary["artifact_version"] == __version__
    assert "oracle_n" in summary and "bound_check" in summary


def test_weierstrass_run_populates_fit(tmp_path):
    src = os.path.join(EXPERIMENTS, "weierstrass_global.json")
    assert cli.run(src, str(tmp_path)) == 0
    rows = (tmp_path / "weierstrass_global.csv").read_text().splitlines()
    assert len(rows) == 10
    summary = json.loads((tmp_path / "weierstrass_global.json").read_text())
    assert summary["fitted_order"] >= 0.4


def test_outputs_are_byte_stable(tmp_path):
    src = os.path.join(EXPERIMENTS, "weierstrass_bound.json")
    assert cli.run(src, str(tmp_path / "a")) == 0
    assert cli.run(src, str(tmp_path / "b")) == 0
    for name in ("weierstrass_bound.csv", "weierstrass_bound.json"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
        assert b"\r" not in a


def test_float_format_17_digits(tmp_path):
    spec = {"family": {"label": "smooth", "dim": 2, "seed": 1}, "analysis": "local_order", "hs": [0.5, 0.25, 0.125]}
    assert cli.run(write_spec(tmp_path, spec), str(tmp_path)) == 0
    row = (tmp_path / "spec.csv").read_text().splitlines()[1].split(",")
    assert row[1] == "0.5"
    assert float(row[2]) == float(format(float(row[2]), ".17g"))


def test_stability_csv(tmp_path):
    spec = {
        "family": {"label": "schrodinger_1d", "n_modes": 8, "potential": {"profile": "cos", "freq": 2.0}},
        "analysis": "stability", "n": 5,
    }
    assert cli.run(write_spec(tmp_path, spec), str(tmp_path)) == 0
    rows = (tmp_path / "spec.csv").read_text().splitlines()
    assert rows[0] == "k,partial_norm,discounted" and len(rows) == 6
    assert json.loads((tmp_path / "spec.json").read_text())["stability_pass"] is True


@pytest.mark.parametrize("spec, field", [
    ("{not json", "JSON"),
    ({"family": {"label": "nope"}, "analysis": "global_order", "ns": [1]}, "spec.family.label"),
    ({"family": {"label": "weierstrass", "dim": 4, "seed": 1}, "analysis": "global_order", "ns": [2]}, "spec.family.alpha"),
    ({"family": {"label": "smooth", "dim": 2}, "analysis": "global_order", "ns": [4, 2]}, "spec.ns"),
    ({"family": {"label": "smooth", "dim": 2}, "analysis": "global_order", "ns": [2, 4], "norm": "vector"},
     "spec.initial_vector"),
    ({"family": {"label": "smooth", "dim": 2}, "analysis": "fly", "ns": [2]}, "spec.analysis"),
    ({"family": {"label": "smooth", "dim": 2}, "interval": {"s": 1, "t": 0}, "analysis": "global_order", "ns": [2]},
     "spec.interval"),
    ({"family": {"label": "divergence_form_1d", "n_grid": 16,
                 "coefficient": {"profile": "cos", "amplitude": 0.9}}, "analysis": "stability", "n": 2},
     "c_min"),
])
def test_bad_config_exit_1_and_no_files(tmp_path, capsys, spec, field):
    out = tmp_path / "out"
    assert cli.run(write_spec(tmp_path, spec), str(out)) == 1
    assert field in capsys.readouterr().err
    assert not out.exists()


def test_numerical_failure_exit_2(tmp_path, capsys):
    spec = {
        "family": {"label": "divergence_form_1d", "n_grid": 64, "coefficient": {"profile": "cos", "amplitude": 0.3}},
        "analysis": "stability", "n": 1,
    }
    out = tmp_path / "out"
    assert cli.run(write_spec(tmp_path, spec), str(out)) == 2
    assert "stiffness" in capsys.readouterr().err
    assert not out.exists()


def test_io_failures_exit_3(tmp_path):
    assert cli.run(str(tmp_path / "missing.json")) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    spec = {"family": {"label": "constant", "dim": 2}, "analysis": "global_order", "ns": [1, 2]}
    assert cli.run(write_spec(tmp_path, spec), str(blocker)) == 3


def test_timing_flag(tmp_path):
    spec = {"family": {"label": "constant", "dim": 2}, "analysis": "global_order", "ns": [1, 2]}
    assert cli.run(write_spec(tmp_path, spec), str(tmp_path), timing=True) == 0
    assert json.loads((tmp_path / "spec.json").read_text())["wall_time_seconds"] >= 0


def test_list_families_and_version():
    first = subprocess.run([sys.executable, "-m", "magnus_midpoint", "list-families"], capture_output=True, check=True)
    second = subprocess.run([sys.executable, "-m", "magnus_midpoint", "list-families"], capture_output=True, check=True)
    assert first.stdout == second.stdout
    text = first.stdout.decode()
    for label in ("schrodinger_1d", "weierstrass", "divergence_form_1d", "constant"):
        assert label in text
    v = subprocess.run([sys.executable, "-m", "magnus_midpoint", "version"], capture_output=True, text=True, check=True)
    assert v.stdout.strip() == __version__


def test_usage_error_exit_1():
    r = subprocess.run([sys.executable, "-m", "magnus_midpoint", "bogus"], capture_output=True)
    assert r.returncode == 1


@pytest.mark.parametrize("name", sorted(os.listdir(EXPERIMENTS)))
def test_shipped_experiments_parse(name):
    with open(os.path.join(EXPERIMENTS, name)) as fh:
        spec = json.load(fh)
    cli.build_family(spec["family"])
