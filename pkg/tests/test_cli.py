import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from levy_extrema.cli import dumps, main

BROWNIAN = {"model": {"family": "brownian", "mu": 0.0, "sigma": math.sqrt(2.0)},
            "stopping": {"kind": "exponential", "q": 1.0},
            "pipeline": {"poles": 2, "grid": {"size": 4096}},
            "ruin": {"u": [0.0, 0.5, 1.0, 2.0]},
            "validate": {"paths": 5000, "dt": 0.01, "bridge": True, "threshold": 0.1}}


def write(tmp_path, doc, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_dumps_full_precision():
    text = dumps({"x": 0.1, "n": 3, "z": [True, None], "e": {}})
    assert '"x": 0.10000000000000001' in text
    assert json.loads(text) == {"x": 0.1, "n": 3, "z": [True, None], "e": {}}


def test_ruin_command_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["ruin", "--config", write(tmp_path, BROWNIAN), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["approximation.csv", "density_infimum.csv", "density_supremum.csv", "manifest.json", "ruin.csv"]
    head, data = read_csv(out / "density_supremum.csv")
    assert head == "x,density" and data.shape == (2001, 2)
    assert np.allclose(data[:, 1], np.exp(-data[:, 0]), atol=1e-10)
    head, data = read_csv(out / "density_infimum.csv")
    assert np.all(data[:, 0] <= 0) and np.allclose(data[:, 1], np.exp(data[:, 0]), atol=1e-10)
    head, data = read_csv(out / "ruin.csv")
    assert head == "u,ruin_probability"
    assert np.allclose(data[:, 1], np.exp(-data[:, 0]), atol=1e-10)
    head, data = read_csv(out / "approximation.csv")
    assert head == "w,h_re,h_im,r_re,r_im" and data.shape[1] == 5
    man = json.loads((out / "manifest.json").read_text())
    r = man["result"]
    for key in ("poles", "basis", "coefficients", "a0", "class", "fit_error", "bound_p", "bound_value",
                "factor_plus", "factor_minus", "rescale_plus", "rescale_minus", "atom_sup", "atom_inf",
                "density_terms", "phase_winding", "notes"):
        assert key in r
    assert r["coefficients"] == pytest.approx([0.5, 0.5], abs=1e-10)
    assert man["command"] == "ruin" and man["seed"] == 0


def test_factorize_writes_no_densities(tmp_path):
    out = tmp_path / "f"
    assert main(["factorize", "--config", write(tmp_path, BROWNIAN), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["approximation.csv", "manifest.json"]


def test_validate_idempotent_with_seed(tmp_path):
    cfg = write(tmp_path, BROWNIAN)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["validate", "--config", cfg, "--out", str(a), "--seed", "11"]) == 0
    assert main(["validate", "--config", cfg, "--out", str(b), "--seed", "11"]) == 0
    ma, mb = (a / "manifest.json").read_text(), (b / "manifest.json").read_text()
    assert ma == mb
    man = json.loads(ma)
    assert man["seed"] == 11 and man["validation"]["passed"]
    assert man["validation"]["ks_supremum"] < 0.1


def test_validate_threshold_exit_code(tmp_path, capsys):
    doc = {**BROWNIAN, "validate": {"paths": 200, "dt": 0.01, "threshold": 1e-6}}
    out = tmp_path / "v"
    assert main(["validate", "--config", write(tmp_path, doc), "--out", str(out)]) == 4
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "validation"
    assert not json.loads((out / "manifest.json").read_text())["validation"]["passed"]


def test_config_error_exit_code(tmp_path, capsys):
    out = tmp_path / "x"
    assert main(["density", "--config", write(tmp_path, {**BROWNIAN, "bogus": 1}), "--out", str(out)]) == 2
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec["error"] == "config" and "bogus" in rec["message"]
    assert not out.exists()


def test_pipeline_error_exit_code_and_no_partial_output(tmp_path, capsys):
    doc = {**BROWNIAN, "pipeline": {"poles": 2, "coefficients": [1.0]}}
    out = tmp_path / "p"
    assert main(["density", "--config", write(tmp_path, doc), "--out", str(out)]) == 3
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec == {"error": "pipeline", "message": rec["message"], "stage": "fit"}
    assert not out.exists() or not any(out.iterdir())


def test_output_env_var(tmp_path, monkeypatch):
    out = tmp_path / "env"
    monkeypatch.setenv("LEVY_EXTREMA_OUT", str(out))
    assert main(["factorize", "--config", write(tmp_path, BROWNIAN)]) == 0
    assert (out / "manifest.json").exists()


def test_console_entry_point(tmp_path):
    out = tmp_path / "sub"
    proc = subprocess.run([sys.executable, "-m", "levy_extrema.cli", "density", "--config", write(tmp_path, BROWNIAN),
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "density_supremum.csv").exists()
    proc = subprocess.run([sys.executable, "-m", "levy_extrema.cli", "nope", "--config", "x"], capture_output=True)
    assert proc.returncode == 2
