import json
import math
import os

import pytest

from osmoflow import __version__
from osmoflow.cli import main
from osmoflow.config import ConfigError, RunConfig

SMALL = """
[grid]
n = 48
n_coarse = 32
n_fine = 64
stokes_n = 32

[spectrum]
k_max = 6
tol_zero = {tol}

[simulate]
n_inner = 33
n_outer = 33
dt = 0.002
t_final = {tf}
output_every = 25
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_help_and_version(capsys):
    assert main(["--help"]) == 0
    assert "spectrum" in capsys.readouterr().out
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out
    assert main(["spectrum", "--help"]) == 0


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["stokes"]) == 2  # --k is required


def test_missing_config_file(tmp_path):
    assert main(["spectrum", "--params", str(tmp_path / "missing.toml")]) == 2


@pytest.mark.parametrize("text", ["[params]\nnu_minus = -1.0\n", "[params]\nnu = 1.0\n",
                                  "[grid]\nn = 4\n", "seed = \n", "[spectrum]\nk_max = 1\n"])
def test_invalid_config_rejected(tmp_path, text, capsys):
    assert main(["verify-all", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 2
    assert not (tmp_path / "verify_report.json").exists()


def test_config_round_trip(tmp_path):
    cfg = RunConfig.from_toml(write(tmp_path, SMALL.format(tol=1e-6, tf=1.0)))
    assert cfg.grid.n == 48 and cfg.spectrum.k_max == 6
    assert RunConfig.from_mapping(cfg.to_dict()) == cfg
    assert cfg.digest() != RunConfig().digest()
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"grid": 3})


def test_stokes_json(capsys):
    assert main(["stokes", "--k", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["v_interface"][0] == pytest.approx(-27 / 128, rel=1e-10)
    assert out["meta"]["version"] == __version__
    assert len(out["meta"]["config_sha256"]) == 64


def test_verify_ls(capsys):
    assert main(["verify-ls", "--nu+", "1", "--nu-", "1", "--xi", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["det_M"] == pytest.approx(-8.0)
    assert main(["verify-ls", "--nu+", "1", "--nu-", "1", "--xi", "0"]) == 2


def test_equilibrium(capsys):
    assert main(["equilibrium", "--m+", repr(2 * math.pi), "--m-", repr(3 * math.pi), "--rc", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["roots"][0]["R_star"] == pytest.approx(1.0)
    assert main(["equilibrium", "--m+", "3e-8", "--m-", "3e-8"]) == 1


def test_spectrum_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(tol=1e-6, tf=1.0))
    out = tmp_path / "spectrum_out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kernel_dimension"] == 4
    raw = (out / "spectrum.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0].startswith(f"# osmoflow {__version__} config_sha256=")
    assert lines[1] == "k,re,im"


def test_simulate_deterministic_and_restartable(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(tol=1e-6, tf=0.5))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    for name in ("trajectory.csv", "final_state.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "trajectory.csv").read_text().splitlines()[1]
    assert header == "t,R,M+,M-,E,D,distance,distance_c"
    assert "config_sha256" in json.loads((a / "final_state.json").read_text())["meta"]
    c = tmp_path / "c"
    assert main(["simulate", "--config", cfg, "--init", str(a / "final_state.json"),
                 "--out", str(c), "--tfinal", "0.1"]) == 0


def test_mode_evolve(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(tol=1e-6, tf=1.0))
    assert main(["mode-evolve", "--config", cfg, "--k", "2", "--tfinal", "4",
                 "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rate"] == pytest.approx(out["leading_eigenvalue"], rel=0.05)
    assert (tmp_path / "mode_norms.csv").exists()


def test_seed_override_changes_hash(capsys):
    main(["stokes", "--k", "3"])
    h0 = json.loads(capsys.readouterr().out)["meta"]["config_sha256"]
    main(["stokes", "--k", "3", "--seed", "7"])
    h1 = json.loads(capsys.readouterr().out)["meta"]["config_sha256"]
    assert h0 != h1


@pytest.mark.slow
def test_verify_all_tiny_tolerance_fails(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(tol=1e-30, tf=2.0))
    assert main(["verify-all", "--config", cfg, "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert not rep["passed"]
    kd = next(c for c in rep["criteria"] if c["id"] == 1)
    assert not kd["passed"]
    assert "FAIL" in capsys.readouterr().err
    assert os.path.getsize(tmp_path / "verify_report.json") > 0
