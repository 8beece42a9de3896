from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

from qpmoduli import __version__
from qpmoduli.cli import RunConfig, main
from qpmoduli.formats import format_point, load_surface
from qpmoduli.lie_backend import build_model
from qpmoduli.quasi_poisson import random_point


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_annulus_suite_passes(capsys):
    code, out, _ = run(capsys, "verify", "quasi-poisson", "--surface", "annulus", "--model", "gl2", "--samples", "10")
    assert code == 0
    assert out.startswith(f"qpmoduli {__version__}\n")
    assert "config: surface=annulus model=gl2 samples=10" in out
    assert "FAIL" not in out and "annulus bivector" in out


def test_report_is_deterministic(capsys):
    argv = ("verify", "quasi-poisson", "--surface", "triangle", "--samples", "5", "--seed", "3")
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a == b


def test_residual_failure_exits_one(capsys):
    code, out, _ = run(capsys, "verify", "quasi-poisson", "--surface", "genus1", "--samples", "3", "--tol", "1e-30")
    assert code == 1 and "FAIL" in out


def test_machine_readable_lines(capsys):
    code, out, _ = run(capsys, "verify", "quasi-poisson", "--surface", "disc", "--samples", "2", "--format", "lines")
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines() if line.startswith("check\t")]
    assert rows and all(len(r) == 6 and r[4] == "PASS" for r in rows)


def test_pairing_output(capsys):
    code, out, _ = run(capsys, "pairing", "triangle", "a^-1", "b")
    assert code == 0 and "- [1@p1]" in out


def test_empty_surface_file_is_usage_error(tmp_path, capsys):
    f = tmp_path / "empty.txt"
    f.write_text("")
    code, _, err = run(capsys, "verify", "quasi-poisson", "--surface", str(f))
    assert code == 2 and "1:1" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "quasi-poisson", "--surface", "annulus", "--model", "so3"),
        ("verify", "quasi-poisson", "--surface", "nowhere"),
        ("verify", "quasi-poisson", "--surface", "annulus", "--samples", "0"),
        ("pairing", "triangle", "a", "zz"),
        ("bracket", "--surface", "genus1", "--f", "tr(a", "--g", "tr(b)"),
        ("example", "nope"),
    ],
)
def test_usage_errors_exit_two(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_bracket_at_point(tmp_path, capsys):
    S = load_surface("genus1")
    x = random_point(S, build_model("gl2"), np.random.default_rng(0))
    pt = tmp_path / "pt.txt"
    pt.write_text(format_point(x))
    code, out, _ = run(capsys, "bracket", "--surface", "genus1", "--f", "tr(a)", "--g", "tr(b)", "--at", str(pt))
    assert code == 0 and "FAIL" not in out


def test_env_model(monkeypatch, capsys):
    monkeypatch.setenv("QPMODULI_MODEL", "sl2")
    code, out, _ = run(capsys, "verify", "quasi-poisson", "--surface", "disc", "--samples", "2")
    assert code == 0 and "model=sl2" in out


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("x", (), "gl2", samples=0)
    with pytest.raises(ValueError):
        RunConfig("x", (), "gl2", tol=0.0)


def test_example_and_quilt_file(capsys):
    code, out, _ = run(capsys, "example", "heisenberg-double", "--samples", "3")
    assert code == 0 and "PASS" in out
    code, out, _ = run(capsys, "verify", "quilt", "--file", "fission", "--samples", "3")
    assert code == 0 and "residual gauge algebra dim = 4" in out


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and "annulus" in out and "fission" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qpmoduli", "pairing", "annulus", "e", "e"], capture_output=True, text=True)
    assert r.returncode == 0 and "[e^-1] - [e]" in r.stdout
