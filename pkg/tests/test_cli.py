import subprocess
import sys

import numpy as np
import pytest

from iopseudo.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from iopseudo.systems import PlatoonSpec, save_platoon_spec, save_system, StateSpaceSystem


def report(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_bounds_example1(tmp_path, capsys):
    code = main(["bounds", "--system", "example1", "--eps", "0.25,1", "--res", "200x200",
                 "--window=-2.5,0.5,-1.6,1.6", "--out", str(tmp_path)])
    assert code == EXIT_OK
    r = report(tmp_path / "bounds.txt")
    assert r["system"] == "example1" and r["scenario"] == "impulse"
    assert float(r["lower"]) == pytest.approx(0.25, abs=1e-4)
    assert float(r["axis_value"]) == pytest.approx(0.5, abs=1e-4)
    assert float(r["contour_value"]) == pytest.approx(1.0, abs=1e-3)
    assert capsys.readouterr().out == (tmp_path / "bounds.txt").read_text()
    assert (tmp_path / "bounds.csv").read_text().startswith("system,scenario,")


def test_bounds_example2(tmp_path):
    assert main(["bounds", "--system", "example2", "--norm", "inf", "--a", "3",
                 "--out", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path / "bounds.txt")
    assert float(r["semicircle_value"]) == pytest.approx(2.025, abs=1e-3)


def test_grid_and_curves(tmp_path):
    args = ["--system", "example1", "--res", "60x50", "--window=-2.5,0.5,-1.6,1.6",
            "--out", str(tmp_path)]
    assert main(["grid"] + args) == EXIT_OK
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == 1 + 60 * 50
    assert main(["curves", "--eps", "0.25,1"] + args) == EXIT_OK
    eps = {ln.split(",")[0] for ln in (tmp_path / "curves.csv").read_text().splitlines()[1:]}
    assert eps == {"0.25", "1"}
    assert (tmp_path / "curves.svg").read_text().count("<circle") == 2


def test_curves_default_ladder(tmp_path):
    assert main(["curves", "--system", "example2", "--res", "40x40",
                 "--out", str(tmp_path)]) == EXIT_OK
    eps = {ln.split(",")[0] for ln in (tmp_path / "curves.csv").read_text().splitlines()[1:]}
    assert 1 <= len(eps) <= 6


def test_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        assert main(["curves", "--system", "example1", "--res", "50x50", "--eps", "0.5",
                     "--workers", "2" if d == "b" else "1", "--out", str(tmp_path / d)]) == 0
    for name in ("curves.csv", "curves.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bode_example1(tmp_path):
    assert main(["bode", "--system", "example1", "--omega", "1e-6,10,50",
                 "--out", str(tmp_path)]) == EXIT_OK
    data = np.loadtxt(tmp_path / "bode.csv", delimiter=",", skiprows=1)
    assert data.shape == (50, 2)
    assert data[0, 1] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(data[:, 1], 1 / (1 + data[:, 0] ** 2))


def test_oracle_example1(tmp_path):
    assert main(["oracle", "--system", "example1", "--out", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path / "oracle.txt")
    assert float(r["sup_value"]) == pytest.approx(np.exp(-1), abs=1e-6)
    assert r["converged"] == "true"
    assert (tmp_path / "trace.csv").exists()


def test_state_space_file(tmp_path):
    path = tmp_path / "sys.txt"
    save_system(StateSpaceSystem([[-1.0, 1.0], [0.0, -1.0]], [[0.0], [1.0]], [[1.0, 0.0]]), path)
    assert main(["bounds", "--system", str(path), "--out", str(tmp_path)]) == EXIT_OK
    assert float(report(tmp_path / "bounds.txt")["lower"]) == pytest.approx(0.25, abs=1e-4)


def test_platoon_matches_file(tmp_path):
    spec = PlatoonSpec(400, "directed")
    save_platoon_spec(spec, tmp_path / "p.txt")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["platoon", "--symmetry", "directed", "--n", "400", "bounds", "--a", "3",
                 "--out", str(a)]) == EXIT_OK
    assert main(["bounds", "--system", str(tmp_path / "p.txt"), "--a", "3",
                 "--out", str(b)]) == EXIT_OK
    assert (a / "bounds.txt").read_bytes() == (b / "bounds.txt").read_bytes()
    r = report(a / "bounds.txt")
    assert r["scenario"] == "init" and r["norm"] == "inf"
    assert float(r["lower"]) <= float(r["semicircle_value"])


def test_platoon_bode(tmp_path):
    assert main(["platoon", "--n", "20", "--symmetry", "bidirectional", "bode",
                 "--omega", "1e-3,4,30", "--out", str(tmp_path)]) == EXIT_OK
    data = np.loadtxt(tmp_path / "bode.csv", delimiter=",", skiprows=1)
    assert data.shape == (30, 2) and np.all(data[:, 1] > 0)


def test_exit_missing_file(tmp_path, capsys):
    assert main(["bounds", "--system", str(tmp_path / "nope.txt")]) == EXIT_IO
    assert "I/O" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["bounds", "--system", "example1", "--res", "12"],
    ["bounds", "--system", "example1", "--eps", "-1"],
    ["bounds", "--system", "example1", "--a", "0.5"],
    ["bounds", "--system", "example1", "--norm", "3"],
    ["bounds", "--system", "example1", "--window", "1,0,0,1"],
    ["bounds", "--system", "example1", "--scenario", "sideways"],
    ["bode", "--system", "example1", "--omega", "5,1,10"],
    ["platoon", "--n", "1", "bounds"],
    ["frobnicate"],
])
def test_exit_invalid_config(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv != ["frobnicate"] else argv) == EXIT_CONFIG


def test_exit_bad_system_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1 1\n1 2\n")
    assert main(["bounds", "--system", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_exit_numerical(tmp_path):
    path = tmp_path / "unstable.txt"
    save_system(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]]), path)
    assert main(["bounds", "--system", str(path), "--out", str(tmp_path)]) == EXIT_NUMERICAL
    assert main(["oracle", "--system", str(path), "--out", str(tmp_path)]) == EXIT_NUMERICAL


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "iopseudo", "oracle", "--system", "example1",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert "sup_value=" in out.stdout
