import subprocess
import sys

import numpy as np
import pytest

from drgopt import cli
from drgopt.errors import EvaluationError
from drgopt.imaging import NoiseSpec, load_phase, load_spd, save_phase, synth_phase, synth_spd
from drgopt.verify import Check


def report(out):
    rows = (out / "report.txt").read_text().splitlines()
    return dict(r.split(": ", 1) for r in rows)


def manifest(out):
    rows = (out / "manifest.txt").read_text().splitlines()
    return dict(r.split(" = ", 1) for r in rows)


def test_rayleigh_matches_eigensolver(tmp_path):
    assert cli.main(["rayleigh", "--m", "3", "--seed", "1", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    A = np.random.default_rng(1).standard_normal((3, 3))
    lam = np.linalg.eigvalsh((A + A.T) / 2)[0]
    assert abs(float(rep["final_V"]) - lam) <= 1e-8
    assert (tmp_path / "log.csv").read_text().startswith("k,tau,V,dV,dgnorm2,wall_ms")


def test_rayleigh_stationary_start(tmp_path):
    mat = tmp_path / "a.txt"
    np.savetxt(mat, np.diag([1.0, 2.0, 3.0]))
    out = tmp_path / "run"
    assert cli.main(["rayleigh", "--matrix", str(mat), "--init", "e1", "--out", str(out)]) == 0
    assert report(out)["converged_iteration"] == "0"


def test_rayleigh_tol_recorded(tmp_path):
    cli.main(["rayleigh", "--m", "4", "--tol", "1e-12", "--out", str(tmp_path)])
    man = manifest(tmp_path)
    assert man["stop_reason"] == "rel_tol"
    assert man["tol"] == "1e-12"


def test_brockett_2x2_closed_form(tmp_path):
    assert cli.main(["brockett", "--m", "2", "--tau", "1", "--iters", "300",
                     "--out", str(tmp_path)]) == 0
    rng = np.random.default_rng(0)
    G = rng.standard_normal((2, 2))
    a, b, c = G[0, 0], 0.5 * (G[0, 1] + G[1, 0]), G[1, 1]
    root = np.hypot(0.5 * (a - c), b)
    expected = np.array([0.5 * (a + c) + root, 0.5 * (a + c) - root])
    rows = (tmp_path / "diag.csv").read_text().splitlines()
    assert rows[0] == "k,opt_error,d1,d2"
    final = np.array([float(x) for x in rows[-1].split(",")[2:]])
    assert np.allclose(final, expected, atol=1e-10)


def test_brockett_retractions_agree(tmp_path):
    values = []
    for mode in ("cayley", "exp"):
        out = tmp_path / mode
        cli.main(["brockett", "--m", "4", "--retraction", mode, "--tau", "0.5", "--iters", "400",
                  "--out", str(out)])
        values.append(float(report(out)["final_V"]))
    assert abs(values[0] - values[1]) <= 1e-6


def test_insar_without_coupling_returns_input(tmp_path):
    _, noisy = synth_phase((6, 6), "ramp", NoiseSpec(sigma=0.5, seed=3))
    src = tmp_path / "in.pphase"
    save_phase(src, noisy)
    out = tmp_path / "run"
    assert cli.main(["insar", "--input", str(src), "--lambda", "0", "--iters", "3",
                     "--vstar-iters", "3", "--out", str(out)]) == 0
    assert np.allclose(load_phase(out / "result.pphase"), noisy, atol=1e-12)


def test_insar_synthetic(tmp_path):
    assert cli.main(["insar", "--synthetic", "8", "8", "0.5", "1", "--iters", "20",
                     "--vstar-iters", "40", "--parallel", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    assert rep["monotone"] == "True"
    assert rep["dissipation_audit"] == "pass"
    assert len((tmp_path / "log.csv").read_text().splitlines()) == 21


def test_dti_without_coupling_returns_input(tmp_path):
    _, noisy = synth_spd((3, 3), noise=NoiseSpec("tangent-gaussian", 0.05, 1))
    out = tmp_path / "run"
    assert cli.main(["dti", "--synthetic", "3", "3", "0.05", "1", "--lambda", "0",
                     "--out", str(out)]) == 0
    assert np.allclose(load_spd(out / "result.pspd3"), noisy, atol=1e-12)


def test_dti_compare(tmp_path):
    assert cli.main(["dti", "--synthetic", "6", "6", "0.05", "3", "--compare", "--parallel",
                     "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    its = {k: int(v.split()[0]) for k, v in rep.items() if k.startswith("compare_")}
    assert its["compare_mixed"] <= min(its["compare_constant-0.05"], its["compare_constant-0.01"])
    assert rep["all_spd"] == "True"


def test_verify_vacuous(capsys):
    assert cli.main(["verify", "--trials", "0"]) == 0


def test_verify_geometry():
    assert cli.main(["verify", "--suite", "geometry", "--trials", "2"]) == 0


def test_verify_failures_set_exit_code(monkeypatch):
    fails = [Check("a", False), Check("b", True), Check("c", False)]
    monkeypatch.setattr(cli, "run_suites", lambda *a: fails)
    assert cli.main(["verify"]) == 4
    monkeypatch.setattr(cli, "run_suites", lambda *a: [Check("x", False)] * 500)
    assert cli.main(["verify"]) == 2 + cli.MAX_FAILED


@pytest.mark.parametrize("argv", [
    ["rayleigh", "--m", "1", "--out", "{o}"],
    ["rayleigh", "--tau", "-1", "--out", "{o}"],
    ["rayleigh", "--matrix", "{o}/missing.txt", "--out", "{o}"],
    ["insar", "--synthetic", "4", "4", "0.1", "1", "--schedule", "linear:3", "--out", "{o}"],
    ["insar", "--synthetic", "4", "4", "0.1", "1", "--lambda", "-1", "--out", "{o}"],
    ["insar", "--input", "{o}/missing.pphase", "--out", "{o}"],
    ["dti", "--synthetic", "4", "x", "0.1", "1", "--out", "{o}"],
    ["brockett", "--retraction", "qr", "--out", "{o}"],
    ["nonsense"],
])
def test_config_errors_exit_1(argv, tmp_path):
    argv = [a.replace("{o}", str(tmp_path)) for a in argv]
    with pytest.raises(SystemExit) as info:
        sys.exit(cli.main(argv))
    assert info.value.code == 1


def test_bad_input_file_exit_1(tmp_path):
    src = tmp_path / "bad.pphase"
    src.write_text("P_PHASE 1 2\n0 4.0\n")
    assert cli.main(["insar", "--input", str(src), "--out", str(tmp_path / "o")]) == 1


def test_runtime_error_exit_2(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise EvaluationError("non-finite energy difference")

    monkeypatch.setattr(cli.ex, "rayleigh_experiment", boom)
    assert cli.main(["rayleigh", "--out", str(tmp_path)]) == 2


def test_logs_are_byte_identical(tmp_path):
    logs = []
    for name in ("a", "b"):
        out = tmp_path / name
        cli.main(["insar", "--synthetic", "6", "6", "0.5", "2", "--iters", "5", "--vstar-iters", "5",
                  "--out", str(out)])
        logs.append((out / "log.csv").read_bytes())
    assert logs[0] == logs[1]
    assert (tmp_path / "a" / "manifest.txt").read_text().replace("/a", "/b") == \
        (tmp_path / "b" / "manifest.txt").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "drgopt", "rayleigh", "--m", "3",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "lambda_min" in proc.stdout
