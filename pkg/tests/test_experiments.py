import numpy as np
import pytest

from optofock import cli, config
from optofock import experiments as ex


def desk(**changes):
    data = config.load_example("desk_M3").to_dict()
    data.update(changes)
    return config.from_dict(data)


def test_calibrate_csv(tmp_path):
    rows, path = ex.cmd_calibrate(20, tmp_path)
    assert rows[0]["eta"] == pytest.approx(1.41421, abs=1e-5)
    table = ex.read_csv(path)
    eta = [float(r["eta"]) for r in table]
    d_eta = [float(r["delta_eta"]) for r in table]
    assert all(b < a for a, b in zip(eta, eta[1:]))
    assert all(b < a for a, b in zip(d_eta, d_eta[1:]))
    assert list(table[0]) == ["M", "x_star", "eta", "delta_eta", "detuning_over_omega_m"]
    assert open(path).read().startswith("#")


def test_sweep_rows_and_provenance(tmp_path):
    cfg = desk(sweep={"start": 1e-6, "stop": 1e-2, "count": 5})
    rows, path = ex.cmd_sweep(cfg, tmp_path, threads=2)
    assert [r["ratio"] for r in rows] == pytest.approx(np.logspace(-6, -2, 5))
    assert all(r["status"] == "ok" and r["config_hash"] == cfg.digest() for r in rows)
    F = [r["fidelity"] for r in rows]
    assert all(0 <= f <= 1 for f in F) and all(b <= a for a, b in zip(F, F[1:]))
    text = open(path).read()
    assert f"# config_hash: {cfg.digest()}" in text and "# version: " in text


def test_sweep_is_deterministic_across_thread_counts(tmp_path):
    cfg = desk(sweep={"start": 1e-5, "stop": 1e-3, "count": 4})
    a = ex.read_csv(ex.cmd_sweep(cfg, tmp_path / "a", threads=1)[1])
    b = ex.read_csv(ex.cmd_sweep(cfg, tmp_path / "b", threads=3)[1])
    strip = [{k: v for k, v in r.items() if k != "wall_ms"} for r in a]
    assert strip == [{k: v for k, v in r.items() if k != "wall_ms"} for r in b]


def test_failed_point_is_recorded():
    cfg = desk(truncation={"N_c": 3, "N_m": 8}, solver="full", nbar_m=0.0)
    row = ex.solve_point(cfg, 1e-30, with_I=False)
    assert row["status"] != "ok"


def test_gamma_zero_limit_gives_target():
    row = ex.solve_point(desk(nbar_m=0.3), 1e-12, with_I=False)
    assert row["fidelity"] == pytest.approx(1, abs=1e-5)


def test_effective_and_full_sweeps_agree():
    eff = ex.solve_point(desk(nbar_m=0.3), with_I=False)
    full = ex.solve_point(desk(nbar_m=0.3, solver="full"), with_I=False)
    assert abs(eff["fidelity"] - full["fidelity"]) < 0.03


def test_evolve_consistency(tmp_path):
    cfg = desk(point=1e-3, initial="vacuum")
    rows, rec, _ = ex.cmd_evolve(cfg, tmp_path)
    assert rows[0]["fidelity"] == 0 and rows[0]["purity"] == 1
    steady = ex.solve_point(cfg, with_I=False)
    assert abs(rows[-1]["fidelity"] - steady["fidelity"]) < 1e-3
    assert max(r["trace_drift"] for r in rows) <= 1e-6


def test_evolve_monotone_without_damping(tmp_path):
    rows, _, _ = ex.cmd_evolve(desk(point=1e-14, nbar_m=0.0, initial="fock:1"), tmp_path)
    F = [r["fidelity"] for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(F, F[1:]))


def test_wigner_command(tmp_path):
    grid, dist, info, paths = ex.cmd_wigner(desk(), tmp_path)
    assert np.argmax(dist) == 3
    assert grid.at(0, 0) == pytest.approx(-1 / np.pi, rel=0.1)
    assert grid.integrate() == pytest.approx(1, abs=2e-2)
    assert [p.endswith(s) for p, s in zip(paths, ("_wigner.csv", "_occupancy.csv"))] == [True, True]


def test_audit_pass_and_starved(tmp_path):
    cfg = config.load_example("bad_cavity_M5")
    first, second = ex.cmd_audit(cfg, tmp_path), ex.cmd_audit(cfg)
    assert first.passed and first.lines() == second.lines()
    starved = cfg.with_overrides(["truncation.N_m=7"])
    report = ex.cmd_audit(starved)
    assert not report.passed and report.boundary_population > 1e-3
    assert any("truncation leakage" in n for n in report.notes)


def test_cli_end_to_end(tmp_path, capsys):
    assert cli.main(["calibrate", "--max", "5", "--out", str(tmp_path)]) == 0
    assert cli.main(["sweep", "--config", "desk_M3", "--out", str(tmp_path),
                     "--override", "sweep.count=3"]) == 0
    assert cli.main(["audit", "--config", "desk_M3", "--out", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert cli.main(["sweep", "--config", "desk_M3", "--override", "drive=-1"]) == 2
    assert cli.main(["sweep", "--out", str(tmp_path)]) == 2


def test_cli_threads_from_environment(monkeypatch):
    monkeypatch.setenv("OPTOFOCK_THREADS", "3")
    assert ex.default_threads() == 3
    monkeypatch.setenv("OPTOFOCK_THREADS", "x")
    assert ex.default_threads() == 1
