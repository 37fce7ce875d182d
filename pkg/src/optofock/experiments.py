"""Experiment pipelines: calibration table, parameter sweeps, transients,
phase-space grids and truncation audits. Every command writes plain CSV with
a ``# key: value`` provenance header."""

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__, fock
from . import dynamics as dyn
from . import metrics as mt
from ._backend import BACKEND
from .calibration import calibration_table, first_zero
from .config import parse_initial
from .model import SystemParams, chi_ref

SWEEP_COLUMNS = ("ratio", "fidelity", "purity", "I", "n_mean", "residual", "wall_ms", "status",
                 "config_hash")
CONVERGED_RESIDUAL = 1e-8
AUDIT_LIMIT = 1e-3


@dataclass(frozen=True)
class Point:
    params: SystemParams
    cal: object
    ratio: float
    kappa_eff: float


def build_point(cfg, ratio=None):
    """System parameters for one value of the configured sweep axis."""
    ratio = cfg.point if ratio is None else float(ratio)
    M = cfg.target
    cal = first_zero(M, s=cfg.sideband)
    N_m = cfg.truncation.N_m or M + 1
    regime = cfg.regime
    common = dict(Omega=cfg.drive, nbar_m=cfg.nbar_m, nbar_c=cfg.nbar_c,
                  N_c=cfg.truncation.N_c, N_m=N_m, s=cfg.sideband)
    if regime.mode in ("bad", "good"):
        params = SystemParams.for_target(M, regime=regime.mode, **common)
    elif regime.kappa is not None:
        params = SystemParams.for_target(M, kappa=regime.kappa, **common)
    else:
        probe = SystemParams.for_target(M, kappa=1.0, **common)
        params = probe.replace(kappa=regime.chi_ref_multiple * chi_ref(probe, cal))
    k_eff = dyn.kappa_eff(params, cal)
    scale = k_eff if cfg.sweep.axis == "gamma_over_kappa_eff" else params.kappa
    return Point(params.replace(gamma=ratio * scale), cal, ratio, k_eff)


def liouvillian(cfg, point):
    if cfg.solver_name == "effective":
        return dyn.effective_liouvillian(point.params, point.cal)
    return dyn.full_liouvillian(point.params, frame="interaction")


def mechanical_initial(cfg, dim):
    kind, arg = parse_initial(cfg.initial)
    if kind == "thermal":
        return fock.thermal_dm(cfg.nbar_m, dim)
    if kind == "vacuum":
        return fock.fock_dm(0, dim)
    if kind == "fock":
        return fock.fock_dm(arg, dim)
    # projected onto the retained levels and renormalized
    return fock.coherent_dm(arg, dim)


def initial_state(cfg, point):
    mech = mechanical_initial(cfg, point.params.N_m)
    if cfg.solver_name == "effective":
        return mech
    return np.kron(fock.fock_dm(0, point.params.N_c), mech)


def reduce(cfg, point, rho):
    if cfg.solver_name == "effective":
        return rho
    return dyn.mechanical_state(rho, point.params, "interaction")


def state_metrics(rho_m, M, *, with_I=True, extent=None, points=mt.DEFAULT_POINTS):
    out = {
        "fidelity": mt.fidelity_to_fock(rho_m, M),
        "purity": mt.purity(rho_m),
        "n_mean": mt.mean_occupation(rho_m),
    }
    if with_I:
        out["I"] = mt.nonclassicality_I(rho_m, extent, points)
    return out


def solve_point(cfg, ratio=None, *, with_I=True):
    """Steady state of one sweep point as a CSV-ready row.

    Solver failures are caught and reported in the ``status`` column.
    """
    start = time.perf_counter()
    row = {"ratio": float(cfg.point if ratio is None else ratio), "fidelity": np.nan,
           "purity": np.nan, "I": np.nan, "n_mean": np.nan, "residual": np.nan,
           "status": "ok", "config_hash": cfg.digest()}
    try:
        point = build_point(cfg, ratio)
        info = dyn.steady_state(liouvillian(cfg, point), return_info=True)
        rho_m = reduce(cfg, point, info.state)
        row["residual"] = info.residual
        row.update(state_metrics(rho_m, cfg.target, with_I=False))
        if with_I:
            row["I"] = mt.nonclassicality_I(rho_m, cfg.wigner.extent, cfg.wigner.points)
        if info.residual >= CONVERGED_RESIDUAL:
            row["status"] = f"residual {info.residual:.2e} above {CONVERGED_RESIDUAL:g}"
    except (dyn.SteadyStateError, dyn.EvolutionError, mt.ConvergenceError, mt.GridError,
            ValueError) as exc:
        row["status"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    row["wall_ms"] = round(1e3 * (time.perf_counter() - start), 1)
    return row


def default_threads():
    try:
        return max(1, int(os.environ.get("OPTOFOCK_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(cfg, threads=None, *, with_I=True):
    """All sweep points, in axis order regardless of completion order."""
    ratios = cfg.sweep.values()
    threads = threads or default_threads()
    if threads == 1:
        return [solve_point(cfg, r, with_I=with_I) for r in ratios]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: solve_point(cfg, r, with_I=with_I), ratios))


# -- output ---------------------------------------------------------------------


def provenance(cfg=None, command=""):
    head = {"command": command, "version": __version__, "backend": BACKEND}
    if cfg is not None:
        head.update(config=cfg.name, config_hash=cfg.digest(), target=cfg.target,
                    solver=cfg.solver_name, axis=cfg.sweep.axis)
    return head


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows, header):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}: {value}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- commands -------------------------------------------------------------------


def cmd_calibrate(M_max, out_dir):
    rows = [
        {"M": c.M, "x_star": c.x_star, "eta": c.eta, "delta_eta": c.delta_eta,
         "detuning_over_omega_m": c.detuning}
        for c in calibration_table(M_max)
    ]
    cols = ("M", "x_star", "eta", "delta_eta", "detuning_over_omega_m")
    path = write_csv(os.path.join(out_dir, "calibration.csv"), cols, rows,
                     provenance(command="calibrate") | {"M_max": M_max})
    return rows, path


def cmd_sweep(cfg, out_dir, threads=None):
    rows = run_sweep(cfg, threads)
    path = write_csv(os.path.join(out_dir, f"{cfg.name}_sweep.csv"), SWEEP_COLUMNS, rows,
                     provenance(cfg, "sweep"))
    return rows, path


def relaxation_horizon(L):
    gap, _ = dyn.spectral_gap(L)
    return 20.0 / gap


def cmd_evolve(cfg, out_dir):
    point = build_point(cfg)
    L = liouvillian(cfg, point)
    t_final = cfg.integrator.t_final or relaxation_horizon(L)
    rec = dyn.evolve(L, initial_state(cfg, point), t_final, n_samples=cfg.integrator.samples,
                     rtol=cfg.integrator.rtol, atol=cfg.integrator.atol)
    rows = []
    for t, rho, drift in zip(rec.times, rec.states, rec.drifts):
        m = state_metrics(reduce(cfg, point, rho), cfg.target, with_I=False)
        rows.append({"t": t, **m, "trace_drift": drift})
    cols = ("t", "fidelity", "purity", "n_mean", "trace_drift")
    head = provenance(cfg, "evolve") | {"ratio": cfg.point, "residual": rec.residual,
                                        "converged": rec.converged}
    path = write_csv(os.path.join(out_dir, f"{cfg.name}_evolve.csv"), cols, rows, head)
    return rows, rec, path


def cmd_wigner(cfg, out_dir):
    point = build_point(cfg)
    info = dyn.steady_state(liouvillian(cfg, point), return_info=True)
    rho_m = reduce(cfg, point, info.state)
    grid = mt.wigner(rho_m, cfg.wigner.extent, cfg.wigner.points)
    head = provenance(cfg, "wigner") | {"ratio": cfg.point, "residual": info.residual}
    os.makedirs(out_dir, exist_ok=True)
    grid_path = os.path.join(out_dir, f"{cfg.name}_wigner.csv")
    grid.to_csv(grid_path, head)
    dist = mt.phonon_distribution(rho_m)
    occ_path = write_csv(os.path.join(out_dir, f"{cfg.name}_occupancy.csv"), ("n", "p_n"),
                         [{"n": n, "p_n": p} for n, p in enumerate(dist)], head)
    return grid, dist, info, (grid_path, occ_path)


@dataclass
class AuditReport:
    baseline: dict
    variants: dict
    drift: float
    boundary_population: float
    passed: bool
    notes: list

    def lines(self):
        out = [f"baseline: {_metric_text(self.baseline)}"]
        for name, m in self.variants.items():
            out.append(f"{name}: {_metric_text(m)}")
        out += [f"max drift: {self.drift:.3e}",
                f"boundary population: {self.boundary_population:.3e}"]
        out += [f"note: {n}" for n in self.notes]
        out.append("PASS" if self.passed else "FAIL")
        return out


def _metric_text(m):
    return ", ".join(f"{k}={v:.6f}" for k, v in m.items())


def _steady_metrics(cfg, point):
    info = dyn.steady_state(liouvillian(cfg, point), return_info=True)
    rho_m = reduce(cfg, point, info.state)
    return state_metrics(rho_m, cfg.target, with_I=False), rho_m


def cmd_audit(cfg, out_dir=None):
    """Rerun the configured point at enlarged truncations and tighter tolerance.

    PASS iff every metric moves by less than 1e-3. Without an explicit
    ``truncation.N_m`` the mechanical space is the |0>..|M> block by
    construction and only the other checks apply.
    """
    point = build_point(cfg)
    base, rho_m = _steady_metrics(cfg, point)
    variants, notes = {}, []
    if cfg.truncation.N_m is not None:
        bigger = replace(cfg, truncation=replace(cfg.truncation, N_m=cfg.truncation.N_m + 5))
        variants["N_m+5"] = _steady_metrics(bigger, build_point(bigger))[0]
    else:
        notes.append("mechanical space is the |0>..|M> block; N_m padding not applicable")
    if cfg.solver_name == "full":
        wider = replace(cfg, truncation=replace(cfg.truncation, N_c=cfg.truncation.N_c + 1))
        variants["N_c+1"] = _steady_metrics(wider, build_point(wider))[0]
    L = liouvillian(cfg, point)
    rec = dyn.evolve(L, initial_state(cfg, point), times=[0.0, relaxation_horizon(L)],
                     rtol=cfg.integrator.rtol / 100, atol=cfg.integrator.atol / 100,
                     max_steps=5_000_000)
    variants["tight tolerance evolve"] = state_metrics(reduce(cfg, point, rec.final_state),
                                                       cfg.target, with_I=False)
    drift = max(abs(m[k] - base[k]) for m in variants.values() for k in base)
    boundary = float(np.real(rho_m[-1, -1])) if cfg.truncation.N_m is not None else 0.0
    passed = drift < AUDIT_LIMIT
    if not passed and cfg.truncation.N_m is not None:
        notes.append(f"population {boundary:.3e} in the top mechanical level "
                     f"|{cfg.truncation.N_m - 1}>: truncation leakage")
    report = AuditReport(base, variants, float(drift), boundary, passed, notes)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{cfg.name}_audit.txt"), "w") as fh:
            for key, value in provenance(cfg, "audit").items():
                fh.write(f"# {key}: {value}\n")
            fh.write("\n".join(report.lines()) + "\n")
    return report
