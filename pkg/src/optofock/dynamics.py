"""Lindblad master equations: assembly, time evolution and steady states.

Dissipators follow D[O]rho = 2 O rho O^dag - rho O^dag O - O^dag O rho and a
channel ``(rate, O)`` contributes ``(rate / 2) D[O]``. Superoperators act on
column-stacked density matrices, ``vec(A X B) = (B^T kron A) vec(X)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fock
from ._backend import dopri5
from .metrics import state_fidelity
from .model import (
    b_ladder_operator,
    chi_ref,
    conditional_displacement,
    effective_hamiltonian,
    hamiltonian_rotating,
)

log = logging.getLogger(__name__)

FRAMES = ("interaction", "rotating")


class EvolutionError(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    pass


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    dim = int(round(np.sqrt(v.size))) if dim is None else dim
    return np.asarray(v).reshape(dim, dim, order="F")


def dissipator(O, rho):
    O, rho = fock.dense(O), fock.dense(rho)
    Od = O.conj().T
    OdO = Od @ O
    return 2 * O @ rho @ Od - rho @ OdO - OdO @ rho


@dataclass(frozen=True)
class Liouvillian:
    matrix: sp.csr_matrix
    dim: int
    dims: tuple | None = None
    frame: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho), self.dim)

    def trace_preservation_error(self):
        left = vec(np.eye(self.dim)).conj() @ self.matrix
        return float(np.abs(left).max())


def lindblad(H, channels, dims=None, frame=None, **meta):
    """Assemble -i[H, .] + sum (rate/2) D[O] as a sparse superoperator."""
    H = sp.csr_matrix(H)
    d = H.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
    for rate, O in channels:
        if rate == 0:
            continue
        if rate < 0:
            raise ValueError("dissipation rates must be nonnegative")
        O = sp.csr_matrix(O)
        OdO = (O.conj().T @ O).tocsr()
        L = L + rate * (
            sp.kron(O.conj(), O) - 0.5 * sp.kron(eye, OdO) - 0.5 * sp.kron(OdO.T, eye)
        )
    L = L.tocsr()
    L.eliminate_zeros()
    return Liouvillian(L, d, dims, frame, meta)


def full_liouvillian(params, frame="interaction"):
    """Two-mode master equation with cavity loss and thermal mechanical damping.

    ``frame="interaction"`` uses the resonant sideband Hamiltonian of the
    displaced interaction picture, where the dissipators act on the polaron
    modes. ``frame="rotating"`` uses the rotating-frame Hamiltonian with the
    bare lab-frame jump operators.
    """
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    nc, nm = params.dims
    a = fock.tensor(fock.annihilation(nc), fock.identity(nm))
    b = fock.tensor(fock.identity(nc), fock.annihilation(nm))
    H = effective_hamiltonian(params) if frame == "interaction" else hamiltonian_rotating(params)
    g, nb = params.gamma, params.nbar_m
    channels = [
        (params.kappa, a),
        (g * (1 + nb), b),
        (g * nb, b.conj().T),
        (params.kappa * params.nbar_c, a.conj().T),
    ]
    return lindblad(H, channels, dims=params.dims, frame=frame)


def kappa_eff(params, cal):
    """Effective pumping rate 4 chi_ref^2 / kappa after eliminating the cavity."""
    if params.kappa <= 0:
        raise ValueError("kappa_eff needs kappa > 0")
    return 4.0 * chi_ref(params, cal) ** 2 / params.kappa


def effective_liouvillian(params, cal):
    """Phonon-only master equation with the ladder pump B^dag.

    The pump channel is ``(kappa_eff / 2) D[B^dag / chi_ref]`` so that each
    step m -> m + 1 proceeds at ``4 chi(m)^2 (m + 1) / kappa``.
    """
    nm = params.N_m
    B = b_ladder_operator(params, cal)
    b = fock.annihilation(nm)
    ref = chi_ref(params, cal)
    g, nb = params.gamma, params.nbar_m
    channels = [
        (kappa_eff(params, cal), B.conj().T / ref),
        (g * (1 + nb), b),
        (g * nb, b.conj().T),
    ]
    return lindblad(np.zeros((nm, nm)), channels, dims=None, frame="effective")


# -- time evolution -------------------------------------------------------------


@dataclass
class EvolutionRecord:
    times: np.ndarray
    states: np.ndarray
    final_state: np.ndarray
    converged: bool
    residual: float
    trace_drift: float
    min_eigenvalue: float
    drifts: np.ndarray | None = None
    n_steps: int = 0
    n_rejected: int = 0


def residual_norm(L, rho):
    v = vec(rho)
    return float(np.abs(L.matrix @ v).sum() / max(np.abs(v).sum(), 1e-300))


def evolve(
    L,
    rho0,
    t_final=None,
    *,
    times=None,
    n_samples=101,
    rtol=1e-8,
    atol=1e-10,
    max_steps=20_000_000,
    converge_tol=1e-8,
    check=True,
):
    """Integrate d vec(rho)/dt = L vec(rho) with adaptive Dormand-Prince 5(4).

    Output states land exactly on ``times`` (default: ``n_samples`` points on
    ``[0, t_final]``). Trace drift above 1e-6 or eigenvalues below -1e-6 at any
    stored time raise :class:`EvolutionError`; smaller drift is renormalized.
    """
    if times is None:
        if t_final is None:
            raise ValueError("give t_final or times")
        times = np.linspace(0.0, float(t_final), n_samples)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a nondecreasing 1-D grid")
    rho0 = fock.dense(rho0)
    fock.check_density(rho0, tol_trace=1e-8, tol_eig=1e-8, tol_herm=1e-10)
    Y, n_steps, n_rej, status = dopri5(L.matrix, vec(rho0).astype(complex), times, rtol, atol,
                                       max_steps, 0.0)
    if status == 1:
        raise EvolutionError("step size collapsed")
    if status == 2:
        raise EvolutionError(f"step budget of {max_steps} exhausted before t={times[-1]:g}")
    d = L.dim
    states = np.array([unvec(y, d) for y in Y])
    drifts = np.zeros(len(times))
    min_eig = np.inf
    for i, rho in enumerate(states):
        tr = np.trace(rho).real
        drifts[i] = abs(tr - 1.0)
        rho = (rho + rho.conj().T) / 2
        if check and abs(tr - 1.0) > 1e-6:
            raise EvolutionError(f"trace drift {abs(tr - 1.0):.2e} at t={times[i]:g}")
        states[i] = rho / tr
        ev = np.linalg.eigvalsh(states[i]).min()
        min_eig = min(min_eig, ev)
        if check and ev < -1e-6:
            raise EvolutionError(f"positivity violated (min eig {ev:.2e}) at t={times[i]:g}")
    final = states[-1]
    res = residual_norm(L, final)
    return EvolutionRecord(
        times=times,
        states=states,
        final_state=final,
        converged=res < converge_tol,
        residual=res,
        trace_drift=float(drifts.max()),
        min_eigenvalue=float(min_eig),
        drifts=drifts,
        n_steps=int(n_steps),
        n_rejected=int(n_rej),
    )


# -- steady state ---------------------------------------------------------------


@dataclass
class SteadyStateInfo:
    state: np.ndarray
    residual: float
    gap: float
    null_dim: int
    cross_check: str
    cross_fidelity: float
    min_eigenvalue: float


def slow_spectrum(L, k=6):
    """Eigenvalues of L closest to zero, sorted by modulus."""
    n = L.matrix.shape[0]
    if n <= 900:
        ev = sla.eigvals(L.matrix.toarray())
    else:
        scale = float(abs(L.matrix).sum(axis=1).max())
        sigma = 1e-9 * scale
        ev = spla.eigs(L.matrix.tocsc(), k=min(k, n - 2), sigma=sigma, which="LM",
                       return_eigenvectors=False, tol=1e-12, maxiter=20000)
    return ev[np.argsort(np.abs(ev))]


def _null_tol(L):
    return 1e-9 * max(float(abs(L.matrix).sum(axis=1).max()), 1e-300)


def spectral_gap(L):
    """(gap, null dimension): the slowest nonzero relaxation rate |Re lambda|."""
    ev = slow_spectrum(L)
    tol = _null_tol(L)
    null = np.abs(ev) <= tol
    rest = ev[~null]
    gap = float(np.abs(rest.real).min()) if rest.size else 0.0
    return gap, int(null.sum())


def _solve_trace_constrained(L):
    d = L.dim
    A = L.matrix.tolil(copy=True)
    A[0, :] = vec(np.eye(d)).reshape(1, -1)
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise SteadyStateError(f"trace-constrained system is singular: {exc}") from exc
    rho = unvec(lu.solve(rhs), d)
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def steady_state(L, *, cross_check=True, return_info=False, max_steps=2_000_000):
    """Null vector of L by sparse LU with one row replaced by the trace condition.

    The result is Hermitized and normalized. With ``cross_check`` the zero
    eigenvalue is checked for degeneracy and the state is compared against a
    long evolution from the maximally mixed state (to 20 relaxation times).
    If that evolution would exceed ``max_steps`` the comparison falls back to
    the shift-invert null eigenvector.
    """
    gap, null_dim, method, xfid = np.nan, 1, "none", np.nan
    if cross_check:
        gap, null_dim = spectral_gap(L)
        if null_dim != 1 or gap == 0.0:
            raise SteadyStateError(f"degenerate steady state: null space dimension {null_dim}")
    rho = _solve_trace_constrained(L)
    res = residual_norm(L, rho)
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < -1e-6:
        raise SteadyStateError(f"steady state not positive (min eig {min_eig:.2e})")
    if cross_check:
        try:
            rec = evolve(L, fock.maximally_mixed(L.dim), times=np.array([0.0, 20.0 / gap]),
                         max_steps=max_steps)
            other, method = rec.final_state, "evolve"
        except EvolutionError as exc:
            log.info("evolve cross-check unavailable (%s); using null eigenvector", exc)
            other, method = _null_eigenvector(L), "eigs"
        xfid = state_fidelity(rho, other)
        if xfid < 0.999:
            raise SteadyStateError(
                f"LU steady state and {method} cross-check disagree (fidelity {xfid:.5f}); "
                "the zero eigenvalue is probably degenerate"
            )
    info = SteadyStateInfo(rho, res, gap, null_dim, method, xfid, min_eig)
    return info if return_info else rho


def _null_eigenvector(L):
    n = L.matrix.shape[0]
    if n <= 900:
        w, v = sla.eig(L.matrix.toarray())
        x = v[:, np.argmin(np.abs(w))]
    else:
        scale = float(abs(L.matrix).sum(axis=1).max())
        _, v = spla.eigs(L.matrix.tocsc(), k=1, sigma=1e-9 * scale, which="LM", tol=1e-12)
        x = v[:, 0]
    rho = unvec(x, L.dim)
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2


# -- frames ---------------------------------------------------------------------


def displaced_frame_reduce(rho_full, params):
    """Undo the photon-conditioned displacement, then trace out the cavity."""
    U = conditional_displacement(params, inverse=True)
    rho = U @ fock.dense(rho_full) @ U.conj().T
    return fock.partial_trace(rho, params.dims, "mechanical")


def mechanical_state(rho_full, params, frame):
    if frame == "rotating":
        return displaced_frame_reduce(rho_full, params)
    return fock.partial_trace(rho_full, params.dims, "mechanical")
