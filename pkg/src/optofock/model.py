"""Hamiltonians of the driven optomechanical cavity and the effective operators.

All frequencies and rates are in units of the mechanical frequency
``omega_m``. With ``D(xi) = exp(xi b^dag - xi* b)`` and ``xi = eta a^dag a``,
rotating-frame states map to the displaced interaction picture as
``psi_D = exp(i H_0 t) D^dag(xi) psi_R`` and the drive there reads
``Omega a^dag D^dag(eta e^{i omega_m t}) + h.c.``. Its resonant one-phonon
sideband is ``-|1><0| b^dag chi + h.c.``; the overall sign is the gauge
``a -> -a`` and :func:`effective_hamiltonian` drops it.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import fock
from .calibration import CalibrationResult, first_zero, laguerre


class RegimeError(ValueError):
    """Raised when an RWA-based object is requested outside its regime."""


@dataclass(frozen=True)
class SystemParams:
    g: float
    Omega: float
    Delta: float
    kappa: float
    gamma: float = 0.0
    nbar_m: float = 0.0
    nbar_c: float = 0.0
    s: int = 1
    N_c: int = 4
    N_m: int = 20
    omega_m: float = 1.0
    target: int | None = field(default=None, compare=True)

    def __post_init__(self):
        for name in ("g", "Omega", "kappa", "gamma", "nbar_m", "nbar_c", "omega_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.omega_m <= 0:
            raise ValueError("omega_m must be positive")
        if self.s < 0 or int(self.s) != self.s:
            raise ValueError("sideband order s must be a nonnegative integer")
        if self.N_c < 2 or self.N_m < 2:
            raise ValueError("truncations must be >= 2")
        if self.target is not None and not 0 < self.target < self.N_m:
            raise ValueError(f"target {self.target} needs N_m > target (got N_m={self.N_m})")

    @property
    def eta(self):
        return self.g / self.omega_m

    @property
    def dims(self):
        return (self.N_c, self.N_m)

    def replace(self, **changes):
        return replace(self, **changes)

    def check_rwa(self):
        if not self.kappa < self.omega_m:
            raise RegimeError(
                f"resolved-sideband regime needs kappa < omega_m (kappa={self.kappa})"
            )
        if not self.Omega < self.omega_m:
            raise RegimeError(f"weak drive needs Omega < omega_m (Omega={self.Omega})")

    @classmethod
    def for_target(
        cls,
        M,
        *,
        Omega=0.02,
        regime="bad",
        kappa=None,
        gamma=0.0,
        nbar_m=0.0,
        nbar_c=0.0,
        N_c=4,
        N_m=None,
        s=1,
    ):
        """Protocol parameters for target |M>: eta and Delta from calibration.

        ``regime`` picks kappa when it is not given: ``"bad"`` uses
        20 max_n |chi(n)|, ``"good"`` uses the slowest ladder rate.
        ``N_m`` defaults to M + 1, the upper-bound subspace |0>..|M>.
        """
        cal = first_zero(M, s=s)
        N_m = M + 1 if N_m is None else N_m
        base = cls(
            g=cal.eta,
            Omega=Omega,
            Delta=cal.detuning,
            kappa=0.0,
            gamma=gamma,
            nbar_m=nbar_m,
            nbar_c=nbar_c,
            s=s,
            N_c=N_c,
            N_m=N_m,
            target=M,
        )
        if kappa is None:
            if regime == "bad":
                kappa = bad_cavity_kappa(base, cal)
            elif regime == "good":
                kappa = chi_ref(base, cal)
            else:
                raise ValueError(f"unknown regime {regime!r}")
        return base.replace(kappa=float(kappa))


# -- effective operators --------------------------------------------------------


def chi_diagonal(params, eta=None, dim=None):
    """Entries chi(n) = eta Omega exp(-eta^2/2) L_n^(1)(eta^2) / (n + 1)."""
    eta = params.eta if eta is None else eta
    if eta <= 0:
        raise ValueError("eta must be positive")
    dim = params.N_m if dim is None else dim
    pref = eta * params.Omega * np.exp(-(eta**2) / 2)
    return np.array([pref * laguerre(n, 1, eta**2) / (n + 1) for n in range(dim)])


def chi_operator(params, eta=None):
    return np.diag(chi_diagonal(params, eta)).astype(complex)


def ladder_rates(params, cal):
    """|chi(m)| sqrt(m + 1) for the M steps m -> m + 1 below the target."""
    chi = chi_diagonal(params, cal.eta, dim=cal.M + 1)
    return np.abs(chi[: cal.M]) * np.sqrt(np.arange(1, cal.M + 1))


def chi_ref(params, cal):
    """Slowest ladder rate; the scalar that sets kappa_eff and the regime."""
    return float(ladder_rates(params, cal).min())


def bad_cavity_kappa(params, cal, factor=20.0):
    chi = chi_diagonal(params, cal.eta, dim=cal.M)
    return factor * float(np.abs(chi).max())


# -- Hamiltonians -------------------------------------------------------------


def _mode_ops(params):
    nc, nm = params.dims
    a = fock.tensor(fock.annihilation(nc), fock.identity(nm))
    b = fock.tensor(fock.identity(nc), fock.annihilation(nm))
    return a, b


def hamiltonian_rotating(params):
    """-Delta a^dag a + omega_m b^dag b - g a^dag a (b + b^dag) + Omega (a + a^dag)."""
    a, b = _mode_ops(params)
    ad, bd = a.conj().T, b.conj().T
    na = ad @ a
    H = (
        -params.Delta * na
        + params.omega_m * (bd @ b)
        - params.g * na @ (b + bd)
        + params.Omega * (a + ad)
    )
    return fock.auto_storage(H)


def free_hamiltonian_displaced(params):
    """-Delta n_a + omega_m b^dag b - g eta n_a^2, the frame removed from H_D."""
    a, b = _mode_ops(params)
    na = a.conj().T @ a
    return -params.Delta * na + params.omega_m * (b.conj().T @ b) - params.g * params.eta * na @ na


def hamiltonian_displaced(params, t):
    """Time-dependent drive term in the displaced interaction picture (no RWA).

    ``Omega a^dag exp(-i(Delta + g eta (2 n_a + 1)) t) D^dag(eta e^{i omega_m t}) + h.c.``
    with ``n_a`` counting photons before creation. Built fresh at every call;
    intended as a cross-check of the rotating-frame dynamics.
    """
    nc, nm = params.dims
    n = np.arange(nc)
    phase = np.exp(-1j * (params.Delta + params.g * params.eta * (2 * n + 1)) * t)
    ad_ph = fock.creation(nc) @ np.diag(phase)
    D = fock.displacement_elements(-params.eta * np.exp(1j * params.omega_m * t), nm)
    V = params.Omega * np.kron(ad_ph, D)
    return V + V.conj().T


def conditional_displacement(params, inverse=False):
    """Block-diagonal D(xi), xi = eta a^dag a: phonon displacement by n_c eta.

    Each block is the exponential of the truncated generator, so the map is
    exactly unitary on the truncated space and frame changes keep the trace.
    """
    nc, nm = params.dims
    gen = fock.creation(nm) - fock.annihilation(nm)
    out = np.zeros((nc * nm, nc * nm), dtype=complex)
    sign = -1.0 if inverse else 1.0
    for k in range(nc):
        out[k * nm : (k + 1) * nm, k * nm : (k + 1) * nm] = expm(sign * k * params.eta * gen)
    return out


def effective_hamiltonian(params, eta=None):
    """H_eff = |0><1| chi b + |1><0| b^dag chi (single-photon blue sideband, s = 1)."""
    if params.s != 1:
        raise ValueError("only the s = 1 sideband is implemented")
    params.check_rwa()
    nc, nm = params.dims
    chi_b = chi_operator(params, eta) @ fock.annihilation(nm)
    lower = np.zeros((nc, nc), dtype=complex)
    lower[0, 1] = 1.0
    H = np.kron(lower, chi_b)
    return fock.auto_storage(H + H.conj().T)


def b_ladder_operator(params, cal):
    """B = sum_{m<M} chi(m) sqrt(m+1) |m><m+1| on the mechanical space."""
    if not isinstance(cal, CalibrationResult):
        raise TypeError("b_ladder_operator needs the CalibrationResult of the target")
    M = cal.M
    if params.N_m < M + 1:
        raise ValueError(f"N_m = {params.N_m} cannot hold the target |{M}>")
    chi = chi_diagonal(params, cal.eta, dim=M)
    B = np.zeros((params.N_m, params.N_m), dtype=complex)
    for m in range(M):
        B[m, m + 1] = chi[m] * np.sqrt(m + 1)
    return B
