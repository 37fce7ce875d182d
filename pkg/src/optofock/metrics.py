"""State-quality functionals for the mechanical mode.

Phase-space conventions: ``alpha = (q + i p) / sqrt(2)``, so the vacuum has
``W(q, p) = exp(-q^2 - p^2) / pi`` and ``int W dq dp = 1``.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import fock
from ._backend import wigner_parity

DEFAULT_POINTS = 121
BOUNDARY_BAND = 0.5
BOUNDARY_MASS_LIMIT = 1e-3


class GridError(ValueError):
    """The phase-space grid does not cover the state."""


class ConvergenceError(RuntimeError):
    pass


def _square(rho):
    rho = fock.dense(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square density matrix, got shape {rho.shape}")
    return rho


def fidelity_to_fock(rho, M):
    """sqrt(<M|rho|M>)."""
    rho = _square(rho)
    if not 0 <= M < rho.shape[0]:
        raise ValueError(f"target {M} outside the {rho.shape[0]}-level space")
    return float(np.sqrt(max(rho[M, M].real, 0.0)))


def purity(rho):
    rho = _square(rho)
    return float(np.real(np.sum(rho * rho.T)))


def phonon_distribution(rho):
    return np.clip(np.real(np.diag(_square(rho))), 0.0, None)


def mean_occupation(rho):
    p = np.real(np.diag(_square(rho)))
    return float(np.arange(p.size) @ p)


def _psd_sqrt(rho):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def state_fidelity(rho, sigma):
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    rho, sigma = _square(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    return float(min(np.sum(np.sqrt(np.clip(w, 0, None))) ** 2, 1.0))


# -- phase space ----------------------------------------------------------------


@dataclass
class PhaseSpaceGrid:
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    n_q: int
    n_p: int
    values: np.ndarray  # values[i, j] = W(q_i, p_j)

    @property
    def q(self):
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def spacing(self):
        return (self.q_max - self.q_min) / (self.n_q - 1), (self.p_max - self.p_min) / (self.n_p - 1)

    def integrate(self, f=None):
        f = self.values if f is None else f
        return float(np.trapezoid(np.trapezoid(f, self.p, axis=1), self.q))

    def at(self, q, p):
        i = int(np.argmin(np.abs(self.q - q)))
        j = int(np.argmin(np.abs(self.p - p)))
        return float(self.values[i, j])

    def boundary_mass(self, band=BOUNDARY_BAND):
        """Share of int |W| lying within ``band`` of the grid edge."""
        Q, P = np.meshgrid(self.q, self.p, indexing="ij")
        edge = (
            (Q < self.q_min + band) | (Q > self.q_max - band)
            | (P < self.p_min + band) | (P > self.p_max - band)
        )
        total = self.integrate(np.abs(self.values))
        return self.integrate(np.where(edge, np.abs(self.values), 0.0)) / total

    def marginal_q(self):
        return np.trapezoid(self.values, self.p, axis=1)

    def to_csv(self, path, header=None):
        with open(path, "w", newline="") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key}: {value}\n")
            w = csv.writer(fh)
            w.writerow(["q", "p", "W"])
            for i, q in enumerate(self.q):
                for j, p in enumerate(self.p):
                    w.writerow([repr(float(q)), repr(float(p)), repr(float(self.values[i, j]))])


def default_extent(rho):
    return float(np.sqrt(2 * max(mean_occupation(rho), 0.0)) + 3.0)


def wigner(rho, extent=None, n_q=DEFAULT_POINTS, n_p=None, *, check_boundary=True):
    """W(q, p) on a square grid by the displaced-parity formula.

    ``W(alpha) = (1/pi) sum_k (-1)^k <k|D^dag(alpha) rho D(alpha)|k>``, evaluated
    through ``D(alpha) Pi D^dag(alpha) = D(2 alpha) Pi`` with analytic matrix
    elements. Raises :class:`GridError` when more than 1e-3 of the
    quasi-probability mass sits in the outer band of the grid.
    """
    rho = _square(rho)
    extent = default_extent(rho) if extent is None else float(extent)
    if extent <= 0:
        raise ValueError("grid extent must be positive")
    n_p = n_q if n_p is None else n_p
    q = np.linspace(-extent, extent, n_q)
    p = np.linspace(-extent, extent, n_p)
    Q, P = np.meshgrid(q, p, indexing="ij")
    alphas = (Q + 1j * P) / np.sqrt(2)
    W = np.asarray(wigner_parity(rho, alphas.ravel())).reshape(n_q, n_p)
    grid = PhaseSpaceGrid(-extent, extent, -extent, extent, n_q, n_p, W)
    if check_boundary:
        mass = grid.boundary_mass()
        if mass > BOUNDARY_MASS_LIMIT:
            raise GridError(f"boundary mass {mass:.2e} > {BOUNDARY_MASS_LIMIT}; enlarge the grid")
    return grid


def _second_difference(f, h, axis):
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = f[2:] - 2 * f[1:-1] + f[:-2]
    out[0] = f[0] - 2 * f[1] + f[2]
    out[-1] = f[-1] - 2 * f[-2] + f[-3]
    return np.moveaxis(out / h**2, 0, axis)


def laplacian(grid):
    hq, hp = grid.spacing
    return _second_difference(grid.values, hq, 0) + _second_difference(grid.values, hp, 1)


def _I_on_grid(grid):
    W = grid.values
    return -0.5 * np.pi * grid.integrate(W * (laplacian(grid) + 2.0 * W))


@dataclass(frozen=True)
class NonclassicalityResult:
    value: float
    n_points: int
    previous: float


def nonclassicality_I(
    rho, extent=None, n_q=DEFAULT_POINTS, *, rel_tol=0.01, max_refinements=3, details=False
):
    """Phase-space nonclassicality -(pi/2) int W (laplacian + 2) W dq dp.

    The value is 0 for coherent states and n for the Fock state |n>. The grid
    spacing is halved until two successive values differ by less than
    ``rel_tol`` (relative to max(|I|, 1)).
    """
    rho = _square(rho)
    extent = default_extent(rho) if extent is None else float(extent)
    n = n_q
    prev = _I_on_grid(wigner(rho, extent, n))
    for _ in range(max_refinements):
        n = 2 * n - 1
        cur = _I_on_grid(wigner(rho, extent, n))
        if abs(cur - prev) < rel_tol * max(abs(cur), 1.0):
            return NonclassicalityResult(cur, n, prev) if details else cur
        prev = cur
    raise ConvergenceError(
        f"I did not settle after {max_refinements} refinements (last two: {prev:.4f})"
    )
