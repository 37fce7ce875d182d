"""Truncated bosonic Fock-space algebra for one optical and one mechanical mode.

Operators are plain numpy arrays (or scipy CSR matrices for the banded
Hamiltonians, see :func:`auto_storage`). Two-mode objects always use the
ordering ``optical (x) mechanical``: the optical index is the slow one, so the
composite basis index of ``|n_c, n_m>`` is ``n_c * N_m + n_m``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._backend import displacement_block

OPTICAL = 0
MECHANICAL = 1

SPARSE_DENSITY = 0.10


class TruncationError(ValueError):
    """Raised when a requested object is not trustworthy at the given cutoff."""


class InvalidStateError(ValueError):
    """Raised when a matrix fails the density-matrix checks."""


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise ValueError(f"Fock truncation must be an integer >= 2, got {dim!r}")
    return int(dim)


def dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def auto_storage(op):
    """Return ``op`` as CSR when fewer than 10% of its entries are nonzero."""
    if sp.issparse(op):
        nnz, size = op.count_nonzero(), op.shape[0] * op.shape[1]
        return op.tocsr() if nnz < SPARSE_DENSITY * size else op.toarray()
    op = np.asarray(op)
    if np.count_nonzero(op) < SPARSE_DENSITY * op.size:
        return sp.csr_matrix(op)
    return op


def annihilation(dim):
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim):
    return annihilation(dim).conj().T


def number(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def identity(dim):
    return np.eye(_check_dim(dim), dtype=complex)


def displacement(alpha, dim):
    """Displacement operator D(alpha) = exp(alpha b^dag - alpha* b) on ``dim`` levels.

    Elements come from the closed form
    ``<m|D|n> = sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)``
    (m >= n, and its mirror for m < n), so each entry equals the matrix element
    of the untruncated operator.
    """
    dim = _check_dim(dim)
    if abs(alpha) ** 2 > dim / 4:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds dim/4 = {dim / 4:.3g}; "
            "the truncated displacement is far from unitary"
        )
    return displacement_elements(alpha, dim)


def displacement_elements(alpha, dim, ncols=None):
    """Analytic D(alpha) matrix elements without the truncation guard."""
    return displacement_block(complex(alpha), int(dim), int(dim if ncols is None else ncols))


def tensor(A, B):
    if sp.issparse(A) or sp.issparse(B):
        return sp.kron(A, B, format="csr")
    return np.kron(A, B)


def partial_trace(rho, dims, keep):
    """Reduce a two-mode density matrix to one mode.

    ``dims`` is ``(N_c, N_m)``; ``keep`` is ``"optical"``/``0`` or
    ``"mechanical"``/``1``.
    """
    if dims is None or len(dims) != 2:
        raise ValueError("partial_trace needs a two-mode state with dims=(N_c, N_m)")
    keep = {"optical": OPTICAL, "mechanical": MECHANICAL}.get(keep, keep)
    if keep not in (OPTICAL, MECHANICAL):
        raise ValueError(f"unknown mode selector {keep!r}")
    nc, nm = dims
    rho = dense(rho)
    if rho.shape != (nc * nm, nc * nm):
        raise ValueError(f"state of shape {rho.shape} does not match dims {dims}")
    r = rho.reshape(nc, nm, nc, nm)
    if keep == MECHANICAL:
        return np.einsum("kikj->ij", r)
    return np.einsum("ikjk->ij", r)


def expectation(rho, op):
    rho, op = dense(rho), dense(op)
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape} vs operator {op.shape}")
    return complex(np.sum(rho * op.T))


# -- states -------------------------------------------------------------------


def fock_dm(n, dim):
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside 0..{dim - 1}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def thermal_dm(nbar, dim):
    """Thermal state with occupancy ``nbar``, renormalized after truncation."""
    dim = _check_dim(dim)
    if nbar < 0:
        raise ValueError("thermal occupancy must be nonnegative")
    if nbar == 0:
        return fock_dm(0, dim)
    x = nbar / (1.0 + nbar)
    p = x ** np.arange(dim)
    return np.diag(p / p.sum()).astype(complex)


def coherent_ket(alpha, dim):
    psi = displacement_block(complex(alpha), _check_dim(dim), 1)[:, 0]
    return psi / np.linalg.norm(psi)


def coherent_dm(alpha, dim):
    psi = coherent_ket(alpha, dim)
    return np.outer(psi, psi.conj())


def maximally_mixed(dim):
    dim = _check_dim(dim)
    return np.eye(dim, dtype=complex) / dim


@dataclass(frozen=True)
class StateCheck:
    trace: float
    min_eigenvalue: float
    hermiticity: float

    def ok(self, tol_trace=1e-8, tol_eig=1e-8, tol_herm=1e-10):
        return (
            abs(self.trace - 1.0) <= tol_trace
            and self.min_eigenvalue >= -tol_eig
            and self.hermiticity <= tol_herm
        )


def check_density(rho, *, tol_trace=1e-8, tol_eig=1e-8, tol_herm=1e-10, strict=True):
    """Measure trace, smallest eigenvalue and Hermiticity error of ``rho``."""
    rho = dense(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    tr = float(np.trace(rho).real)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    check = StateCheck(tr, min_eig, herm)
    if strict and not check.ok(tol_trace, tol_eig, tol_herm):
        raise InvalidStateError(
            f"not a density matrix: trace={tr:.3e}, min eig={min_eig:.3e}, herm err={herm:.3e}"
        )
    return check
