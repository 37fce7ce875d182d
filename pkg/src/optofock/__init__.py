"""Dissipative preparation of phonon Fock states in nonlinear optomechanics."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .calibration import CalibrationResult, calibration_table, first_zero, laguerre
from .config import ExperimentConfig, load, load_example
from .dynamics import (
    effective_liouvillian,
    evolve,
    full_liouvillian,
    kappa_eff,
    steady_state,
)
from .metrics import (
    fidelity_to_fock,
    nonclassicality_I,
    phonon_distribution,
    purity,
    state_fidelity,
    wigner,
)
from .model import SystemParams, chi_ref, effective_hamiltonian

__all__ = [
    "BACKEND",
    "CalibrationResult",
    "ExperimentConfig",
    "SystemParams",
    "calibration_table",
    "chi_ref",
    "effective_hamiltonian",
    "effective_liouvillian",
    "evolve",
    "fidelity_to_fock",
    "first_zero",
    "full_liouvillian",
    "kappa_eff",
    "laguerre",
    "load",
    "load_example",
    "nonclassicality_I",
    "phonon_distribution",
    "purity",
    "state_fidelity",
    "steady_state",
    "wigner",
]
