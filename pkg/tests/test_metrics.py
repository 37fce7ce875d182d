import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_hermite, factorial

from optofock import fock
from optofock import metrics as mt
from conftest import random_density


def test_fidelity_to_fock():
    assert mt.fidelity_to_fock(fock.fock_dm(4, 8), 4) == 1
    assert mt.fidelity_to_fock(fock.fock_dm(5, 8), 4) == 0
    assert mt.fidelity_to_fock(fock.thermal_dm(0.3, 60), 0) == pytest.approx(np.sqrt(1 / 1.3), abs=1e-9)
    assert mt.fidelity_to_fock(fock.thermal_dm(0.3, 60), 0) == pytest.approx(0.877, abs=1e-3)
    with pytest.raises(ValueError):
        mt.fidelity_to_fock(fock.fock_dm(1, 3), 3)


def test_purity():
    assert mt.purity(fock.coherent_dm(0.4, 12)) == pytest.approx(1)
    assert mt.purity(fock.maximally_mixed(5)) == pytest.approx(0.2)
    assert mt.purity(fock.thermal_dm(0.3, 80)) == pytest.approx(1 / 1.6, abs=1e-6)


@given(st.integers(2, 8), st.integers(0, 2**31))
def test_purity_bounded(dim, seed):
    assert mt.purity(random_density(dim, np.random.default_rng(seed))) <= 1 + 1e-10


@given(st.integers(2, 8), st.integers(0, 2**31), st.data())
def test_fidelity_bookkeeping(dim, seed, data):
    rho = random_density(dim, np.random.default_rng(seed))
    M = data.draw(st.integers(0, dim - 1))
    p = mt.phonon_distribution(rho)
    assert mt.fidelity_to_fock(rho, M) ** 2 + p.sum() - p[M] == pytest.approx(1, abs=1e-12)


def test_phonon_distribution():
    assert np.array_equal(mt.phonon_distribution(fock.fock_dm(3, 6)), [0, 0, 0, 1, 0, 0])
    n = np.arange(80)
    p = mt.phonon_distribution(fock.thermal_dm(0.3, 80))
    assert np.allclose(p, 0.3**n / 1.3 ** (n + 1), atol=1e-12)
    assert p.sum() == pytest.approx(1, abs=1e-8)


def test_state_fidelity():
    rng = np.random.default_rng(4)
    a, b = random_density(5, rng), random_density(5, rng)
    assert mt.state_fidelity(a, a) == pytest.approx(1)
    assert mt.state_fidelity(a, b) == pytest.approx(mt.state_fidelity(b, a), abs=1e-10)
    assert mt.state_fidelity(fock.fock_dm(0, 3), fock.fock_dm(1, 3)) == pytest.approx(0)
    psi = fock.coherent_ket(0.5, 20)
    assert mt.state_fidelity(np.outer(psi, psi.conj()), fock.fock_dm(0, 20)) == pytest.approx(
        abs(psi[0]) ** 2)


@pytest.mark.parametrize("M", [0, 1, 2, 5, 10])
def test_wigner_origin_value(M):
    g = mt.wigner(fock.fock_dm(M, M + 4))
    assert g.at(0, 0) == pytest.approx((-1) ** M / np.pi, abs=1e-12)
    assert g.integrate() == pytest.approx(1, abs=2e-2)
    assert np.isrealobj(g.values)


def test_wigner_vacuum_is_gaussian():
    g = mt.wigner(fock.fock_dm(0, 6), n_q=41)
    Q, P = np.meshgrid(g.q, g.p, indexing="ij")
    assert np.allclose(g.values, np.exp(-(Q**2) - P**2) / np.pi, atol=1e-12)


def _position_density(n, q):
    psi = eval_hermite(n, q) * np.exp(-(q**2) / 2) / np.sqrt(2.0**n * factorial(n) * np.sqrt(np.pi))
    return psi**2


@pytest.mark.parametrize("n", [0, 1])
def test_wigner_marginal(n):
    g = mt.wigner(fock.fock_dm(n, 6), extent=6.0, n_q=161)
    assert np.abs(g.marginal_q() - _position_density(n, g.q)).max() < 1e-2


def test_wigner_boundary_guard():
    with pytest.raises(mt.GridError):
        mt.wigner(fock.fock_dm(8, 10), extent=2.0)


def test_wigner_csv(tmp_path):
    g = mt.wigner(fock.fock_dm(1, 4), n_q=11)
    path = tmp_path / "w.csv"
    g.to_csv(path, {"state": "fock 1"})
    lines = path.read_text().splitlines()
    assert lines[0] == "# state: fock 1" and lines[1] == "q,p,W"
    rows = list(csv.reader(lines[2:]))
    assert len(rows) == 121
    assert float(rows[60][2]) == pytest.approx(-1 / np.pi)


def test_I_coherent_is_zero():
    assert abs(mt.nonclassicality_I(fock.coherent_dm(1.0, 25))) <= 0.02
    assert abs(mt.nonclassicality_I(fock.fock_dm(0, 6))) <= 0.02


@pytest.mark.parametrize("M", [1, 5, 10])
def test_I_fock_equals_number(M):
    assert mt.nonclassicality_I(fock.fock_dm(M, M + 5)) == pytest.approx(M, rel=0.02)


def test_I_thermal_is_slightly_negative():
    # diagonal states: I = sum n p_n^2 - sum (n+1) p_n p_{n+1}
    p = mt.phonon_distribution(fock.thermal_dm(0.3, 30))
    n = np.arange(30)
    exact = np.sum(n * p**2) - np.sum((n[:-1] + 1) * p[:-1] * p[1:])
    assert mt.nonclassicality_I(fock.thermal_dm(0.3, 30)) == pytest.approx(exact, abs=5e-3)
    assert exact < 0


@pytest.mark.parametrize("beta", [0.4, 1.0j, -0.6 + 0.8j])
def test_I_invariant_under_displacement(beta):
    rho = fock.fock_dm(3, 30)
    D = fock.displacement(beta, 30)
    moved = D @ rho @ D.conj().T
    base = mt.nonclassicality_I(rho)
    assert mt.nonclassicality_I(moved, extent=mt.default_extent(rho) + abs(beta) * np.sqrt(2)) == \
        pytest.approx(base, rel=0.02)


def test_I_refinement_details():
    r = mt.nonclassicality_I(fock.fock_dm(2, 6), details=True)
    assert r.n_points > mt.DEFAULT_POINTS
    assert abs(r.value - r.previous) < 0.01 * max(abs(r.value), 1)
    with pytest.raises(mt.ConvergenceError):
        mt.nonclassicality_I(fock.fock_dm(10, 12), max_refinements=0)
