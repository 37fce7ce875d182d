import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from optofock import fock
from optofock import model as md
from optofock.calibration import first_zero


def params_for(M, **kw):
    return md.SystemParams.for_target(M, **kw)


def test_params_validation():
    with pytest.raises(ValueError):
        md.SystemParams(g=1, Omega=-0.1, Delta=0, kappa=0.1)
    with pytest.raises(ValueError):
        md.SystemParams(g=1, Omega=0.1, Delta=0, kappa=0.1, N_m=1)
    with pytest.raises(ValueError):
        md.SystemParams(g=1, Omega=0.1, Delta=0, kappa=0.1, N_m=4, target=4)


def test_for_target_uses_calibration():
    p = params_for(5)
    c = first_zero(5)
    assert p.eta == c.eta and p.Delta == pytest.approx(1 - c.eta**2)
    assert p.N_m == 6 and p.target == 5
    assert p.kappa == pytest.approx(20 * np.abs(md.chi_diagonal(p, dim=5)).max())
    good = params_for(5, regime="good")
    assert good.kappa == pytest.approx(md.chi_ref(good, c))


def test_rwa_flags():
    p = params_for(3)
    with pytest.raises(md.RegimeError):
        md.effective_hamiltonian(p.replace(kappa=1.5))
    with pytest.raises(md.RegimeError):
        md.effective_hamiltonian(p.replace(Omega=2.0))


def test_rotating_hamiltonian_decoupled_spectrum():
    p = md.SystemParams(g=0, Omega=0, Delta=0.3, kappa=0.1, N_c=3, N_m=4)
    ev = np.sort(np.linalg.eigvalsh(fock.dense(md.hamiltonian_rotating(p))))
    expected = np.sort([-0.3 * nc + nm for nc in range(3) for nm in range(4)])
    assert np.allclose(ev, expected)


@given(st.floats(0, 2), st.floats(0, 0.5), st.floats(-2, 2))
def test_rotating_hamiltonian_hermitian(g, Om, Dl):
    p = md.SystemParams(g=g, Omega=Om, Delta=Dl, kappa=0.1, N_c=3, N_m=5)
    H = fock.dense(md.hamiltonian_rotating(p))
    assert np.abs(H - H.conj().T).max() <= 1e-12
    assert H[0, 0] == 0


def test_displaced_hamiltonian_basics():
    p = md.SystemParams(g=0.6, Omega=0.0, Delta=0.64, kappa=0.0, N_c=2, N_m=8)
    assert np.allclose(md.hamiltonian_displaced(p, 0.0), 0)
    p = p.replace(Omega=0.1)
    for t in (0.0, 0.7, 3.1):
        H = md.hamiltonian_displaced(p, t)
        assert np.abs(H - H.conj().T).max() < 1e-14
    H0 = md.hamiltonian_displaced(p, 0.0)
    block = H0[8:16, 0:8]  # <1, m| H |0, m'>
    assert np.allclose(block, 0.1 * fock.displacement_elements(-0.6, 8))


def test_frame_equivalence():
    # rotating-frame evolution against the time-ordered displaced picture
    p = md.SystemParams(g=0.5, Omega=0.1, Delta=0.75, kappa=0.0, N_c=2, N_m=6)
    HR = fock.dense(md.hamiltonian_rotating(p))
    H0 = md.free_hamiltonian_displaced(p)
    U = md.conditional_displacement(p)
    psi0 = np.zeros(12, dtype=complex)
    psi0[0] = 1
    times = np.linspace(0, 20, 21)
    sol = solve_ivp(lambda t, y: -1j * (md.hamiltonian_displaced(p, t) @ y), (0, 20), psi0,
                    t_eval=times, rtol=1e-10, atol=1e-12)
    for t, psi_d in zip(sol.t, sol.y.T):
        psi_r = expm(-1j * HR * t) @ psi0
        mapped = U @ expm(-1j * H0 * t) @ psi_d
        assert np.abs(np.abs(psi_r) ** 2 - np.abs(mapped) ** 2).max() < 5e-3


def test_conditional_displacement_is_unitary():
    p = md.SystemParams(g=0.9, Omega=0.1, Delta=0.2, kappa=0.0, N_c=3, N_m=7)
    U = md.conditional_displacement(p)
    assert np.allclose(U @ U.conj().T, np.eye(21), atol=1e-12)
    assert np.allclose(U[:7, :7], np.eye(7))
    assert np.allclose(md.conditional_displacement(p, inverse=True), U.conj().T, atol=1e-12)


def test_chi_entries():
    p = params_for(1)
    chi = md.chi_diagonal(p, dim=4)
    assert chi[0] == pytest.approx(p.eta * p.Omega * np.exp(-p.eta**2 / 2))
    assert abs(chi[1]) < 1e-14
    for M in (5, 10):
        q = params_for(M)
        assert abs(md.chi_diagonal(q, dim=M + 2)[M]) <= 1e-12 * q.Omega
    assert np.isrealobj(md.chi_diagonal(p, dim=3))
    with pytest.raises(ValueError):
        md.chi_diagonal(p, eta=0.0)


@pytest.mark.parametrize("M", range(1, 11))
def test_no_intermediate_nodes(M):
    p = params_for(M)
    assert np.all(np.abs(md.chi_diagonal(p, dim=M)) > 0)


def _ket(photon, phonon, nm):
    ket = np.zeros(2 * nm)
    ket[photon * nm + phonon] = 1
    return ket


@pytest.mark.parametrize("M", range(1, 11))
def test_dark_state(M):
    nm = M + 3
    p = params_for(M, N_c=2, N_m=nm)
    H = fock.dense(md.effective_hamiltonian(p))
    assert np.linalg.norm(H @ _ket(0, M, nm)) <= 1e-12 * p.Omega
    # |1, M> still decays to |0, M-1>; only the upward step out of M is blocked
    out = H @ _ket(1, M, nm)
    assert np.linalg.norm(out) == pytest.approx(abs(md.chi_diagonal(p)[M - 1]) * np.sqrt(M))
    assert np.allclose(out, out[M - 1] * _ket(0, M - 1, nm))


def test_effective_hamiltonian_structure():
    p = params_for(5, N_c=2, N_m=9)
    H = fock.dense(md.effective_hamiltonian(p))
    chi = md.chi_diagonal(p)
    for m in range(8):
        assert H[m, 9 + m + 1] == pytest.approx(chi[m] * np.sqrt(m + 1))
    assert np.abs(H - H.conj().T).max() == 0
    # levels 0..5 never couple to 6 and above
    low = [c * 9 + m for c in range(2) for m in range(6)]
    high = [c * 9 + m for c in range(2) for m in range(6, 9)]
    assert np.abs(H[np.ix_(low, high)]).max() <= 1e-12 * p.Omega
    with pytest.raises(ValueError):
        md.effective_hamiltonian(p.replace(s=2))


def test_ladder_operator():
    for M in (1, 4, 7):
        c = first_zero(M)
        p = params_for(M, N_m=M + 3)
        B = md.b_ladder_operator(p, c)
        assert np.count_nonzero(B) == M
        assert np.allclose(B @ fock.fock_dm(0, M + 3)[:, 0], 0)
        assert np.allclose(B.conj().T[:, M], 0)
    c = first_zero(1)
    p = params_for(1)
    assert np.allclose(md.b_ladder_operator(p, c), md.chi_diagonal(p)[0] * np.array([[0, 1], [0, 0]]))
    with pytest.raises(TypeError):
        md.b_ladder_operator(p, 1)


def test_chi_ref_is_slowest_rate():
    c = first_zero(10)
    p = params_for(10)
    rates = md.ladder_rates(p, c)
    assert md.chi_ref(p, c) == rates.min()
    assert rates.argmin() == 9
    assert rates / p.Omega == pytest.approx(
        [0.4893, 0.5762, 0.5798, 0.5408, 0.4778, 0.4016, 0.3191, 0.235, 0.1523, 0.0735], abs=1e-4)
