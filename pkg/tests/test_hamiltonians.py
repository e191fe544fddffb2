import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from sta_rabi import fock, hamiltonians as H, schedules as sch
from sta_rabi.evolve import schrodinger_evolve
from sta_rabi.observables import fidelity

LAB_DIM = 320
LOW = 60  # squeezed-frame block that the checks compare on


def _low_block(d, n=LOW):
    return np.r_[0:n, d:d + n]


def _lab_hamiltonian(A, p, om_r, om_i):
    """Independent construction of the driven JC Hamiltonian with cavity mode ``A``."""
    Ad = A.conj().T
    sm = sp.csr_array(fock.qubit_operator("SigmaMinus"))
    c = 0.5 * (om_r + 1j * om_i)
    cav = p.delta * Ad @ A - (c * A @ A + np.conj(c) * Ad @ Ad)
    return sp.kron(sp.identity(2), cav) + p.lam * (sp.kron(sm, Ad) + sp.kron(sm.T, A))


def test_hamiltonians_are_hermitian():
    p = sch.STAScheduleParams()
    mp = H.ModelParams(lam=p.lam)
    for h in (H.h_lab_driven_jc(7.0, p, mp, 30), *H.h_squeezed_frame_terms(7.0, p, mp, 30),
              H.h_rabi(0.7 - 0.2j, mp, 30), H.h_cd(0.1 + 0.3j, 30)):
        assert np.allclose(h, h.conj().T, atol=1e-14)
    with pytest.raises(AssertionError):
        H.hermitize(np.array([[0, 1], [0, 0]]))


def test_frame_decomposition_identity_random_times():
    """S† H_0 S - i S† dS/dt = H_S_Rabi + H_err + c-number, with H_NA cancelled by the counter-drive.

    The squeeze is applied through its exact Bogoliubov image ``a -> a cosh r + a† sinh r``:
    the dense truncated ``exp(r G)`` is not accurate at r = 2.3 for any practical cutoff.
    """
    p = sch.STAScheduleParams()
    mp = H.ModelParams(lam=p.lam)
    d = LAB_DIM
    a = sp.csr_array(fock.annihilation(d))
    ad = a.conj().T
    gen = sp.kron(sp.identity(2), sp.csr_array(fock.squeeze_generator(d)))
    blk = _low_block(d)
    rng = np.random.default_rng(20240521)
    worst = worst_lab = 0.0
    for t in rng.uniform(0, p.T, 200):
        r, rd = float(p.r(t)), float(p.r_dot(t))
        om_r, om_i = sch.drive_amplitudes(r, rd, p.delta)
        A = np.cosh(r) * a + np.sinh(r) * ad
        lhs = (_lab_hamiltonian(A, p, om_r, om_i) - 1j * rd * gen).toarray()
        hs, he, _ = H.h_squeezed_frame_terms(t, p, mp, d)
        rhs = hs + he + H.frame_offset(r, p.delta) * np.eye(2 * d)
        worst = max(worst, np.max(np.abs((lhs - rhs)[np.ix_(blk, blk)])))
        lab = _lab_hamiltonian(a, p, om_r, om_i).toarray()
        worst_lab = max(worst_lab, np.max(np.abs(lab - H.h_lab_driven_jc(t, p, mp, d))))
    assert worst <= 1e-6 * p.delta
    assert worst_lab <= 1e-12


def test_frame_identity_with_explicit_squeeze_at_moderate_r():
    # direct conjugation by the truncated exponential, restricted to r where it is exact
    p = sch.STAScheduleParams()
    mp = H.ModelParams(lam=p.lam)
    d = LAB_DIM
    G = np.kron(np.eye(2), fock.squeeze_generator(d))
    blk = _low_block(d, 20)
    for t in (0.5, 3.0, 4.3, 4.6):
        r, rd = float(p.r(t)), float(p.r_dot(t))
        assert r < 0.6
        S = expm(r * G)
        lhs = S.conj().T @ H.h_lab_driven_jc(t, p, mp, d) @ S - 1j * rd * G
        hs, he, _ = H.h_squeezed_frame_terms(t, p, mp, d)
        rhs = hs + he + H.frame_offset(r) * np.eye(2 * d)
        assert np.max(np.abs((lhs - rhs)[np.ix_(blk, blk)])) <= 1e-6


def test_without_counter_drive_h_na_survives():
    p = sch.STAScheduleParams()
    mp = H.ModelParams(lam=p.lam)
    d = 120
    t = 4.7
    r, rd = float(p.r(t)), float(p.r_dot(t))
    a = sp.csr_array(fock.annihilation(d))
    A = np.cosh(r) * a + np.sinh(r) * a.conj().T
    gen = sp.kron(sp.identity(2), sp.csr_array(fock.squeeze_generator(d)))
    lhs = (_lab_hamiltonian(A, p, p.delta * np.tanh(2 * r), 0.0) - 1j * rd * gen).toarray()
    hs, he, hna = H.h_squeezed_frame_terms(t, p, mp, d)
    rhs = hs + he + hna + H.frame_offset(r) * np.eye(2 * d)
    blk = _low_block(d, 30)
    assert np.max(np.abs((lhs - rhs)[np.ix_(blk, blk)])) < 1e-10


def test_ground_state_is_eigenvector_of_rabi():
    d = 60
    mp = H.ModelParams()
    eta = 1.1 - 0.6j
    G = fock.rabi_ground_state(eta, d)
    hG = H.h_rabi(eta, mp, d) @ G
    energy = np.vdot(G, hG)
    assert energy.real == pytest.approx(-abs(eta) ** 2, abs=1e-10)
    assert np.linalg.norm(hG - energy * G) < 1e-8
    # and it is the lowest level
    assert np.linalg.eigvalsh(H.h_rabi(eta, mp, d))[0] == pytest.approx(-abs(eta) ** 2, abs=1e-8)


def test_transitionless_residual():
    """(i d/dt - H_CD)|G(eta(t))> only has a component along |G> itself (a gauge phase)."""
    d = 60

    def eta(t):
        return 1.3 * t * np.exp(1j * t)

    def eta_dot(t):
        return 1.3 * np.exp(1j * t) * (1 + 1j * t)

    h = 1e-4
    for t in np.linspace(0.1, 1.9, 13):
        G = fock.rabi_ground_state(eta(t), d)
        dG = (fock.rabi_ground_state(eta(t + h), d) - fock.rabi_ground_state(eta(t - h), d)) / (2 * h)
        res = 1j * dG - H.h_cd(eta_dot(t), d) @ G
        c = np.vdot(G, res)
        assert c.real == pytest.approx((eta_dot(t) * np.conj(eta(t))).imag, abs=1e-6)
        assert np.linalg.norm(res - c * G) <= 1e-4


def test_rabi_plus_cd_tracks_ground_state():
    d = 50
    mp = H.ModelParams()
    T = 3.0

    def eta(t):
        return 1.5 * np.sin(np.pi * t / (2 * T)) ** 2 * (1 + 0.3j)

    def eta_dot(t):
        return 1.5 * np.pi / (2 * T) * np.sin(np.pi * t / T) * (1 + 0.3j)

    op = H.rabi_cd_operator(eta, eta_dot, mp, d)
    rec = schrodinger_evolve(op, fock.rabi_ground_state(eta(0.0), d), (0, T), tol=1e-10, n_samples=3)
    assert fidelity(rec.final_state, fock.rabi_ground_state(eta(T), d)) >= 0.9999
    # the CD term alone leaves the reference out and still moves |G>
    cd_only = H.rabi_cd_operator(eta, eta_dot, mp, d, include_reference=False)
    rec = schrodinger_evolve(cd_only, fock.rabi_ground_state(eta(0.0), d), (0, T), tol=1e-10, n_samples=3)
    assert fidelity(rec.final_state, fock.rabi_ground_state(eta(T), d)) >= 0.9999


def test_time_dependent_operator_matches_dense_builders():
    p = sch.STAScheduleParams()
    mp = H.ModelParams(lam=p.lam)
    d = 40
    sq = H.squeezed_frame_operator(p, mp, d)
    lab = H.lab_frame_operator(p, mp, d)
    for t in (1.0, 5.5, 12.0):
        hs, he, _ = H.h_squeezed_frame_terms(t, p, mp, d)
        assert np.allclose(sq(t), hs + he, atol=1e-12)
        assert np.allclose(lab(t), H.h_lab_driven_jc(t, p, mp, d), atol=1e-12)


def test_alt_driven_warning_and_form():
    mp = H.ModelParams(lam=0.045, big_omega=0.5)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        H.h_alt_driven(0.0, 0.045, mp, 20)
    assert caught
    mp = H.ModelParams(lam=0.045, big_omega=50 * 0.045)
    h2, heff = H.h_alt_driven(0.0, 0.045, mp, 20)
    assert np.allclose(heff, heff.conj().T)


def test_frame_offset_and_adiabatic_condition():
    assert H.frame_offset(0.0) == 0
    r = 0.8
    assert H.frame_offset(r) == pytest.approx(np.sinh(r) ** 2 - 0.5 * np.tanh(2 * r) * np.sinh(2 * r))
    assert H.adiabatic_condition([0.1j, -0.3], omega_c=2.0) == pytest.approx(0.15)
