import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sta_rabi import fock
from sta_rabi import observables as obs
from sta_rabi.exceptions import DataQualityError, DimensionMismatch, ZeroProbability

D = 6


def _bell(d=D):
    g0 = fock.product_state("g", fock.fock_state(0, d))
    e1 = fock.product_state("e", fock.fock_state(1, d))
    return (g0 + e1) / np.sqrt(2)


def _werner(p, d=D):
    # p |bell><bell| + (1 - p) * (identity on the 2x2 subspace) / 4
    bell = _bell(d)
    rho = p * np.outer(bell, bell.conj())
    for q in ("g", "e"):
        for n in (0, 1):
            v = fock.product_state(q, fock.fock_state(n, d))
            rho += (1 - p) / 4 * np.outer(v, v)
    return rho


def test_log_negativity_bell_and_product():
    bell = _bell()
    assert obs.log_negativity(bell) == pytest.approx(1.0, abs=1e-8)
    assert obs.log_negativity(np.outer(bell, bell.conj())) == pytest.approx(1.0, abs=1e-8)
    prod = fock.product_state("+x", fock.coherent_state(0.7, 20))
    assert obs.log_negativity(prod) == pytest.approx(0.0, abs=1e-8)
    assert obs.log_negativity(fock.ket2dm(prod)) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.8, 1.0])
def test_log_negativity_werner_oracle(p):
    expected = max(0.0, np.log2((1 + 3 * p) / 2))
    assert obs.log_negativity(_werner(p)) == pytest.approx(expected, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0, np.pi / 2))
def test_log_negativity_pure_schmidt_oracle(theta):
    c, s = np.cos(theta), np.sin(theta)
    psi = c * fock.product_state("g", fock.fock_state(0, D)) + s * fock.product_state("e", fock.fock_state(3, D))
    expected = np.log2((c + s) ** 2)
    assert obs.log_negativity(psi) == pytest.approx(expected, abs=1e-8)
    assert obs.log_negativity(fock.ket2dm(psi)) == pytest.approx(expected, abs=1e-8)


def test_rabi_ground_state_negativity_is_overlap_limited():
    # two branches with overlap exp(-2|eta|^2): E_N = log2(1 + sqrt(1 - exp(-4|eta|^2)))
    eta = 0.6
    G = fock.rabi_ground_state(eta, 40)
    expected = np.log2(1 + np.sqrt(1 - np.exp(-4 * eta**2)))
    assert obs.log_negativity(G) == pytest.approx(expected, abs=1e-8)


def test_partial_transpose_involution():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2 * D, 2 * D)) + 1j * rng.normal(size=(2 * D, 2 * D))
    assert np.allclose(obs.partial_transpose_qubit(obs.partial_transpose_qubit(x)), x)
    with pytest.raises(DimensionMismatch):
        obs.partial_transpose_qubit(np.eye(5))


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_mean_photon_of_ground_state(re, im):
    eta = complex(re, im)
    G = fock.rabi_ground_state(eta, 80)
    assert obs.mean_photon(G) == pytest.approx(abs(eta) ** 2, abs=1e-6)
    assert obs.mean_photon(fock.ket2dm(G)) == pytest.approx(abs(eta) ** 2, abs=1e-6)


def test_fidelity_and_population():
    bell = _bell()
    g0 = fock.product_state("g", fock.fock_state(0, D))
    assert obs.fidelity(bell, g0) == pytest.approx(0.5)
    assert obs.population(fock.ket2dm(bell), g0) == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        obs.fidelity(bell, np.ones(3))
    with pytest.raises(DataQualityError):
        obs.fidelity(2 * bell, g0)


def test_reduced_qubit_and_projection():
    bell = _bell()
    assert np.allclose(obs.reduced_qubit(bell), np.eye(2) / 2)
    assert np.allclose(obs.reduced_qubit(fock.ket2dm(bell)), np.eye(2) / 2)
    cav, prob = obs.project_qubit(bell, "E")
    assert prob == pytest.approx(0.5)
    assert cav[1, 1] == pytest.approx(1)
    with pytest.raises(ZeroProbability):
        obs.project_qubit(fock.product_state("g", fock.vacuum(D)), "E")


def test_projection_of_ground_state_gives_cats():
    eta = 1.2
    d = 40
    G = fock.rabi_ground_state(eta, d)
    cav, prob = obs.project_qubit(G, "G")
    even = fock.cat_state(eta, "Even", d)
    assert np.real(np.vdot(even, cav @ even)) == pytest.approx(1, abs=1e-10)
    assert prob == pytest.approx(0.5 * (1 + np.exp(-2 * eta**2)), abs=1e-10)


def test_observable_series_clamps_small_excursions():
    s = obs.ObservableSeries("F", [0, 1], [1 + 1e-12, 0.5], bounded=True)
    assert s.values[0] == 1.0 and len(s) == 2
    with pytest.raises(DataQualityError):
        obs.ObservableSeries("F", [0], [1.5], bounded=True)
