"""Scalar diagnostics of composite qubit ⊗ cavity states."""
from __future__ import annotations

import enum
import logging

import numpy as np

from .exceptions import DataQualityError, DimensionMismatch, ZeroProbability

__all__ = [
    "Outcome",
    "fidelity",
    "population",
    "partial_transpose_qubit",
    "log_negativity",
    "mean_photon",
    "project_qubit",
    "reduced_qubit",
    "ObservableSeries",
]

log = logging.getLogger(__name__)

CLAMP_SLACK = 1e-6


class Outcome(str, enum.Enum):
    G = "G"
    E = "E"


class ObservableSeries:
    """Named scalar time series with the physical-range check applied on construction."""

    def __init__(self, name, times, values, bounded=False):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.shape != values.shape:
            raise ValueError("times and values must have equal length")
        if bounded:
            values = np.array([_clamp_unit(v, name) for v in values])
        self.name, self.times, self.values = name, times, values

    def __len__(self):
        return len(self.times)


def _clamp_unit(value: float, name: str) -> float:
    if value < -CLAMP_SLACK or value > 1 + CLAMP_SLACK:
        raise DataQualityError(f"{name} = {value:.3g} outside [0, 1] beyond numerical slack")
    if value < 0 or value > 1:
        log.info("clamping %s = %.3g into [0, 1]", name, value)
    return min(max(value, 0.0), 1.0)


def _as_dm(state):
    state = np.asarray(state)
    if state.ndim == 1:
        return None, state
    return state, None


def population(rho, reference) -> float:
    """``<ref|rho|ref>`` clamped to ``[0, 1]``; ``rho`` may also be a state vector."""
    ref = np.asarray(reference)
    dm, vec = _as_dm(rho)
    n = ref.shape[0]
    if (dm is not None and dm.shape != (n, n)) or (vec is not None and vec.shape != (n,)):
        raise DimensionMismatch(f"state of shape {np.shape(rho)} vs reference of length {n}")
    if vec is not None:
        value = abs(np.vdot(ref, vec)) ** 2
    else:
        value = float(np.real(np.vdot(ref, dm @ ref)))
    return _clamp_unit(value, "population")


def fidelity(rho, target) -> float:
    """Overlap ``<target|rho|target>`` with a pure target (real and in ``[0, 1]``)."""
    return population(rho, target)


def partial_transpose_qubit(rho: np.ndarray) -> np.ndarray:
    """Transpose the 2x2 qubit block structure of a ``(2d, 2d)`` density matrix."""
    rho = np.asarray(rho)
    n = rho.shape[0]
    if rho.ndim != 2 or rho.shape != (n, n) or n % 2:
        raise DimensionMismatch(f"expected a square matrix of even size, got {rho.shape}")
    d = n // 2
    return rho.reshape(2, d, 2, d).transpose(2, 1, 0, 3).reshape(n, n)


def log_negativity(rho, qubit_dim: int = 2) -> float:
    """``log2 ||rho^{T_q}||_1`` from the eigenvalues of the partial transpose.

    Pure states are handled through their Schmidt coefficients. Slightly
    negative results from roundoff clamp to 0.
    """
    if qubit_dim != 2:
        raise DimensionMismatch("only a qubit (dimension 2) first factor is supported")
    rho = np.asarray(rho)
    if rho.ndim == 1:
        if rho.size % 2:
            raise DimensionMismatch(f"state length {rho.size} is not even")
        s = np.linalg.svd(rho.reshape(2, -1), compute_uv=False)
        value = float(np.log2(np.sum(s) ** 2 / np.sum(s**2)))
    else:
        pt = partial_transpose_qubit(rho)
        pt = 0.5 * (pt + pt.conj().T)
        value = float(np.log2(np.sum(np.abs(np.linalg.eigvalsh(pt))) / np.real(np.trace(rho))))
    if value < 0:
        if value < -CLAMP_SLACK:
            raise DataQualityError(f"log negativity {value:.3g} is negative beyond numerical slack")
        log.info("clamping log negativity %.3g to 0", value)
        value = 0.0
    return value


def mean_photon(rho_or_psi, cfg=None) -> float:
    """``<a†a>`` of a composite state (vector or density matrix)."""
    state = np.asarray(rho_or_psi)
    n = state.shape[0]
    if n % 2:
        raise DimensionMismatch(f"composite dimension {n} is not even")
    d = n // 2
    if cfg is not None and getattr(cfg, "fock_dim", d) != d:
        raise DimensionMismatch(f"state has fock_dim {d}, config says {cfg.fock_dim}")
    counts = np.tile(np.arange(d, dtype=float), 2)
    if state.ndim == 1:
        return float(np.sum(counts * np.abs(state) ** 2) / np.vdot(state, state).real)
    return float(np.real(np.sum(counts * np.diag(state))) / np.real(np.trace(state)))


def reduced_qubit(rho) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim == 1:
        m = rho.reshape(2, -1)
        return m @ m.conj().T
    d = rho.shape[0] // 2
    return np.einsum("ikjk->ij", rho.reshape(2, d, 2, d))


def project_qubit(rho, outcome) -> tuple[np.ndarray, float]:
    """Ideal projective qubit measurement.

    Returns the normalised conditional cavity density matrix and the outcome
    probability.
    """
    outcome = Outcome(outcome)
    k = 0 if outcome is Outcome.G else 1
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = rho.shape[0]
    if rho.shape != (n, n) or n % 2:
        raise DimensionMismatch(f"expected a square matrix of even size, got {rho.shape}")
    d = n // 2
    block = rho[k * d:(k + 1) * d, k * d:(k + 1) * d]
    prob = float(np.real(np.trace(block)))
    if prob < 1e-12:
        raise ZeroProbability(f"outcome {outcome.value} has probability {prob:.3g}")
    return block / prob, prob
