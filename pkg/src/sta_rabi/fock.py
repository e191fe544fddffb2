"""Truncated Fock-space and qubit operator algebra, plus the named states.

Composite states live in ``qubit ⊗ cavity`` with the qubit index outermost,
so a composite vector of a ``fock_dim = d`` configuration has length ``2 d``
and entries ``[g,0], [g,1], ..., [g,d-1], [e,0], ..., [e,d-1]``.

Qubit basis is ordered ``(|g>, |e>)`` with ``sigma_z = diag(-1, +1)`` so that
``|e>`` is the +1 eigenstate, ``sigma = |g><e|`` lowers the qubit and
``|±x> = (|e> ± |g>) / sqrt(2)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .exceptions import DegenerateCat, DimensionMismatch, TruncationRisk

__all__ = [
    "Frame",
    "HilbertConfig",
    "QubitOp",
    "Parity",
    "annihilation",
    "creation",
    "number",
    "parity_operator",
    "qubit_operator",
    "tensor",
    "cavity_op",
    "qubit_op",
    "displacement",
    "squeeze",
    "squeeze_generator",
    "vacuum",
    "fock_state",
    "coherent_state",
    "cat_norm",
    "cat_state",
    "rabi_ground_state",
    "alt_final_state",
    "qubit_state",
    "product_state",
    "ket2dm",
]


class Frame(str, enum.Enum):
    LAB = "lab"
    SQUEEZED = "squeezed"


@dataclass(frozen=True)
class HilbertConfig:
    """Fock truncation and the frame in which operators are interpreted."""

    fock_dim: int
    frame: Frame = Frame.SQUEEZED

    def __post_init__(self):
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ValueError(f"fock_dim must be an integer >= 2, got {self.fock_dim!r}")
        object.__setattr__(self, "fock_dim", int(self.fock_dim))
        object.__setattr__(self, "frame", Frame(self.frame))

    @property
    def dim(self) -> int:
        """Composite qubit ⊗ cavity dimension."""
        return 2 * self.fock_dim

    def with_dim(self, fock_dim: int) -> "HilbertConfig":
        return HilbertConfig(fock_dim, self.frame)


class QubitOp(str, enum.Enum):
    SIGMA_X = "SigmaX"
    SIGMA_Y = "SigmaY"
    SIGMA_Z = "SigmaZ"
    SIGMA_MINUS = "SigmaMinus"
    PLUS_X = "PlusX"
    MINUS_X = "MinusX"


class Parity(str, enum.Enum):
    EVEN = "Even"
    ODD = "Odd"


def _cfg_dim(cfg) -> int:
    return cfg.fock_dim if isinstance(cfg, HilbertConfig) else int(cfg)


@lru_cache(maxsize=64)
def _annihilation(d: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    a.setflags(write=False)
    return a


def annihilation(cfg) -> np.ndarray:
    """Cavity lowering operator with ``a[n-1, n] = sqrt(n)``."""
    d = _cfg_dim(cfg)
    if d < 2:
        raise ValueError("fock_dim must be >= 2")
    return _annihilation(d).copy()


def creation(cfg) -> np.ndarray:
    return annihilation(cfg).conj().T


def number(cfg) -> np.ndarray:
    d = _cfg_dim(cfg)
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def parity_operator(cfg) -> np.ndarray:
    """``(-1)^{a†a}`` on the cavity."""
    d = _cfg_dim(cfg)
    return np.diag((-1.0) ** np.arange(d)).astype(complex)


_S2 = 1.0 / np.sqrt(2.0)
_QUBIT = {
    QubitOp.SIGMA_X: np.array([[0, 1], [1, 0]], dtype=complex),
    QubitOp.SIGMA_Y: np.array([[0, 1j], [-1j, 0]], dtype=complex),
    QubitOp.SIGMA_Z: np.array([[-1, 0], [0, 1]], dtype=complex),
    QubitOp.SIGMA_MINUS: np.array([[0, 1], [0, 0]], dtype=complex),
    QubitOp.PLUS_X: np.array([_S2, _S2], dtype=complex),
    QubitOp.MINUS_X: np.array([-_S2, _S2], dtype=complex),
}


def qubit_operator(which) -> np.ndarray:
    """Pauli matrices, ``sigma = |g><e|`` or the ``sigma_x`` eigenvectors.

    ``which`` is a :class:`QubitOp` or its string value (``"SigmaX"``, ...).
    Matrices are 2x2; ``PlusX``/``MinusX`` return length-2 vectors.
    """
    return _QUBIT[QubitOp(which)].copy()


def qubit_state(label: str) -> np.ndarray:
    """``"g"``, ``"e"``, ``"+x"`` or ``"-x"`` as a length-2 vector."""
    table = {
        "g": np.array([1, 0], dtype=complex),
        "e": np.array([0, 1], dtype=complex),
        "+x": _QUBIT[QubitOp.PLUS_X],
        "-x": _QUBIT[QubitOp.MINUS_X],
    }
    return table[label].copy()


def tensor(qubit_part: np.ndarray, cavity_part: np.ndarray) -> np.ndarray:
    """Kronecker product with the qubit index outermost.

    Works for operators (2x2 with dxd) and for vectors (2 with d).
    """
    q = np.asarray(qubit_part)
    c = np.asarray(cavity_part)
    if q.ndim != c.ndim:
        raise DimensionMismatch(f"cannot tensor a {q.ndim}-d qubit part with a {c.ndim}-d cavity part")
    if q.shape[0] != 2 or (q.ndim == 2 and q.shape != (2, 2)):
        raise DimensionMismatch(f"qubit part must be 2x2 or length 2, got shape {q.shape}")
    if c.ndim == 2 and c.shape[0] != c.shape[1]:
        raise DimensionMismatch(f"cavity part must be square, got shape {c.shape}")
    return np.kron(q, c)


def cavity_op(op: np.ndarray) -> np.ndarray:
    """Embed a cavity operator as ``I_2 ⊗ op``."""
    return np.kron(np.eye(2), op)


def qubit_op(op, cfg) -> np.ndarray:
    """Embed a qubit operator as ``op ⊗ I_d``."""
    if isinstance(op, (str, QubitOp)):
        op = qubit_operator(op)
    return np.kron(op, np.eye(_cfg_dim(cfg)))


def _check_displacement(eta: complex, d: int):
    if abs(eta) ** 2 > d / 4:
        raise TruncationRisk(
            f"|eta|^2 = {abs(eta) ** 2:.4g} exceeds fock_dim/4 = {d / 4:g}; increase fock_dim"
        )


def _check_squeeze(r: float, d: int):
    if np.sinh(r) ** 2 > d / 8:
        raise TruncationRisk(
            f"sinh^2(r) = {np.sinh(r) ** 2:.4g} exceeds fock_dim/8 = {d / 8:g}; increase fock_dim"
        )


def displacement(eta: complex, cfg) -> np.ndarray:
    """``D(eta) = exp(eta a† - eta* a)`` by dense matrix exponential."""
    d = _cfg_dim(cfg)
    _check_displacement(eta, d)
    a = _annihilation(d)
    return expm(eta * a.conj().T - np.conj(eta) * a)


def squeeze_generator(cfg) -> np.ndarray:
    """``(a†² - a²) / 2``; ``S(r) = exp(r * generator)``."""
    a = _annihilation(_cfg_dim(cfg))
    ad = a.conj().T
    return 0.5 * (ad @ ad - a @ a)


def squeeze(r: float, cfg) -> np.ndarray:
    """``S(r) = exp[r (a†² - a²) / 2]`` so that ``S† a S = a cosh r + a† sinh r``."""
    d = _cfg_dim(cfg)
    _check_squeeze(r, d)
    return expm(r * squeeze_generator(d))


def vacuum(cfg) -> np.ndarray:
    return fock_state(0, cfg)


def fock_state(n: int, cfg) -> np.ndarray:
    d = _cfg_dim(cfg)
    if not 0 <= n < d:
        raise TruncationRisk(f"Fock level {n} outside truncation {d}")
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(eta: complex, cfg) -> np.ndarray:
    """Glauber state from its number-state series, renormalised after truncation."""
    d = _cfg_dim(cfg)
    _check_displacement(eta, d)
    eta = complex(eta)
    amps = np.empty(d, dtype=complex)
    amps[0] = np.exp(-abs(eta) ** 2 / 2)
    for n in range(1, d):
        amps[n] = amps[n - 1] * eta / np.sqrt(n)
    return amps / np.linalg.norm(amps)


def cat_norm(eta: complex, parity) -> float:
    """``N_± = sqrt(2 [1 ± exp(-2|eta|^2)])``."""
    sign = 1.0 if Parity(parity) is Parity.EVEN else -1.0
    return float(np.sqrt(2.0 * (1.0 + sign * np.exp(-2.0 * abs(eta) ** 2))))


def cat_state(eta: complex, parity, cfg) -> np.ndarray:
    """Even or odd cat ``(|eta> ± |-eta>) / N_±``."""
    parity = Parity(parity)
    if parity is Parity.ODD and abs(eta) < 1e-8:
        raise DegenerateCat("odd cat state is undefined at eta = 0")
    sign = 1.0 if parity is Parity.EVEN else -1.0
    v = coherent_state(eta, cfg) + sign * coherent_state(-eta, cfg)
    return v / np.linalg.norm(v)


def rabi_ground_state(eta: complex, cfg) -> np.ndarray:
    """Entangled cat ``(|+x>|-eta> - |-x>|eta>) / sqrt(2)``.

    Identical to ``(N_+ |g>|cat_+> - N_- |e>|cat_->) / 2``; at ``eta = 0`` this
    is ``|g>|0>``.
    """
    plus = coherent_state(eta, cfg)
    minus = coherent_state(-eta, cfg)
    v = (np.kron(qubit_state("+x"), minus) - np.kron(qubit_state("-x"), plus)) / np.sqrt(2)
    return v / np.linalg.norm(v)


def alt_final_state(eta_f: complex, theta: float, cfg) -> np.ndarray:
    """Rabi ground state rotated by the strong qubit drive, ``exp(i theta sigma_x / 2)|G>``.

    Written out, ``e^{-i theta/2} / 2 * (N_θ+ |g>|cat_θ+> - N_θ- |e>|cat_θ->)`` with
    ``N_θ± |cat_θ±> = |eta> ± e^{i theta} |-eta>``. Reduces to
    :func:`rabi_ground_state` for ``theta = 2 n pi``.
    """
    plus = coherent_state(eta_f, cfg)
    minus = coherent_state(-eta_f, cfg)
    ph = np.exp(1j * theta)
    v = np.exp(-0.5j * theta) / 2 * (
        np.kron(qubit_state("g"), plus + ph * minus) - np.kron(qubit_state("e"), plus - ph * minus)
    )
    return v / np.linalg.norm(v)


def alt_cat_norm(eta_f: complex, theta: float, sign: int) -> float:
    """``N_θ± = sqrt(2 [1 ± cos(theta) exp(-2|eta|^2)])``."""
    return float(np.sqrt(2.0 * (1.0 + sign * np.cos(theta) * np.exp(-2.0 * abs(eta_f) ** 2))))


def product_state(qubit: str, cavity: np.ndarray) -> np.ndarray:
    return np.kron(qubit_state(qubit), cavity)


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())
