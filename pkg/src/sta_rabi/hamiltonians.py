"""Hamiltonian builders for the Rabi model, its counterdiabatic term, the
parametrically driven Jaynes-Cummings model and its squeezed-frame form.

Static builders return dense ``(2d, 2d)`` arrays. Time-dependent Hamiltonians
are :class:`TimeDependentOperator` objects: a sum of constant Hermitian
operators with real time-dependent coefficients, plus an optional diagonal
part that the integrators can rotate away exactly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import fock
from .exceptions import DimensionMismatch
from .fock import HilbertConfig

__all__ = [
    "ModelParams",
    "TimeDependentOperator",
    "hermitize",
    "h_rabi",
    "h_cd",
    "h_lab_driven_jc",
    "h_squeezed_frame_terms",
    "h_effective_sta",
    "h_alt_driven",
    "frame_offset",
    "lab_frame_operator",
    "squeezed_frame_operator",
    "rabi_cd_operator",
    "alt_driven_operators",
    "adiabatic_condition",
]

HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    delta: float = 1.0
    lam: float = 0.045
    omega_c: float = 1.0
    omega_q: float = 0.0
    big_omega: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


def hermitize(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return dense ``(m + m†)/2`` after checking ``m`` was already Hermitian to ``atol``."""
    if sp.issparse(m):
        m = m.toarray()
    m = np.asarray(m, dtype=complex)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > atol * max(1.0, np.max(np.abs(m))):
        raise AssertionError(f"operator is not Hermitian (max deviation {dev:.3g})")
    return 0.5 * (m + m.conj().T)


class _Ops:
    """Sparse composite-space operators for one truncation."""

    def __init__(self, d: int):
        a = sp.csr_array(fock.annihilation(d))
        ad = a.conj().T.tocsr()
        i_c = sp.identity(d, dtype=complex, format="csr")

        def cav(op):
            return sp.kron(sp.identity(2, dtype=complex), op, format="csr")

        def qub(name):
            return sp.kron(sp.csr_array(fock.qubit_operator(name)), i_c, format="csr")

        self.d = d
        self.a = cav(a)
        self.ad = cav(ad)
        self.n = cav(ad @ a)
        self.x = cav(a + ad)
        self.y = cav(ad - a)  # anti-Hermitian
        self.a2 = cav(a @ a)
        self.sx = qub("SigmaX")
        self.sy = qub("SigmaY")
        self.sz = qub("SigmaZ")
        self.sm = qub("SigmaMinus")
        self.jc = (self.ad @ self.sm + self.a @ self.sm.conj().T).tocsr()  # a† sigma + a sigma†
        self.sx_x = (self.sx @ self.x).tocsr()
        self.sy_y = (-1j * self.sy @ self.y).tocsr()
        self.na = cav(-0.5j * (ad @ ad - a @ a))  # H_NA / r'
        self.ndiag = np.arange(2 * d) % d * 1.0


@lru_cache(maxsize=8)
def _ops(d: int) -> _Ops:
    return _Ops(d)


def _dim(cfg) -> int:
    return cfg.fock_dim if isinstance(cfg, HilbertConfig) else int(cfg)


# -- static builders -----------------------------------------------------------

def h_rabi(eta: complex, p: ModelParams, cfg) -> np.ndarray:
    """Quantum Rabi Hamiltonian with coupling ``g = eta * omega_c``."""
    d = _dim(cfg)
    fock._check_displacement(eta, d)
    o = _ops(d)
    g = complex(eta) * p.omega_c
    h = p.omega_c * o.n + 0.5 * p.omega_q * o.sz + o.sx @ (g * o.ad + np.conj(g) * o.a)
    return hermitize(h)


def h_cd(eta_dot: complex, cfg) -> np.ndarray:
    """Counterdiabatic term ``i sigma_x (eta'* a - eta' a†)``."""
    o = _ops(_dim(cfg))
    eta_dot = complex(eta_dot)
    return hermitize(1j * o.sx @ (np.conj(eta_dot) * o.a - eta_dot * o.ad))


def _drive_at(t, schedule, p: ModelParams, counter_drive=True):
    r = float(schedule.r(t))
    r_dot = float(schedule.r_dot(t)) if counter_drive else 0.0
    omega_r = p.delta * np.tanh(2 * r)
    return r, r_dot, omega_r, r_dot


def h_lab_driven_jc(t: float, schedule, p: ModelParams, cfg, counter_drive: bool = True) -> np.ndarray:
    """Lab-frame (rotating at the pump half-frequency) driven JC Hamiltonian.

    ``delta a†a - [(omega_r + i omega_i)/2 a² - lam a† sigma + h.c.]`` with
    ``omega_r = delta tanh 2r`` and ``omega_i = r'`` (zero if ``counter_drive`` is off).
    """
    o = _ops(_dim(cfg))
    _, _, omega_r, omega_i = _drive_at(t, schedule, p, counter_drive)
    c = 0.5 * (omega_r + 1j * omega_i)
    drive = c * o.a2
    h = p.delta * o.n - (drive + drive.conj().T) + p.lam * o.jc
    return hermitize(h)


def h_squeezed_frame_terms(t: float, schedule, p: ModelParams, cfg):
    """Squeezed-frame decomposition ``(H_S_Rabi, H_err, H_NA)`` at time ``t``."""
    o = _ops(_dim(cfg))
    r = float(schedule.r(t))
    r_dot = float(schedule.r_dot(t))
    h_rabi_s = p.delta / np.cosh(2 * r) * o.n + 0.5 * p.lam * np.exp(r) * o.sx_x
    h_err = 0.5 * p.lam * np.exp(-r) * o.sy_y
    h_na = r_dot * o.na
    return hermitize(h_rabi_s), hermitize(h_err), hermitize(h_na)


def h_effective_sta(t: float, schedule, p: ModelParams, cfg) -> np.ndarray:
    """Effective squeezed-frame Rabi Hamiltonian (``H_NA`` cancelled, ``H_err`` dropped)."""
    return h_squeezed_frame_terms(t, schedule, p, cfg)[0]


def h_alt_driven(t: float, lambda_t: float, p: ModelParams, cfg):
    """Strongly driven resonant JC ``H_2`` and its effective form ``H_eff``.

    ``H_2 = Omega sigma_x + lam(t)(sigma a† + h.c.)``; ``H_eff = lam(t)/2 (a† + a) sigma_x``.
    """
    o = _ops(_dim(cfg))
    if lambda_t and p.big_omega < 20 * abs(lambda_t):
        warnings.warn(
            f"Omega/lambda = {p.big_omega / abs(lambda_t):.3g} < 20; the effective Hamiltonian is unreliable",
            stacklevel=2,
        )
    h2 = p.big_omega * o.sx + lambda_t * o.jc
    heff = 0.5 * lambda_t * o.sx_x
    return hermitize(h2), hermitize(heff)


def frame_offset(r: float, delta: float = 1.0) -> float:
    """c-number left over by the squeezing transformation of the cavity part."""
    return delta * (np.sinh(r) ** 2 - 0.5 * np.tanh(2 * r) * np.sinh(2 * r))


def adiabatic_condition(eta_dot: Sequence[complex], omega_c: float = 1.0) -> float:
    """``max |eta'| / omega_c`` along a path; adiabatic following needs this << 1."""
    return float(np.max(np.abs(np.asarray(eta_dot)))) / omega_c


# -- time-dependent operators --------------------------------------------------

def _as_coeff(c) -> Callable[[float], float]:
    if callable(c):
        return c
    value = float(c)
    return lambda t: value


@dataclass(frozen=True)
class TimeDependentOperator:
    """``H(t) = sum_k c_k(t) O_k + w(t) diag(v)``.

    Each ``O_k`` is a constant Hermitian matrix (kept in CSR form) and
    ``c_k``, ``w`` are real functions of time. Keeping the diagonal part
    separate lets the integrators move into its interaction picture, which
    removes the stiff free-rotation frequencies of the truncated cavity.
    """

    terms: tuple
    diagonal: np.ndarray | None = None
    diagonal_rate: Callable[[float], float] | None = None
    name: str = ""

    def __post_init__(self):
        terms = tuple((sp.csr_array(op, dtype=complex), _as_coeff(c)) for op, c in self.terms)
        if not terms and self.diagonal is None:
            raise ValueError("operator needs at least one term")
        dims = {op.shape for op, _ in terms}
        if self.diagonal is not None:
            object.__setattr__(self, "diagonal", np.asarray(self.diagonal, dtype=float))
            dims.add((len(self.diagonal), len(self.diagonal)))
            if self.diagonal_rate is None:
                raise ValueError("diagonal part needs a rate function")
        if len(dims) != 1:
            raise DimensionMismatch(f"inconsistent term shapes {sorted(dims)}")
        for op, _ in terms:
            dev = abs(op - op.conj().T).max() if op.nnz else 0.0
            if dev > HERMITIAN_ATOL:
                raise AssertionError(f"term is not Hermitian (max deviation {dev:.3g})")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        if self.terms:
            return self.terms[0][0].shape[0]
        return len(self.diagonal)

    def coefficients(self, t: float) -> list:
        return [float(c(t)) for _, c in self.terms]

    def sparse(self, t: float):
        h = sp.csr_array((self.dim, self.dim), dtype=complex)
        for op, c in self.terms:
            h = h + float(c(t)) * op
        if self.diagonal is not None:
            h = h + sp.diags_array(float(self.diagonal_rate(t)) * self.diagonal).astype(complex)
        return h.tocsr()

    def __call__(self, t: float) -> np.ndarray:
        return hermitize(self.sparse(t))

    evaluate = __call__

    def folded(self) -> "TimeDependentOperator":
        """Same operator with the diagonal part turned into an ordinary term."""
        if self.diagonal is None:
            return self
        diag_op = sp.diags_array(self.diagonal).astype(complex)
        return TimeDependentOperator(self.terms + ((diag_op, self.diagonal_rate),), name=self.name)

    def __add__(self, other: "TimeDependentOperator") -> "TimeDependentOperator":
        if other.diagonal is not None and self.diagonal is not None:
            return self.folded() + other
        if other.diagonal is not None:
            return other + self
        return TimeDependentOperator(self.terms + other.terms, self.diagonal, self.diagonal_rate, self.name)


def squeezed_frame_operator(schedule, p: ModelParams, cfg, include_err: bool = True,
                            include_na: bool = False) -> TimeDependentOperator:
    """Squeezed-frame Hamiltonian as a time-dependent operator.

    The default ``H_S_Rabi + H_err`` is the frame picture of the driven JC model
    with the counter-drive ``omega_i = r'`` on. ``include_na`` adds the
    nonadiabatic term (counter-drive off); ``include_err=False`` gives the
    effective Hamiltonian only.
    """
    o = _ops(_dim(cfg))
    lam, delta = p.lam, p.delta
    terms = [(o.sx_x, lambda t: 0.5 * lam * np.exp(float(schedule.r(t))))]
    if include_err:
        terms.append((o.sy_y, lambda t: 0.5 * lam * np.exp(-float(schedule.r(t)))))
    if include_na:
        terms.append((o.na, lambda t: float(schedule.r_dot(t))))
    return TimeDependentOperator(
        tuple(terms),
        diagonal=o.ndiag,
        diagonal_rate=lambda t: delta / np.cosh(2 * float(schedule.r(t))),
        name="H_S",
    )


def lab_frame_operator(schedule, p: ModelParams, cfg, counter_drive: bool = True) -> TimeDependentOperator:
    """Lab-frame driven JC Hamiltonian as a time-dependent operator."""
    o = _ops(_dim(cfg))
    delta = p.delta
    re_part = -(o.a2 + o.a2.conj().T) / 2  # multiplies omega_r
    im_part = -1j * (o.a2 - o.a2.conj().T) / 2  # multiplies omega_i
    terms = [
        (p.lam * o.jc, 1.0),
        (re_part, lambda t: delta * np.tanh(2 * float(schedule.r(t)))),
    ]
    if counter_drive:
        terms.append((im_part, lambda t: float(schedule.r_dot(t))))
    return TimeDependentOperator(tuple(terms), diagonal=o.ndiag, diagonal_rate=lambda t: delta, name="H_0")


def rabi_cd_operator(eta_path: Callable, eta_dot_path: Callable, p: ModelParams, cfg,
                     include_reference: bool = True) -> TimeDependentOperator:
    """``H_R(eta(t)) + H_CD(eta'(t))`` for a prescribed complex path ``eta(t)``."""
    o = _ops(_dim(cfg))
    wc = p.omega_c
    # sigma_x (g a† + g* a) = Re(g) sigma_x (a + a†) + Im(g) i sigma_x (a† - a)
    sx_x = o.sx_x
    sx_p = 1j * o.sx @ o.y
    terms = [
        # H_CD = i sigma_x (eta'* a - eta' a†) = Im(eta') sigma_x(a + a†) - Re(eta') i sigma_x (a† - a)
        (sx_x, lambda t: complex(eta_dot_path(t)).imag),
        (sx_p, lambda t: -complex(eta_dot_path(t)).real),
    ]
    if include_reference:
        terms += [
            (0.5 * p.omega_q * o.sz, 1.0),
            (sx_x, lambda t: wc * complex(eta_path(t)).real),
            (sx_p, lambda t: wc * complex(eta_path(t)).imag),
        ]
        return TimeDependentOperator(tuple(terms), diagonal=o.ndiag, diagonal_rate=lambda t: wc, name="H_tot")
    return TimeDependentOperator(tuple(terms), name="H_CD")


def alt_driven_operators(lambda_func: Callable, p: ModelParams, cfg):
    """``(H_2(t), H_eff(t))`` for a coupling profile ``lambda_func``."""
    o = _ops(_dim(cfg))
    h2 = TimeDependentOperator(((p.big_omega * o.sx, 1.0), (o.jc, lambda_func)), name="H_2")
    heff = TimeDependentOperator(((0.5 * o.sx_x, lambda_func),), name="H_eff")
    return h2, heff
