"""Integrators for closed (Schrödinger) and open (Lindblad, squeezed-bath)
dynamics of the time-dependent qubit-cavity system.

Both integrators work on dense states with sparse operator products and an
embedded Runge-Kutta pair (``scipy.integrate.solve_ivp``). When the
Hamiltonian carries a diagonal part ``w(t) diag(v)``, the state is propagated
in its interaction picture; the accumulated phase ``Phi(t) = ∫ w`` is carried
as one extra ODE component and undone at every sample.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import fock
from .exceptions import DimensionMismatch, PositivityWarning, StepFailure, UnphysicalBath
from .hamiltonians import TimeDependentOperator, _ops
from .schedules import ReservoirSchedule, noise_params

__all__ = [
    "BathSpec",
    "TrajectoryRecord",
    "lindblad_rhs",
    "schrodinger_evolve",
    "master_evolve",
    "effective_lindblad_evolve",
]

log = logging.getLogger(__name__)

BATH_SLACK = 1e-12
POSITIVITY_FLOOR = -1e-5


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class BathSpec:
    """Cavity decay ``kappa`` into a (possibly squeezed) bath ``N(t), M(t)``
    plus qubit decay ``gamma`` into vacuum.

    ``switch_times`` lists the instants where ``N`` or ``M`` jump; the
    integrators never step across them.
    """

    kappa: float = 0.0
    gamma: float = 0.0
    N: Callable[[float], float] = _zero
    M: Callable[[float], complex] = _zero
    switch_times: tuple = ()

    def __post_init__(self):
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates must be non-negative")

    @classmethod
    def vacuum(cls, kappa=0.0, gamma=0.0):
        return cls(kappa, gamma)

    @classmethod
    def squeezed_vacuum(cls, kappa, gamma, r_e, phi_e=np.pi):
        """Lab-frame bath of constant squeezing ``r_e``."""
        n = float(np.sinh(r_e) ** 2)
        m = complex(np.cosh(r_e) * np.sinh(r_e) * np.exp(-1j * phi_e))
        return cls(kappa, gamma, lambda t: n, lambda t: m)

    @classmethod
    def squeezed_frame(cls, kappa, gamma, schedule, reservoir: ReservoirSchedule | None = None):
        """Bath seen in the frame squeezed by ``schedule.r(t)`` with reservoir ``r_e(t)``."""
        reservoir = ReservoirSchedule.off() if reservoir is None else reservoir

        def n_s(t):
            return float(noise_params(schedule.r(t), reservoir.r_e(t), reservoir.phi_e)[0])

        # the dissipator below is written for the frame jump ch a + sh a†, which
        # carries the opposite sign of the tabulated correlation
        def m_s(t):
            return -complex(noise_params(schedule.r(t), reservoir.r_e(t), reservoir.phi_e)[1])

        return cls(kappa, gamma, n_s, m_s, tuple(reservoir.switch_times))

    @classmethod
    def from_cooperativity(cls, inv_sqrt_c, lam, **kwargs):
        """``kappa = gamma = lam / sqrt(C)`` from ``C = lam^2 / (kappa gamma)``."""
        rate = inv_sqrt_c * lam
        return cls(rate, rate, **kwargs)

    @property
    def is_vacuum(self) -> bool:
        return self.N is _zero and self.M is _zero

    def check(self, t: float):
        n, m = float(self.N(t)), complex(self.M(t))
        if abs(m) ** 2 > n * (n + 1) + BATH_SLACK * max(1.0, n * n):
            raise UnphysicalBath(f"|M|^2 = {abs(m) ** 2:.6g} > N(N+1) = {n * (n + 1):.6g} at t = {t:.6g}")
        return n, m


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: list | None
    observables: dict
    final_state: np.ndarray
    info: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.observables[name]


def _as_operator(H) -> TimeDependentOperator:
    if isinstance(H, TimeDependentOperator):
        return H
    if callable(H):
        dim = np.asarray(H(0.0)).shape[0]
        raise TypeError(f"pass a TimeDependentOperator (got a plain callable of dim {dim})")
    return TimeDependentOperator(((np.asarray(H), 1.0),))


class _Rotation:
    """Elementwise phases of the interaction picture generated by ``diag(v)``."""

    def __init__(self, v: np.ndarray | None):
        self.v = None if v is None else np.asarray(v, dtype=float)
        self._cache = {}

    def _prepared(self, o):
        key = id(o)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not o:
            o = o.tocsr()
            rows = np.repeat(np.arange(o.shape[0]), np.diff(o.indptr))
            hit = (o, o.data, o.indices, o.indptr, self.v[rows] - self.v[o.indices])
            self._cache[key] = hit
        return hit

    def op(self, o, phi):
        """``e^{i phi V} O e^{-i phi V}`` for a CSR operator ``o``."""
        if self.v is None or phi == 0.0:
            return o
        src, data, indices, indptr, dv = self._prepared(o)
        return sp.csr_array((data * np.exp(1j * phi * dv), indices, indptr), shape=src.shape)

    def to_lab_vec(self, psi, phi):
        return psi if self.v is None else np.exp(-1j * phi * self.v) * psi

    def from_lab_vec(self, psi, phi):
        return psi if self.v is None else np.exp(1j * phi * self.v) * psi

    def to_lab_dm(self, rho, phi):
        if self.v is None:
            return rho
        u = np.exp(-1j * phi * self.v)
        return u[:, None] * rho * u.conj()[None, :]

    def from_lab_dm(self, rho, phi):
        if self.v is None:
            return rho
        u = np.exp(1j * phi * self.v)
        return u[:, None] * rho * u.conj()[None, :]


def _segments(t_eval: np.ndarray, breaks: Sequence[float]):
    t0, t1 = float(t_eval[0]), float(t_eval[-1])
    edges = [t0] + sorted(b for b in set(breaks) if t0 < b < t1) + [t1]
    return list(zip(edges[:-1], edges[1:]))


def _observe(observables, state, t):
    return {name: f(state, t) for name, f in observables.items()}


def _collect(samples: list[dict], names) -> dict:
    return {name: np.array([s[name] for s in samples]) for name in names}


# -- closed system -------------------------------------------------------------

def schrodinger_evolve(H, psi0: np.ndarray, t_span, tol: float = 1e-10, *,
                       observables: Mapping[str, Callable] | None = None,
                       store_states: bool = False, n_samples: int = 400,
                       breakpoints: Sequence[float] = (), method: str = "DOP853") -> TrajectoryRecord:
    """Integrate ``i psi' = H(t) psi``.

    ``t_span`` is either ``(t0, t1)`` (sampled at ``n_samples`` uniform
    points) or an explicit increasing array of sample times.
    ``observables`` maps names to ``f(psi, t)`` evaluated at each sample.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    H = _as_operator(H)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (H.dim,):
        raise DimensionMismatch(f"state of shape {psi0.shape} does not match operator dimension {H.dim}")
    t_eval = _sample_times(t_span, n_samples)
    observables = dict(observables or {})
    rot = _Rotation(H.diagonal)
    rate = H.diagonal_rate or _zero
    ops = [(op, c) for op, c in H.terms]
    dim = H.dim

    def rhs(t, y):
        phi = y[dim].real
        psi = y[:dim]
        out = np.zeros(dim + 1, dtype=complex)
        acc = np.zeros(dim, dtype=complex)
        for op, c in ops:
            acc += float(c(t)) * (rot.op(op, phi) @ psi)
        out[:dim] = -1j * acc
        out[dim] = float(rate(t))
        return out

    y = np.concatenate([psi0, [0.0]])
    samples, states = [], []
    nfev = 0
    for lo, hi in _segments(t_eval, breakpoints):
        last = hi == t_eval[-1]
        sub_t = t_eval[(t_eval >= lo) & ((t_eval <= hi) if last else (t_eval < hi))]
        grid = np.unique(np.concatenate([sub_t, [hi]]))
        sol = solve_ivp(rhs, (lo, hi), y, method=method, rtol=tol, atol=tol * 1e-2, t_eval=grid)
        if sol.status < 0:
            raise StepFailure(f"Schrödinger integration failed on [{lo:g}, {hi:g}]: {sol.message}")
        nfev += sol.nfev
        for k, t in enumerate(sol.t):
            if not np.any(np.isclose(sub_t, t, rtol=0, atol=1e-12)):
                continue
            psi = rot.to_lab_vec(sol.y[:dim, k], sol.y[dim, k].real)
            samples.append(_observe(observables, psi, t))
            if store_states:
                states.append(psi)
        y = sol.y[:, -1]
    final = rot.to_lab_vec(y[:dim], y[dim].real)
    norm_drift = abs(np.linalg.norm(final) - np.linalg.norm(psi0))
    info = {"nfev": nfev, "norm_drift": float(norm_drift), "tol": tol}
    if norm_drift > 10 * tol * max(1.0, t_eval[-1] - t_eval[0]):
        log.warning("norm drift %.3g exceeds 10*tol", norm_drift)
    return TrajectoryRecord(t_eval, states if store_states else None, _collect(samples, observables), final, info)


def _sample_times(t_span, n_samples):
    t_span = np.asarray(t_span, dtype=float)
    if t_span.ndim == 1 and t_span.size == 2:
        return np.linspace(t_span[0], t_span[1], n_samples)
    if t_span.ndim != 1 or t_span.size < 2 or np.any(np.diff(t_span) <= 0):
        raise ValueError("t_span must be (t0, t1) or an increasing array of times")
    return t_span


# -- open system ---------------------------------------------------------------

def _composite_ops(dim: int):
    if dim % 2:
        raise DimensionMismatch(f"composite dimension must be even, got {dim}")
    return _ops(dim // 2)


def lindblad_rhs(rho: np.ndarray, H, bath: BathSpec, t: float) -> np.ndarray:
    """Right-hand side of the squeezed-bath master equation at time ``t``.

    ``i[rho, H] + gamma D[sigma] + kappa{(N+1) D[a] + N D[a†]
    - M/2 (2 a† rho a† - a†a† rho - rho a†a†) - M*/2 (2 a rho a - a a rho - rho a a)}``.
    ``H`` is a matrix or a :class:`TimeDependentOperator`.
    """
    rho = np.asarray(rho, dtype=complex)
    h = H(t) if isinstance(H, TimeDependentOperator) else np.asarray(H)
    if rho.shape != h.shape:
        raise DimensionMismatch(f"rho {rho.shape} vs H {h.shape}")
    n, m = bath.check(t)
    o = _composite_ops(rho.shape[0])
    out = 1j * (rho @ h - h @ rho)
    return out + _dissipator(rho, o.a, o.sm, bath.kappa, bath.gamma, n, m)


def _dissipator(rho, a, sm, kappa, gamma, n, m):
    out = np.zeros_like(rho)
    if gamma:
        smd = sm.conj().T
        sds = smd @ sm
        out += gamma * (_sandwich(sm, rho, smd) - 0.5 * (sds @ rho + _right(rho, sds)))
    if kappa:
        ad = a.conj().T
        ada = ad @ a
        aad = a @ ad
        out += kappa * (n + 1) * (_sandwich(a, rho, ad) - 0.5 * (ada @ rho + _right(rho, ada)))
        if n:
            out += kappa * n * (_sandwich(ad, rho, a) - 0.5 * (aad @ rho + _right(rho, aad)))
        if m:
            adad = ad @ ad
            aa = a @ a
            out -= 0.5 * kappa * m * (2 * _sandwich(ad, rho, ad) - adad @ rho - _right(rho, adad))
            out -= 0.5 * kappa * np.conj(m) * (2 * _sandwich(a, rho, a) - aa @ rho - _right(rho, aa))
    return out


def _right(rho, op):
    """``rho @ op`` for dense ``rho`` and sparse ``op``."""
    return (op.T @ rho.T).T


def _sandwich(left, rho, right):
    return _right(left @ rho, right)


class _LindbladSystem:
    """Interaction-picture right-hand side for :func:`master_evolve`."""

    def __init__(self, H: TimeDependentOperator, bath: BathSpec):
        self.H = H
        self.bath = bath
        self.dim = H.dim
        o = _composite_ops(self.dim)
        self.a, self.sm = o.a, o.sm
        self.rot = _Rotation(H.diagonal)
        self.rate = H.diagonal_rate or _zero

    def __call__(self, t, y):
        dim = self.dim
        phi = y[-1].real
        rho = y[:-1].reshape(dim, dim)
        n, m = self.bath.check(t)
        rot = self.rot
        acc = np.zeros_like(rho)
        for op, c in self.H.terms:
            acc += float(c(t)) * (rot.op(op, phi) @ rho)
        # -i[H, rho] = -i H rho + i rho H = -i acc + h.c. since H, rho Hermitian
        drho = -1j * acc
        drho = drho + drho.conj().T
        a = rot.op(self.a, phi)
        sm = rot.op(self.sm, phi)
        drho += _dissipator(rho, a, sm, self.bath.kappa, self.bath.gamma, n, m)
        out = np.empty(dim * dim + 1, dtype=complex)
        out[:-1] = drho.ravel()
        out[-1] = float(self.rate(t))
        return out


def master_evolve(H, bath: BathSpec, rho0: np.ndarray, t_span, tol: float = 1e-8, *,
                  observables: Mapping[str, Callable] | None = None,
                  store_states: bool = False, n_samples: int = 400,
                  breakpoints: Sequence[float] = (), method: str = "DOP853") -> TrajectoryRecord:
    """Integrate the squeezed-bath master equation from ``rho0``.

    A pure state vector is accepted for ``rho0``. Integration is split at the
    bath switch times and at ``breakpoints``; the state is re-Hermitised at
    each segment boundary and the largest asymmetry seen is reported as
    ``info["hermiticity_drift"]``. ``observables`` maps names to
    ``f(rho, t)`` evaluated on the lab-picture density matrix at each sample.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    H = _as_operator(H)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = fock.ket2dm(rho0)
    if rho0.shape != (H.dim, H.dim):
        raise DimensionMismatch(f"rho0 of shape {rho0.shape} does not match operator dimension {H.dim}")
    t_eval = _sample_times(t_span, n_samples)
    observables = dict(observables or {})
    system = _LindbladSystem(H, bath)
    rot = system.rot
    dim = H.dim

    y = np.concatenate([rho0.ravel(), [0.0]])
    samples, states = [], []
    herm_drift = 0.0
    min_eig = np.inf
    nfev = 0
    eig_stride = max(1, len(t_eval) // 40)
    idx = 0
    for lo, hi in _segments(t_eval, tuple(bath.switch_times) + tuple(breakpoints)):
        last = hi == t_eval[-1]
        mask = (t_eval >= lo) & ((t_eval <= hi) if last else (t_eval < hi))
        sub_t = t_eval[mask]
        grid = np.unique(np.concatenate([sub_t, [hi]]))
        sol = solve_ivp(system, (lo, hi), y, method=method, rtol=tol, atol=tol * 1e-2, t_eval=grid)
        if sol.status < 0:
            raise StepFailure(f"master-equation integration failed on [{lo:g}, {hi:g}]: {sol.message}")
        nfev += sol.nfev
        for k, t in enumerate(sol.t):
            if not np.any(np.isclose(sub_t, t, rtol=0, atol=1e-12)):
                continue
            rho = rot.to_lab_dm(sol.y[:-1, k].reshape(dim, dim), sol.y[-1, k].real)
            herm_drift = max(herm_drift, float(np.max(np.abs(rho - rho.conj().T))))
            rho = 0.5 * (rho + rho.conj().T)
            if idx % eig_stride == 0 or t == t_eval[-1]:
                min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))
            idx += 1
            samples.append(_observe(observables, rho, t))
            if store_states:
                states.append(rho)
        y = sol.y[:, -1].copy()
        rho_i = y[:-1].reshape(dim, dim)
        herm_drift = max(herm_drift, float(np.max(np.abs(rho_i - rho_i.conj().T))))
        y[:-1] = (0.5 * (rho_i + rho_i.conj().T)).ravel()
    final = rot.to_lab_dm(y[:-1].reshape(dim, dim), y[-1].real)
    trace_drift = abs(np.trace(final) - np.trace(rho0))
    if min_eig < POSITIVITY_FLOOR:
        warnings.warn(f"density matrix min eigenvalue {min_eig:.3g} < {POSITIVITY_FLOOR:g}; "
                      "consider a larger fock_dim", PositivityWarning, stacklevel=2)
    info = {
        "nfev": nfev,
        "trace_drift": float(trace_drift),
        "hermiticity_drift": herm_drift,
        "min_eigenvalue": float(min_eig),
        "tol": tol,
    }
    log.debug("master_evolve: %s", info)
    return TrajectoryRecord(t_eval, states if store_states else None, _collect(samples, observables), final, info)


def effective_lindblad_evolve(H, kappa: float, gamma: float, rho0, t_span, tol: float = 1e-8, **kwargs):
    """Standard Lindblad evolution with ``gamma D[sigma] + kappa D[a]`` (no squeezed noise)."""
    return master_evolve(H, BathSpec.vacuum(kappa, gamma), rho0, t_span, tol, **kwargs)
