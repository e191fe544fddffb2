"""Control schedules: squeezing ramps, drive quadratures, reservoir switching,
squeezed-frame noise parameters and the coherent-amplitude equation of motion.

Units: the detuning ``delta`` sets the frequency unit (normally 1), times are
in ``1/delta``.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.special import expit

from .exceptions import ArctanhDomain, NonRealCoupling, StepFailure

__all__ = [
    "Protocol",
    "STAScheduleParams",
    "AdiabaticScheduleParams",
    "TurnOffParams",
    "ReservoirSchedule",
    "EtaTrajectory",
    "sta_r",
    "sta_r_dot",
    "adiabatic_r",
    "adiabatic_r_dot",
    "drive_amplitudes",
    "squeezing_gain_db",
    "reservoir_r_e",
    "noise_params",
    "noise_averages",
    "turnoff_r",
    "turnoff_r_dot",
    "integrate_eta",
    "adiabatic_eta",
    "cd_coupling_lambda",
]


class Protocol(str, enum.Enum):
    STA = "STA"
    ADIABATIC = "Adiabatic"


def _sigmoid_slope(x):
    """Derivative of the logistic function, ``e^x / (1 + e^x)^2``, overflow safe."""
    return expit(x) * expit(-x)


@dataclass(frozen=True)
class STAScheduleParams:
    r_max: float = 2.3
    f0: float = 10.0
    T: float = 20.0
    delta: float = 1.0
    lam: float = 0.045
    eta0: complex = (1 + 1j) / 100

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if self.f0 < 5:
            raise ValueError("f0 must be >= 5 so that the ramp starts and ends near zero")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.lam < self.delta:
            raise ValueError("need 0 < lam < delta")
        object.__setattr__(self, "eta0", complex(self.eta0))

    def r(self, t):
        return sta_r(t, self)

    def r_dot(self, t):
        return sta_r_dot(t, self)

    @property
    def switch_times(self):
        return (self.T / 4, 3 * self.T / 4)

    def to_dict(self):
        d = asdict(self)
        d["eta0"] = [self.eta0.real, self.eta0.imag]
        return d


@dataclass(frozen=True)
class AdiabaticScheduleParams:
    r_max: float = 1.8
    f0: float = 10.0
    T: float = 250.0
    delta: float = 1.0
    lam: float = 0.045

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.lam < self.delta:
            raise ValueError("need 0 < lam < delta")

    def r(self, t):
        return adiabatic_r(t, self)

    def r_dot(self, t):
        return adiabatic_r_dot(t, self)

    @property
    def switch_times(self):
        return (self.T / 2,)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TurnOffParams:
    """Ramp-down of the parametric drive after an adiabatic preparation.

    ``orientation="decreasing"`` ramps ``r`` from about ``arctanh(omega_max/delta)/2``
    down to zero with the steepest slope at ``t_f + T_off/3``.
    ``orientation="as_printed"`` evaluates the literal logistic with argument
    ``10 [-(t - t_f)/T_off + 1/3]``, which ramps *up* from near zero.
    """

    omega_max: float
    T_off: float = 5.0
    delta: float = 1.0
    t_f: float = 0.0
    orientation: str = "decreasing"

    def __post_init__(self):
        if self.omega_max >= self.delta or self.omega_max <= -self.delta:
            raise ArctanhDomain(f"omega_max = {self.omega_max} must satisfy |omega_max| < delta = {self.delta}")
        if self.omega_max < 0:
            raise ValueError("omega_max must be non-negative")
        if not self.T_off > 0:
            raise ValueError("T_off must be positive")
        if self.orientation not in ("decreasing", "as_printed"):
            raise ValueError("orientation must be 'decreasing' or 'as_printed'")

    @classmethod
    def from_r_max(cls, r_max, T_off=5.0, delta=1.0, t_f=0.0, orientation="decreasing"):
        return cls(delta * np.tanh(2 * r_max), T_off, delta, t_f, orientation)

    @property
    def r_peak(self):
        return 0.5 * np.arctanh(self.omega_max / self.delta)

    def r(self, t):
        return turnoff_r(t, self)

    def r_dot(self, t):
        return turnoff_r_dot(t, self)


# -- squeezing ramps ---------------------------------------------------------

def sta_r(t, p: STAScheduleParams):
    """``r_max / (1 + exp[f0 cos(2 pi t / T)])``: near-square pulse vanishing at both ends."""
    f = p.f0 * np.cos(2 * np.pi * np.asarray(t) / p.T)
    return p.r_max * expit(-f)


def sta_r_dot(t, p: STAScheduleParams):
    phase = 2 * np.pi * np.asarray(t) / p.T
    f = p.f0 * np.cos(phase)
    return p.r_max * _sigmoid_slope(f) * p.f0 * (2 * np.pi / p.T) * np.sin(phase)


def adiabatic_r(t, p: AdiabaticScheduleParams):
    """Monotone ramp ``r_max / (1 + exp[f0 (1/2 - t/T)])``."""
    g = p.f0 * (0.5 - np.asarray(t) / p.T)
    return p.r_max * expit(-g)


def adiabatic_r_dot(t, p: AdiabaticScheduleParams):
    g = p.f0 * (0.5 - np.asarray(t) / p.T)
    return p.r_max * _sigmoid_slope(g) * p.f0 / p.T


def _turnoff_arg(t, p: TurnOffParams):
    x = 10.0 * ((np.asarray(t) - p.t_f) / p.T_off - 1.0 / 3.0)
    return x if p.orientation == "decreasing" else -x


def turnoff_r(t, p: TurnOffParams):
    """Logistic switch-off of the squeezing after ``t_f``."""
    return p.r_peak * expit(-_turnoff_arg(t, p))


def turnoff_r_dot(t, p: TurnOffParams):
    sign = -1.0 if p.orientation == "decreasing" else 1.0
    return sign * p.r_peak * _sigmoid_slope(_turnoff_arg(t, p)) * 10.0 / p.T_off


def drive_amplitudes(r, r_dot, delta=1.0):
    """Two-photon drive quadratures: ``omega_r = delta tanh(2r)``, ``omega_i = r_dot``."""
    return delta * np.tanh(2 * np.asarray(r)), np.asarray(r_dot) * 1.0


def squeezing_gain_db(r):
    return 10 * np.log10(np.exp(2 * r))


# -- reservoir and squeezed-frame noise ----------------------------------------

@dataclass(frozen=True)
class ReservoirSchedule:
    """Piecewise-constant squeezed-vacuum reservoir ``r_e(t)`` with phase ``phi_e``.

    ``levels[k]`` holds on ``[switch_times[k-1], switch_times[k])``; the final
    level holds from the last switch time on.
    """

    switch_times: tuple = ()
    levels: tuple = (0.0,)
    phi_e: float = np.pi

    def __post_init__(self):
        if len(self.levels) != len(self.switch_times) + 1:
            raise ValueError("need exactly one more level than switch times")
        if any(v < 0 for v in self.levels):
            raise ValueError("r_e must be non-negative")
        if list(self.switch_times) != sorted(self.switch_times):
            raise ValueError("switch times must be increasing")

    @classmethod
    def off(cls):
        return cls((), (0.0,), np.pi)

    @classmethod
    def for_protocol(cls, p, compensated=True, phi_e=np.pi):
        """Reservoir that tracks the plateau of ``p`` (or stays off)."""
        if not compensated:
            return cls.off()
        if isinstance(p, STAScheduleParams):
            return cls((p.T / 4, 3 * p.T / 4), (0.0, p.r_max, 0.0), phi_e)
        if isinstance(p, AdiabaticScheduleParams):
            return cls((p.T / 2,), (0.0, p.r_max), phi_e)
        raise TypeError(f"no reservoir rule for {type(p).__name__}")

    def r_e(self, t):
        t = np.asarray(t)
        idx = np.searchsorted(np.asarray(self.switch_times, dtype=float), t, side="right")
        return np.asarray(self.levels, dtype=float)[idx]


def reservoir_r_e(t, protocol, p):
    """Compensating reservoir squeezing: on during the plateau of ``r(t)``."""
    protocol = Protocol(protocol)
    if protocol is Protocol.STA:
        return ReservoirSchedule((p.T / 4, 3 * p.T / 4), (0.0, p.r_max, 0.0)).r_e(t)
    return ReservoirSchedule((p.T / 2,), (0.0, p.r_max)).r_e(t)


def noise_params(r, r_e, phi_e=np.pi):
    """Thermal and two-photon noise ``(N_S, M_S)`` seen in the squeezed frame.

    For ``phi_e = pi`` this collapses to ``sinh^2(r - r_e)`` and
    ``cosh(r - r_e) sinh(r - r_e)``.
    """
    ch, sh = np.cosh(r), np.sinh(r)
    che, she = np.cosh(r_e), np.sinh(r_e)
    n_s = ch**2 * she**2 + sh**2 * che**2 + 0.5 * np.sinh(2 * r) * np.sinh(2 * r_e) * np.cos(phi_e)
    m_s = (sh * che + np.exp(-1j * phi_e) * ch * she) * (ch * che + np.exp(1j * phi_e) * sh * she)
    return n_s, m_s


def noise_averages(schedule, reservoir: ReservoirSchedule, T=None, n_samples=4001):
    """Time averages ``(1/T) ∫|N_S| dt`` and ``(1/T) ∫|M_S| dt`` over ``[0, T]``.

    Composite Simpson rule on each interval between reservoir switches, so the
    discontinuities in ``r_e`` never fall inside a panel.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    T = schedule.T if T is None else T
    edges = [0.0] + [s for s in reservoir.switch_times if 0 < s < T] + [T]
    a_n = a_m = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        n_pts = max(int(n_samples * (hi - lo) / T) | 1, 101)
        t = np.linspace(lo, hi, n_pts)
        # left-closed levels; evaluate just inside the panel at the right edge
        level = reservoir.r_e(0.5 * (lo + hi))
        n_s, m_s = noise_params(schedule.r(t), level, reservoir.phi_e)
        a_n += simpson(np.abs(n_s), x=t)
        a_m += simpson(np.abs(m_s), x=t)
    return a_n / T, a_m / T


# -- coherent amplitude ------------------------------------------------------

@dataclass(frozen=True)
class EtaTrajectory:
    times: np.ndarray
    eta: np.ndarray
    eta_dot: np.ndarray
    error_estimate: float = 0.0

    @property
    def eta_final(self) -> complex:
        return complex(self.eta[-1])


def _eta_rhs(r_func, delta, lam):
    def rhs(t, eta):
        r = r_func(t)
        return -1j * delta / np.cosh(2 * r) * eta + 0.5j * lam * np.exp(r)

    return rhs


def _rk4(rhs, y0, times):
    ys = np.empty(len(times), dtype=complex)
    ys[0] = y = y0
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
    return ys


def integrate_eta(p, n_steps: int = 10_000, r: Callable | None = None, tol: float = 1e-8,
                  eta0: complex | None = None) -> EtaTrajectory:
    """Solve the coherent-amplitude equations of motion with classic RK4.

    ``Re eta' = delta Im(eta) sech 2r``, ``Im eta' = (lam/2) e^r - delta Re(eta) sech 2r``.
    The step-doubling (Richardson) estimate ``|eta_h(T) - eta_{h/2}(T)| / 15``
    must stay below ``tol``; the finer solution is returned on the coarse grid.
    ``r`` overrides the squeezing schedule of ``p``.
    """
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    r_func = p.r if r is None else r
    y0 = p.eta0 if eta0 is None else complex(eta0)
    rhs = _eta_rhs(r_func, p.delta, p.lam)
    coarse_t = np.linspace(0.0, p.T, n_steps + 1)
    fine_t = np.linspace(0.0, p.T, 2 * n_steps + 1)
    coarse = _rk4(rhs, y0, coarse_t)
    fine = _rk4(rhs, y0, fine_t)[::2]
    err = float(np.max(np.abs(fine - coarse))) / 15.0
    if err > tol:
        raise StepFailure(f"RK4 error estimate {err:.3g} exceeds {tol:g}; increase n_steps (now {n_steps})")
    eta = fine + (fine - coarse) / 15.0
    eta_dot = np.array([rhs(t, y) for t, y in zip(coarse_t, eta)])
    return EtaTrajectory(coarse_t, eta, eta_dot, err)


def adiabatic_eta(t, p: AdiabaticScheduleParams):
    """Instantaneous normalised coupling ``(lam/4 delta)(e^{3r} + e^{-r})``."""
    r = adiabatic_r(t, p)
    return p.lam / (4 * p.delta) * (np.exp(3 * r) + np.exp(-r))


def normalized_coupling(r, lam, delta=1.0):
    """Same as :func:`adiabatic_eta` but for an explicit squeezing value."""
    return lam / (4 * delta) * (np.exp(3 * np.asarray(r)) + np.exp(-np.asarray(r)))


def cd_coupling_lambda(traj: EtaTrajectory, atol: float = 1e-8) -> np.ndarray:
    """Qubit-cavity coupling ``lam(t) = -2i eta'(t)`` that reproduces the CD term.

    Only defined when ``eta'`` is purely imaginary along the whole trajectory.
    """
    eta_dot = np.asarray(traj.eta_dot)
    worst = float(np.max(np.abs(eta_dot.real))) if eta_dot.size else 0.0
    if worst > atol:
        raise NonRealCoupling(f"max |Re eta'| = {worst:.3g} > {atol:g}; coupling would be complex")
    return (-2j * eta_dot).real
