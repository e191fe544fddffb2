"""Counterdiabatic preparation of qubit-cavity cat states in the quantum Rabi model.

Submodules: :mod:`fock` (operators and states), :mod:`schedules` (squeezing
ramps, noise parameters, coherent amplitude), :mod:`hamiltonians`,
:mod:`evolve` (Schrödinger and squeezed-bath master equations),
:mod:`observables` and :mod:`experiments` (scenario runner and CLI).
"""
__version__ = "0.1.0"

from . import evolve, fock, hamiltonians, observables, schedules  # noqa: E402
from .exceptions import *  # noqa: F401,F403,E402
