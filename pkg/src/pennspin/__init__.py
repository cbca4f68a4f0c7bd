"""Pulse-schedule compiler and exact verifier for spin models of trapped electrons."""

from .compiler import TargetSpec, Variant, compile, effective_hamiltonian, schedule_unitary
from .errors import PennspinError
from .physics import CouplingMatrix, TrapParams, coupling_constants, derive_frequencies
from .schedule import Free, Pulse, PulseSchedule

__all__ = [
    "CouplingMatrix",
    "Free",
    "PennspinError",
    "Pulse",
    "PulseSchedule",
    "TargetSpec",
    "TrapParams",
    "Variant",
    "compile",
    "coupling_constants",
    "derive_frequencies",
    "effective_hamiltonian",
    "schedule_unitary",
]

__version__ = "0.1.0"
