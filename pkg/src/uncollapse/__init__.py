"""Simulation and analytics for undoing generalized qubit measurements.

The package covers the abstract POVM/Kraus formalism of measurement
reversal, closed-form statistics for a continuously monitored charge
qubit, a stochastic trajectory engine with reproducible noise streams,
the null-result phase-qubit protocol, and the step sequence that undoes
an arbitrary measurement of many entangled qubits.
"""

__version__ = "0.1.0"

from . import charge, evolving, linalg, measurement, multiqubit, phase, stats, trajectory

__all__ = [
    "charge",
    "evolving",
    "linalg",
    "measurement",
    "multiqubit",
    "phase",
    "stats",
    "trajectory",
    "__version__",
]
