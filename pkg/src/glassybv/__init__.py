"""Quenched Hadamard-gate disorder in the Bernstein-Vazirani algorithm."""

__version__ = "0.1.0"

from .bloch import BlochAngles, UnitVector3, from_cartesian, rotate_pole_to_x, to_cartesian
from .disorder import (
    ClassicalDisorder,
    ClassicalKind,
    QuantumDisorder,
    QuantumKind,
    StrengthReport,
    classical_mean_and_strength,
    classical_param_for_strength,
    quantum_param_for_strength,
    quantum_strength,
    sample_classical,
    sample_quantum,
)
from .engine import (
    NoiseRealization,
    SecretString,
    classical_success,
    statevector_success_probability,
    success_probability,
)
from .fitting import FitModel, FitResult, fit
from .quench import (
    LnPStats,
    QuenchEstimate,
    StoppingRule,
    advantage_curve,
    analytic_uniform_special,
    lnP_statistics,
    quenched_average,
)
