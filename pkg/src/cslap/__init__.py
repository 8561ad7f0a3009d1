"""Laplace-type semiclassical asymptotics for coherent-state expectation values.

The package propagates the phase and leading amplitude of the localized
expansion exp(S/hbar) b0 along the characteristics of the associated
Hamilton-Jacobi equation, and validates the result against an exact
truncated-Fock-space oracle and the closed-form Kerr oscillator.
"""

from .characteristics import CharState, Trajectory, VariationalFrame, integrate
from .fock import FockSpace, coherent_vector, cutoff_search, expectation, wick_operator
from .kerr import KerrParams, kerr_audit, kerr_b0, kerr_flow_map, kerr_phase
from .phase import PhaseJet, initial_momentum, invert_flow_map, phase_at
from .symbols import (
    WickSymbol,
    beam_splitter,
    cross_kerr,
    effective_hamiltonian,
    harmonic,
    kerr,
    lagrangian,
)
from .transport import (
    ObservableSpec,
    QuadSpec,
    b0_at,
    evaluate_asymptotic,
    resolve_polynomial_initial,
    transport_coefficient,
)
from .verification import hbar_convergence, invariant_suite, pde_residual

__all__ = [
    "CharState", "Trajectory", "VariationalFrame", "integrate",
    "FockSpace", "coherent_vector", "cutoff_search", "expectation", "wick_operator",
    "KerrParams", "kerr_audit", "kerr_b0", "kerr_flow_map", "kerr_phase",
    "PhaseJet", "initial_momentum", "invert_flow_map", "phase_at",
    "WickSymbol", "beam_splitter", "cross_kerr", "effective_hamiltonian",
    "harmonic", "kerr", "lagrangian",
    "ObservableSpec", "QuadSpec", "b0_at", "evaluate_asymptotic",
    "resolve_polynomial_initial", "transport_coefficient",
    "hbar_convergence", "invariant_suite", "pde_residual",
]

__version__ = "0.1.0"
