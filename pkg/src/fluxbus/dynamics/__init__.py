"""Driven dynamics of the composite model: unitary, semiclassical, and open."""

from .budget import ErrorBudget, error_budget
from .evolution import DriveConfig, UnitaryTrajectory, evolve_unitary
from .fidelity import (CZ, FidelityReport, average_fidelity_36,
                       state_fidelity)
from .gate import (COMPUTATIONAL, CalibrationResult, GateResult,
                   calibrate_gate, gate_simulate, semiclassical_gate,
                   semiclassical_phase)
from .noise import (NoiseModel, OpenSystemResult, epsilon_q, lindblad_evolve,
                    master_equation_evolve, relaxation_dephasing_error,
                    relaxation_dephasing_factor, tphi_from_t2)

__all__ = [
    "CZ", "COMPUTATIONAL", "CalibrationResult", "DriveConfig", "ErrorBudget",
    "FidelityReport", "GateResult", "NoiseModel", "OpenSystemResult",
    "UnitaryTrajectory", "average_fidelity_36", "calibrate_gate",
    "epsilon_q", "error_budget", "evolve_unitary", "gate_simulate",
    "lindblad_evolve", "master_equation_evolve",
    "relaxation_dephasing_error", "relaxation_dephasing_factor",
    "semiclassical_gate", "semiclassical_phase", "state_fidelity",
    "tphi_from_t2",
]
