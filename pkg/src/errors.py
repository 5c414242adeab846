"""
Exception hierarchy for the growth laboratory.

Every error carries the CLI exit code it maps to:
    1 - an acceptance invariant failed
    2 - configuration / input problem
    3 - numerical failure (solver, integrator, spectral consistency)
"""

from typing import Any, Dict


class LabError(Exception):
    """Base class for all laboratory errors."""

    exit_code = 3

    def details(self) -> Dict[str, Any]:
        """Extra fields written to the diagnostic JSON."""
        return {}


# ============================================================================
# EXIT CODE 2: configuration and inputs
# ============================================================================

class ConfigurationError(LabError, ValueError):
    exit_code = 2


class ShapeError(LabError, ValueError):
    exit_code = 2


class DependencyError(LabError, RuntimeError):
    """An upstream artifact is missing; names the command that produces it."""

    exit_code = 2

    def __init__(self, message: str, required_command: str):
        super().__init__(message)
        self.required_command = required_command

    def details(self) -> Dict[str, Any]:
        return {'required_command': self.required_command}


# ============================================================================
# EXIT CODE 1: invariant failures
# ============================================================================

class InvariantFailure(LabError, AssertionError):
    exit_code = 1

    def __init__(self, message: str, failed: Dict[str, Any] = None):
        super().__init__(message)
        self.failed = failed or {}

    def details(self) -> Dict[str, Any]:
        return {'failed_checks': self.failed}


# ============================================================================
# EXIT CODE 3: numerical failures
# ============================================================================

class NumericalFailure(LabError, ArithmeticError):
    exit_code = 3


class SolverFailure(NumericalFailure):
    def __init__(self, message: str, last_residual: float):
        super().__init__(message)
        self.last_residual = float(last_residual)

    def details(self) -> Dict[str, Any]:
        return {'last_residual': self.last_residual}


class NoSolitonError(NumericalFailure, ValueError):
    """lambda <= 2: the ground-state equation has no nontrivial solution."""


class DegeneracyError(NumericalFailure):
    pass


class AssemblyError(NumericalFailure):
    pass


class SpectralConsistencyError(NumericalFailure):
    pass


class ResonanceDegeneracyError(NumericalFailure):
    pass


class DomainError(NumericalFailure, ValueError):
    pass


class StiffnessError(NumericalFailure):
    pass


class BlowUpError(NumericalFailure):
    pass


class RangeError(NumericalFailure, ValueError):
    pass


class BootstrapViolation(NumericalFailure):
    def __init__(self, message: str, s: float):
        super().__init__(message)
        self.s = float(s)

    def details(self) -> Dict[str, Any]:
        return {'s': self.s}


class NotConvergedError(NumericalFailure):
    pass
