"""
Graph Agents Exceptions Module

This module contains the exception hierarchy used across the lab. Every error
carries a stable machine-readable code so the management commands can report
failures as a single JSON line.
"""


class LabError(Exception):
    """
    Base class for every error raised by the lab.

    params:
        message: Human-readable description of the failure
        details: Optional dict with structured context (ids, sizes, seeds)
    """

    code = 'lab_error'

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def as_dict(self):
        """
        Serialize the error for the machine-readable error line.

        returns:
            Dict with status, error code, message and details
        """
        payload = {'status': 'error', 'error': self.code, 'message': self.message}
        if self.details:
            payload['details'] = self.details
        return payload


class GraphError(LabError):
    code = 'invalid_graph'


class BudgetExceeded(LabError):
    code = 'budget_exceeded'


class WalkBoundError(LabError):
    code = 'walk_bound_violated'


class TraceIncomplete(LabError):
    code = 'trace_incomplete'


class ShapeError(LabError):
    code = 'shape_mismatch'


class NonFiniteError(LabError):
    code = 'non_finite'


class TrainingDiverged(LabError):
    """Raised when the loss turns non-finite; details name config hash, step and seed."""

    code = 'training_diverged'


class ConfigError(LabError):
    code = 'invalid_config'


class FlagError(ConfigError):
    """Invalid command-line flag values; commands exit with status 2."""

    code = 'invalid_flags'


class MissingFile(LabError):
    code = 'missing_file'


class CheckFailed(LabError):
    """A verification suite finished with failing checks; details list their names."""

    code = 'check_failed'
