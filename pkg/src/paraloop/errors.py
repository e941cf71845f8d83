"""Exception hierarchy shared by the solvers and the scenario runner."""


class ParaloopError(Exception):
    """Base class for all package errors."""


class ConfigError(ParaloopError, ValueError):
    """Invalid receiver, geometry, or scenario configuration."""


class SolverError(ParaloopError, RuntimeError):
    """A numerical solver could not produce a trustworthy result."""


class SingularCircuitError(SolverError):
    """The mesh impedance (or harmonic matrix) is singular at a frequency."""

    def __init__(self, message, frequency=None):
        super().__init__(message)
        self.frequency = frequency


class IllConditionedError(SolverError):
    """Conversion matrix too close to singular; usually oscillation onset."""

    def __init__(self, message, condition=None, frequency=None):
        super().__init__(message)
        self.condition = condition
        self.frequency = frequency


class ConvergenceError(SolverError):
    """Harmonic truncation or an iterative procedure did not settle."""


class CalibrationError(SolverError):
    """No admissible parameter satisfies a calibration condition."""


class DivergenceError(SolverError):
    """Transient state grew without bound (parametric oscillation or bad dt)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EqualizerDivergenceError(SolverError):
    """LMS training error grew instead of decreasing."""


class LevelNotCrossedError(ParaloopError, ValueError):
    """A spectrum never falls to the requested level on one side of its peak."""
