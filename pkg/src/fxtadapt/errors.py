from __future__ import annotations


class FxtAdaptError(Exception):
    """Base class for library errors."""


class ConfigError(FxtAdaptError):
    pass


class SimulationDivergenceError(FxtAdaptError):
    def __init__(self, t: float, message: str = "") -> None:
        self.t = float(t)
        super().__init__(message or f"simulation diverged at t={self.t:.6g}")


class EstimatorSingularityError(FxtAdaptError):
    pass


class DomainError(FxtAdaptError, ValueError):
    pass


class QPError(FxtAdaptError, ValueError):
    pass


# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SAFETY = 2
EXIT_ABORT = 3
