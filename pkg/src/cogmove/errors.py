"""Exception hierarchy shared by every cogmove module."""


class CogmoveError(Exception):
    """Base class for all library errors."""


class ConfigurationError(CogmoveError, ValueError):
    """Invalid parameters, grid sizes, or model options."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class DegenerateLandscapeError(CogmoveError, ValueError):
    """A landscape average vanished where a ratio needs it."""


class HorizonError(CogmoveError, ValueError):
    """A memory horizon is too short for the temporal kernel tail."""


class HistoryLookupError(CogmoveError, LookupError):
    """A history query reached into the future."""


class StepRejectedError(CogmoveError, RuntimeError):
    """A fixed time step violates the advective CFL bound."""


class DivergenceError(CogmoveError, RuntimeError):
    """NaN/Inf or a negative density undershoot during a run."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class RootFindingError(CogmoveError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class AnalysisUnavailableError(CogmoveError, ValueError):
    """No homogeneous steady state to linearize about."""


class MeasureUndefinedError(CogmoveError, ValueError):
    pass


class WindowError(CogmoveError, ValueError):
    """Measure window lies outside the trajectory."""


class TruncationError(CogmoveError, ValueError):
    """Lattice kernel support too narrow for the requested accuracy."""
