"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Dimension or block-structure mismatch."""


class ConfigurationError(ValueError):
    """A problem or solver configuration is incomplete or inconsistent."""


class StepSizeError(ValueError):
    """A step size falls outside the admissible interval."""


class OperatorNormError(RuntimeError):
    """Power iteration did not converge; ``best`` holds the last estimate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class DivergenceError(RuntimeError):
    """An iterate became non-finite or exceeded the divergence threshold."""

    def __init__(self, message, workspace=None):
        super().__init__(message)
        self.workspace = workspace


class UnsupportedEvaluation(NotImplementedError):
    """An objective term has no closed form for the given function pair."""


class InfeasibleError(ValueError):
    """Every sampled point has an infinite objective value."""
