"""Exception types."""


class ConfigurationError(ValueError):
    """Invalid scenario, layer or optimizer configuration."""


class ShapeError(ValueError):
    """Array lengths are inconsistent with each other."""


class SingularLayerError(ArithmeticError):
    """A compensation layer cannot be inverted at the given parameters.

    ``magnitude`` holds the offending pivot (``|h0|`` for FIR layers, the
    determinant for IQ layers).
    """

    def __init__(self, message, magnitude=None):
        super().__init__(message)
        self.magnitude = magnitude


class NotIsomorphicError(TypeError):
    """The layer kind has no closed-form parameter inverse."""


class TrainingError(RuntimeError):
    """The optimizer could not make progress."""


class BenchmarkError(RuntimeError):
    """Too many Monte-Carlo trials failed."""
