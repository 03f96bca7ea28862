class LaguerreError(Exception):
    pass


class ModelError(LaguerreError, ValueError):
    """Parameters outside the admissible range of a model."""


class DivergentMassError(LaguerreError, ValueError):
    """The intensity measure of the requested region is infinite."""


class PreconditionError(LaguerreError, ValueError):
    pass


class TruncationError(LaguerreError):
    """A truncation plan could not be built for some window size."""

    def __init__(self, message: str, n: float | None = None):
        super().__init__(message)
        self.n = n
