"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the interval a family or measure lives on."""


class CapacityError(ValueError):
    """More interpolation constraints than available coefficients."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not produce a trustworthy answer.

    ``payload`` carries whatever partial state is useful for diagnosis
    (last Remez reference, KKT condition number, ...).
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload
