"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function or density."""


class NearSingularError(DomainError):
    """A matrix failed the relative positive-definiteness floor.

    The offending eigenvalue (smallest one found) is kept on ``eigenvalue``.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ShapeError(ValueError):
    """Structurally invalid input: wrong dimensions or block counts."""
