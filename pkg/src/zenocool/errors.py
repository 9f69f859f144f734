"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConvergenceWarning(RuntimeWarning):
    """A numerical routine stopped before reaching its tolerance."""
