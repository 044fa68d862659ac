"""Exception types shared across the package."""


class PoissonLabError(Exception):
    """Base class for all package errors."""


class DomainError(PoissonLabError):
    """Input point lies outside the transform's domain."""


class SingularPoint(PoissonLabError):
    """An orbit hit (or came within 1e-12 of) the singular set.

    ``step`` is the iteration index at which the orbit died; ``x`` the
    offending point, when known.
    """

    def __init__(self, msg, step=0, x=None):
        super().__init__(msg)
        self.step = step
        self.x = x


class NotInvertibleHere(PoissonLabError):
    """Requested preimages at a branch boundary or outside the range."""


class WindowTooSmall(PoissonLabError):
    """The configuration's window does not cover the queried region."""


class EmptyConfiguration(PoissonLabError):
    """Operation requires at least one point."""


class NotInX0(PoissonLabError):
    """Marked sample has a configuration point at or left of the mark."""


class Censored(PoissonLabError):
    """No leftmost return within the step cap."""

    def __init__(self, cap):
        super().__init__(f"no return within {cap} steps")
        self.cap = cap


class WindowBudgetExceeded(PoissonLabError):
    """Certifying the result would require extending past the window budget."""

    def __init__(self, required, budget):
        super().__init__(f"needs window {required:.6g}, budget {budget:.6g}")
        self.required = required
        self.budget = budget


class TooFewSamples(PoissonLabError):
    """Sample size below the minimum for the requested test."""


class DegenerateExpected(PoissonLabError):
    """Expected counts cannot be merged into a valid chi-square table."""


class UnknownExperiment(PoissonLabError):
    """Experiment name not present in the registry."""
