"""Exception hierarchy shared by the hiernet modules."""


class HiernetError(Exception):
    """Base class for all hiernet errors."""


class ValidationError(HiernetError, ValueError):
    """Invalid input: malformed files, bad indices, inconsistent shapes."""


class MarkovViolationError(ValidationError):
    """A dependency graph joins two dyads that share no network node."""

    def __init__(self, violations):
        self.violations = list(violations)
        pairs = ", ".join(f"{a}~{b}" for a, b in self.violations[:10])
        more = "" if len(self.violations) <= 10 else f" (+{len(self.violations) - 10} more)"
        super().__init__(f"Markov dependence property violated by: {pairs}{more}")


class ComputationError(HiernetError, RuntimeError):
    """A numerical procedure could not produce a result."""


class CoreTooLargeError(ComputationError):
    """The non-isolated core of the dependency graph exceeds the enumeration cap."""


class NonexistentMLEError(ComputationError):
    """The maximum likelihood estimate does not exist for the observed data."""


class ConvergenceError(ComputationError):
    """An iterative procedure exhausted its iteration budget."""
