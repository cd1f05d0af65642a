"""Exception hierarchy.

Each family maps to one CLI exit code (see ``beliefdesign.cli``).
"""


class BeliefDesignError(Exception):
    exit_code = 1


class UsageError(BeliefDesignError):
    exit_code = 1


class ValidationError(BeliefDesignError):
    """Scenario or distribution violates a model assumption."""

    exit_code = 2

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class ScenarioParseError(ValidationError):
    pass


class ZeroEntry(ValidationError):
    pass


class NonMonotoneBias(ValidationError):
    pass


class NonMonotoneStates(ValidationError):
    pass


class MarginalMismatch(ValidationError):
    pass


class UnorderedSignals(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class ZeroColumn(ValidationError):
    pass


class DegenerateBias(ValidationError):
    pass


class PreconditionError(BeliefDesignError):
    exit_code = 3


class NotBinary(PreconditionError):
    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__(f"operation requires a 2x2 scenario, got {self.shape[0]}x{self.shape[1]}")


class HypothesisViolated(PreconditionError):
    def __init__(self, message, lhs=None, rhs=None):
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(message)


class KappaOutOfRange(UsageError):
    pass


class ConvergenceFailure(BeliefDesignError):
    exit_code = 4

    def __init__(self, gap, iterations):
        self.gap = gap
        self.iterations = iterations
        super().__init__(f"no convergence after {iterations} iterations (duality gap {gap:.3e})")
