"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to, so scripted
harnesses can branch on the failure class without parsing messages.
"""


class HeatDensError(Exception):
    exit_code = 1

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), "exit_code": self.exit_code}


class DomainError(HeatDensError, ValueError):
    """Evaluation point or argument outside the open domain 0 < x < 1, t > 0."""

    exit_code = 2


class ConfigError(HeatDensError, ValueError):
    """Invalid run configuration; ``violations`` lists every problem found."""

    exit_code = 2

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def to_dict(self):
        d = super().to_dict()
        d["violations"] = self.violations
        return d


class InvalidLawError(HeatDensError, ValueError):
    """A probability law fails admission (moments, normalization, summability)."""

    exit_code = 2


class WrongModelError(HeatDensError, TypeError):
    """Density route called with a coefficient model of the wrong kind."""

    exit_code = 2


class UnsupportedLawError(HeatDensError, NotImplementedError):
    """No sampler or node rule is available for the requested law."""

    exit_code = 2


class HypothesisViolation(HeatDensError):
    """A hypothesis required by a density formula does not hold."""

    exit_code = 3


class DegeneracyError(HeatDensError, ArithmeticError):
    """Singular covariance or degenerate conditional variance."""

    exit_code = 4

    def __init__(self, message, condition_number=None):
        self.condition_number = condition_number
        super().__init__(message)

    def to_dict(self):
        d = super().to_dict()
        if self.condition_number is not None:
            d["condition_number"] = self.condition_number
        return d


class SingularCovarianceError(DegeneracyError):
    pass


class DegenerateDistributionError(DegeneracyError):
    """Samples with (numerically) zero spread; no density can be estimated."""


class NonConvergenceError(HeatDensError):
    """Quadrature refinement did not reach the requested tolerance."""

    exit_code = 5

    def __init__(self, message, grid=None, history=None):
        self.grid = grid
        self.history = list(history or [])
        super().__init__(message)

    def to_dict(self):
        d = super().to_dict()
        d["history"] = self.history
        return d
