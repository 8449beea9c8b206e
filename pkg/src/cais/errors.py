"""Exception types shared across the package."""


class CaisError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefiniteError(CaisError):
    """A matrix expected to be SPD failed Cholesky factorization."""


class RepairFailedError(CaisError):
    """Jitter escalation could not restore positive definiteness."""


class AllWeightsZeroError(CaisError):
    """Every importance weight is zero (all log-weights are -inf)."""


class GammaUnreachableError(CaisError):
    """Tempering cannot reach the requested ESS: too few finite weights."""


class ParseError(CaisError):
    """An experiment config file is malformed."""


class InvalidConstraintError(CaisError):
    """A resolved experiment config violates a structural constraint."""


class BudgetExceededError(CaisError):
    """The requested run would exceed the target-evaluation budget."""
