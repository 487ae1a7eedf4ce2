"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class InvariantViolation(ArithmeticError):
    """A numerical object failed one of its structural checks."""


class UnphysicalStateError(InvariantViolation):
    """A covariance matrix violates the uncertainty bound."""


class DegenerateDistributionError(DomainError):
    """Zero modulation variance; the Gaussian density does not exist."""


class NoThresholdError(RuntimeError):
    """The PNR/HD mutual-information difference never changes sign."""


class NegligibleOutcomeError(ArithmeticError):
    """A count outcome has too little probability to condition on."""


class SupportExplosionError(RuntimeError):
    """An empirical histogram has more cells than allowed."""


class TruncationSaturationWarning(UserWarning):
    """A truncation hit ``max_cutoff``; the tail budget is not guaranteed."""
