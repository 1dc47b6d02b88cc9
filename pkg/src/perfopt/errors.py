"""Exceptions shared across the optimizers and the harness."""


class BudgetTooSmallError(ValueError):
    """The deployment budget T is too small for the schedule to run at all."""


class BudgetExhausted(RuntimeError):
    """Raised by a deployment client when the T-th deployment has been spent."""


class DomainError(ValueError):
    """A decision lies outside the environment's box domain."""
