"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 2, exceeded
exploration/memory budgets exit 3, failed statistical assertions exit 4.
"""


class FpplabError(Exception):
    """Base class for all package errors."""


class ConfigError(FpplabError):
    """Malformed or inconsistent experiment configuration."""


class HypothesisError(FpplabError):
    """A distribution or group fails a stated precondition (named rule)."""


class BudgetError(FpplabError):
    """A memory cap or exploration budget was exceeded.

    Carries enough context to report what was reached when the cap hit.
    """

    def __init__(self, message, *, budget=None, reached=None, best_bound=None):
        super().__init__(message)
        self.budget = budget
        self.reached = reached
        self.best_bound = best_bound


class DiagnosticError(FpplabError):
    """An estimator could not produce a meaningful result (e.g. empty fit range)."""
