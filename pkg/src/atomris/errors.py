"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration file or SimConfig is malformed or incomplete."""


class SingularMatrixError(ValueError):
    """A matrix inversion step is numerically singular.

    The message names the offending factor (e.g. "A^H A" or "B B^H") and
    reports its condition number.
    """


class BudgetExceededError(RuntimeError):
    """A brute-force operation would exceed its configured cost budget.

    The message carries the estimated cost so callers can report it.
    """
