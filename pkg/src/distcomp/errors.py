"""Exception types shared across the package."""

DEFAULT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """Raised when an exhaustive enumeration would exceed the configured budget."""

    def __init__(self, needed, budget):
        super().__init__(
            f"enumeration needs {needed:,} evaluations, budget is {budget:,}"
        )
        self.needed = needed
        self.budget = budget


class PreconditionError(ValueError):
    """A hypothesis required by an operation does not hold.

    ``hypothesis`` names the violated assumption in plain words, e.g.
    ``"smoothness with respect to Y"``.
    """

    def __init__(self, hypothesis, detail=""):
        msg = f"precondition failed: {hypothesis}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.hypothesis = hypothesis


def check_budget(needed, budget):
    if budget is None:
        budget = DEFAULT_BUDGET
    if needed > budget:
        raise BudgetExceeded(needed, budget)
