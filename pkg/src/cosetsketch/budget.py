"""Enumeration budgets shared by the brute-force routines."""

import os

DEFAULT_BUDGET = 10**7
ENV_VAR = "LATTICE_SKETCH_BUDGET"


class BudgetExceeded(RuntimeError):
    """An enumeration would visit more points than allowed.

    Enumerations refuse up front (or abort mid-way) instead of silently
    truncating, and report how much budget the request needed.
    """

    def __init__(self, required, budget, what="points"):
        self.required = required
        self.budget = budget
        super().__init__(f"enumeration needs {required} {what}, budget is {budget}")


def default_budget() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET
    value = int(raw)
    if value <= 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {raw!r}")
    return value


def resolve(budget=None) -> int:
    if budget is None:
        return default_budget()
    if budget <= 0:
        raise ValueError("budget must be positive")
    return int(budget)


def require(needed, budget=None, what="points") -> int:
    budget = resolve(budget)
    if needed > budget:
        raise BudgetExceeded(needed, budget, what)
    return budget
