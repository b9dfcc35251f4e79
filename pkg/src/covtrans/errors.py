"""Exception types shared across the library."""


class CovtransError(Exception):
    """Base class for all library errors."""


class FeasibilityError(CovtransError):
    """Parameters violate a construction's precondition."""


class BudgetExceededError(CovtransError):
    """An exhaustive check would exceed the step budget; use sampled mode."""


class ConstructionError(CovtransError):
    """Randomized construction exhausted its attempt budget.

    Carries per-attempt diagnostics in ``history``: a list of dicts with the
    member sizes seen and, for verification rejects, the first failing tuple.
    """

    def __init__(self, message: str, attempts: int, history: list):
        super().__init__(message)
        self.attempts = attempts
        self.history = history


class IntegrityError(CovtransError):
    """A certificate document is internally inconsistent (tampered)."""


class SoundnessError(CovtransError):
    """A verified-construction guarantee failed; indicates a real bug."""
