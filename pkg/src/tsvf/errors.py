"""Exception hierarchy. Everything raised on purpose derives from TSVFError."""


class TSVFError(Exception):
    pass


class DimensionMismatch(TSVFError, ValueError):
    pass


class NotHermitian(TSVFError, ValueError):
    pass


class NotUnitary(TSVFError, ValueError):
    pass


class NonCommuting(TSVFError, ValueError):
    """The product of two observables is not Hermitian."""


class ImpossiblePostSelection(TSVFError):
    """No outcome is compatible with both the pre- and the post-selection."""


class UndefinedWeakValue(TSVFError):
    """Weak value requested for orthogonal selections or without a post-selection."""


class ScenarioError(TSVFError, ValueError):
    pass


class DimensionBudgetExceeded(ScenarioError):
    pass
