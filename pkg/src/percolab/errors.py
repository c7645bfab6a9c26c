"""Exception hierarchy shared by all percolab modules.

Exit-code mapping used by the CLI/service lives in ``percolab.cli``:
config errors -> 2, InsufficientDataError -> 3,
NumericInconsistencyError / LemmaViolationError -> 4.
"""


class PercolabError(Exception):
    """Base class for all percolab errors."""


class InvalidArgumentError(PercolabError, ValueError):
    """A precondition on an operation's arguments was violated."""


class InsufficientDataError(PercolabError):
    """An estimator accepted zero samples (or too few to proceed)."""


class NumericInconsistencyError(PercolabError):
    """Two independent numeric routes disagreed beyond tolerance."""


class DivergentIntegralError(InvalidArgumentError):
    """The requested integral does not converge for these parameters."""


class OutOfDomainError(InvalidArgumentError):
    """Evaluation requested at a point where the integral diverges."""


class SearchFailedError(PercolabError):
    """A bracketing/bisection search failed to locate its target."""


class HypothesisNotMetError(PercolabError):
    """A verification harness's hypothesis failed on the supplied input."""


class LemmaViolationError(PercolabError):
    """A proven inequality failed numerically: implementation bug."""
