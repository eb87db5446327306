"""Exception hierarchy shared across the library.

Out-of-support density evaluations are values (-inf), not errors; these
exceptions cover genuine failures: unparseable input, missing closed forms,
and numerical routines that did not converge.
"""


class LsklError(Exception):
    """Base class for all library errors."""


class ParseError(LsklError):
    """Malformed model, prior, grid or config text."""


class NoClosedFormError(LsklError):
    """Requested moment has no tabled closed form; use numeric integration."""


class DataModelMismatchError(LsklError):
    """Dataset contains points outside the support of the model it is
    claimed to come from."""


class IntegrationFailureError(LsklError):
    """Adaptive quadrature did not reach the requested tolerance within the
    subdivision budget.  Carries the partial estimate and its error bound."""

    def __init__(self, message: str, partial: float, error_bound: float):
        super().__init__(message)
        self.partial = partial
        self.error_bound = error_bound


class OptimizationFailureError(LsklError):
    """No optimizer start converged.  Carries the best point seen so far."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class MLEFailureError(LsklError):
    """Maximum-likelihood fit failed (profile search did not converge or the
    data admit no valid parameter)."""


class NoModelExplainsDataError(LsklError):
    """Every candidate model assigns the data zero likelihood."""
