"""Exception hierarchy shared by every hflow module."""


class HflowError(Exception):
    """Base class for hflow failures."""


class InvalidInput(HflowError, ValueError):
    """Arguments are malformed, mismatched, or out of range."""


class DomainError(HflowError, ValueError):
    """A point does not belong to the space it claims (e.g. SPD not PD)."""


class UnsupportedVariant(HflowError, NotImplementedError):
    """The requested operation has no implementation for this variant/backend."""


class SolverFailure(HflowError, RuntimeError):
    """An iterative solver stopped without certifying its answer.

    Carries the best iterate found and the certificate gap at that iterate.
    """

    def __init__(self, message, best=None, gap=None, step=None, partial=None):
        super().__init__(message)
        self.best = best
        self.gap = gap
        self.step = step
        self.partial = partial


class CertificationFailure(HflowError, AssertionError):
    """A sampled certificate (axiom, distortion bound, ...) was violated."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
