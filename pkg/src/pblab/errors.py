"""Exception types shared across the package.

The CLI maps these onto its exit-code contract, so solver and tuning code
must raise the specific class rather than a bare ValueError whenever the
failure is one of the named conditions.
"""


class PblabError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(PblabError, ValueError):
    """Malformed or out-of-contract input (bad shapes, non-finite data, q < 1, ...)."""


class AssumptionViolationError(PblabError):
    """A model assumption needed by the theory does not hold on this data.

    Examples: Y = 0, a dual noise term equal to zero, penalty matrices whose
    kernels intersect nontrivially when a trivial intersection is required.
    """


class DegenerateInputError(PblabError):
    """The square-root link hit a (near-)zero residual where its derivative blows up."""


class NonConvergenceError(PblabError):
    """An iterative procedure ran out of iterations.

    Carries the iterate trace so failed runs can be audited.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class InvalidPremiseError(PblabError, ValueError):
    """A bound was requested under a premise its statement excludes (e.g. c <= 1)."""


class CertificationError(PblabError):
    """A bound check that must hold failed, or a campaign exceeded its failure budget."""
