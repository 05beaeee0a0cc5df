"""Errors raised by the library beyond plain ValueError argument checks."""


class EastModelError(Exception):
    """Base class for library-specific failures."""


class StateSpaceTooLarge(EastModelError):
    """Exact enumeration was requested for a chain that does not fit the budget."""


class NotReversible(EastModelError):
    """A generator failed the detailed-balance check against the supplied measure."""


class SolverDidNotConverge(EastModelError):
    """The iterative eigensolver stopped without a trustworthy eigenpair."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CapExceeded(EastModelError):
    """A path or search construction exceeded its configured size cap."""


class BudgetExceeded(EastModelError):
    """A search space exceeded the configured enumeration budget."""


class FrontRunaway(EastModelError):
    """A simulation front outgrew the configured site cap."""


class InsufficientConditioning(EastModelError):
    """Too few replicas satisfied the conditioning event to build an estimate."""


class NotAnExtension(EastModelError):
    """The second configuration does not extend the first one."""


class SubsetTooLarge(EastModelError):
    """Exact subset dynamic programming was requested for too many particles."""
