"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so each class corresponds to one kind of
failure rather than one call site.
"""


class GraphgaugeError(Exception):
    """Base class for all library errors."""


class ValidationError(GraphgaugeError, ValueError):
    """Malformed input: bad graph, state, Ds function or configuration."""


class InvalidGluing(ValidationError):
    """Gluing matrix with determinant other than -1 or zero b-entry."""


class StateNotIsometric(ValidationError):
    """A supposed isometric state does not solve the compatibility equation."""


class CompositionError(ValidationError):
    """Dipole states that cannot be glued into one state."""


class DomainError(ValidationError):
    """Argument outside the domain of a closed-form formula."""


class NotHermitian(ValidationError):
    """Connection is not compatible with the hermitian structure."""


class NoSolution(GraphgaugeError):
    """A search or closed-form solver found nothing."""


class BalanceError(GraphgaugeError):
    """Product of k_w / k_{-w} around a circuit differs from 1."""

    def __init__(self, message, circuit=None, product=None):
        super().__init__(message)
        self.circuit = circuit
        self.product = product


class OrientationError(GraphgaugeError):
    """Charges of the two flags of a pair have opposite signs."""
