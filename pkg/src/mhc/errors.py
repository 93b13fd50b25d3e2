"""Exception types shared across the package."""


class MhcError(Exception):
    """Base class for all package-specific errors."""


class DegenerateRotation(MhcError):
    """A 6D rotation block cannot be orthonormalized (near-zero triple)."""


class NotARotation(MhcError):
    """A matrix failed the orthonormality / det(+1) check."""


class ClipTooShort(MhcError):
    """A motion clip has fewer frames than an operation requires."""


class EmptyBank(MhcError):
    """A pose bank required for sampling is empty."""


class DatasetTooSmall(MhcError):
    """The dataset cannot supply the requested episode material."""


class NumericalDivergence(MhcError):
    """Simulation state magnitude exceeded the safety bound."""


class ShapeMismatch(MhcError):
    """Array shapes are inconsistent with the declared network spec."""


class NonFiniteLoss(MhcError):
    """A training loss evaluated to NaN or infinity."""


class LengthMismatch(MhcError):
    """Generated motion and target directive differ in length."""


class NoSelectedJoints(MhcError):
    """A metric was asked to average over an empty joint selection."""


class InsufficientData(MhcError):
    """Not enough logged transitions to answer a planner query."""


class NoConvergence(MhcError):
    """An iterative solver hit its iteration cap before the tolerance."""


class SchemaError(MhcError):
    """A JSON document does not match its declared schema."""


class ProtocolError(MhcError):
    """A malformed or out-of-order wire message was received."""


class PortInUse(MhcError):
    """The requested server port is already bound."""
