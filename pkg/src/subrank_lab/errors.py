"""Exception hierarchy shared by all modules."""


class SubrankError(Exception):
    """Base class for every error raised by subrank_lab."""


class MalformedInput(SubrankError, ValueError):
    """A document or argument does not match the expected schema."""


class ShapeMismatch(SubrankError, ValueError):
    pass


class NotConcise(SubrankError):
    pass


class DegenerateEigenvalues(SubrankError):
    pass


class ResidualTooLarge(SubrankError):
    pass


class PairingFailed(SubrankError):
    pass


class SpanDeficient(SubrankError):
    pass


class RetriesExhausted(SubrankError):
    pass


class BasisSingular(SubrankError):
    pass


class SingularMap(SubrankError):
    pass


class StructuralBound(SubrankError, ValueError):
    """Requested certificate size exceeds the smallest mode dimension."""
