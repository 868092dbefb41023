from typing import Optional, Tuple


class RswrError(Exception):
    """Base class for every error raised by the solver."""


class InvalidInputError(RswrError, ValueError):
    """Malformed arguments: mismatched shapes, bad indices, missing series."""


class StabilityError(InvalidInputError):
    """Courant number outside (0, 1]."""

    def __init__(self, courant: float):
        self.courant = courant
        super().__init__(f"Courant number {courant!r} outside (0, 1]; explicit scheme is unstable")


class ConfigurationError(RswrError):
    """A run configuration that cannot be executed."""

    def __init__(self, message: str, field: Optional[str] = None, kind: str = "schema"):
        self.field = field
        self.kind = kind
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")


class ProtocolError(RswrError):
    """The window protocol cannot make progress or received an unexpected message."""

    def __init__(
        self,
        message: str,
        pair: Optional[Tuple[int, int]] = None,
        epsilon: Optional[float] = None,
        overlap_cells: Optional[int] = None,
    ):
        self.pair = pair
        self.epsilon = epsilon
        self.overlap_cells = overlap_cells
        details = []
        if pair is not None:
            details.append(f"pair={pair}")
        if epsilon is not None:
            details.append(f"epsilon={epsilon:.3e}")
        if overlap_cells is not None:
            details.append(f"overlap_cells={overlap_cells}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")


class InternalError(RswrError):
    """An internal invariant was violated."""
