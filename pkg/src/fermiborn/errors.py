"""Exception types shared across the package."""


class InvalidCircuitError(ValueError):
    """A gate, basis state, or circuit violates a structural invariant."""


class CircuitFormatError(InvalidCircuitError):
    """A circuit document does not conform to the schema.

    The message names the offending field, e.g. ``gates[3].u``.
    """


class CapacityError(RuntimeError):
    """Refusal to run a computation whose cost would be exponential.

    Raised when the controlled-phase count exceeds the exact-enumeration cap
    or the mode count exceeds the dense reference cap.
    """


class PrecisionUnreachableError(RuntimeError):
    """The adaptive estimator hit its round cap before reaching the target error."""
