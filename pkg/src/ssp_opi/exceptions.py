"""Exception hierarchy for the ssp_opi package."""


class SspError(Exception):
    """Base class for all package errors."""


class ValidationError(SspError, ValueError):
    """A model description violates a structural invariant."""


class NegativeProbability(ValidationError):
    pass


class RowSumExceedsOne(ValidationError):
    pass


class EmptyActionSet(ValidationError):
    pass


class NonfiniteCost(ValidationError):
    pass


class DuplicateTarget(ValidationError):
    pass


class ParseError(SspError, ValueError):
    """An instance file is not well-formed JSON or misses required fields."""


class InvalidPolicy(SspError, ValueError):
    pass


class ImproperPolicy(SspError):
    """A policy that does not terminate almost surely was used where a proper one is required."""


class NotAllProper(SspError):
    """The model admits an improper policy.

    ``witness`` holds ``(states, actions)``: a trap set and the per-state
    action choice that keeps all transition mass inside it.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SingularSystem(SspError):
    pass


class MaxIterExceeded(SspError):
    pass


class TruncatedSample(SspError):
    """An episode hit the step cutoff before reaching termination."""


class TruncatedEpisode(TruncatedSample):
    """Raised inside an OPI run when a sampled episode was truncated."""


class LambdaOutOfRange(SspError, ValueError):
    pass


class NonpositiveWeight(SspError, ValueError):
    pass


class DimensionMismatch(SspError, ValueError):
    pass


class EmptyLog(SspError, ValueError):
    pass
