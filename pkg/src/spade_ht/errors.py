"""Exception and warning types shared across the package."""


class SpadeError(Exception):
    """Base class for all errors raised by spade_ht."""


class DomainError(SpadeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OutOfRegime(SpadeError, ValueError):
    """Parameters violate the small-parameter regime a closed form assumes."""


class OutOfExpansionRange(SpadeError, ValueError):
    """A moment expansion produced a probability outside [0, 1]."""


class InfiniteDivergence(SpadeError, ValueError):
    """Relative entropy is infinite: p has mass where q has none."""


class IndexOutOfRange(SpadeError, IndexError):
    """Hermite-Gauss mode index above the supported cap."""


class EmptyBatch(SpadeError, ValueError):
    """An operation that needs repetitions received none."""


class NoRoot(SpadeError, ValueError):
    """An inversion has no solution inside the admissible interval."""


class ConfigError(SpadeError, ValueError):
    """Invalid run configuration."""


class ParseError(SpadeError, ValueError):
    """Malformed counts file; message carries the offending row number."""


class MissingThresholdSource(ConfigError):
    """Neither a calibration file nor (crosstalk, N) was supplied."""


class CrosstalkWarning(UserWarning):
    """Off-diagonal crosstalk above 1/2 (outside the usual convention)."""


class BetaUnderflowWarning(RuntimeWarning):
    """A type-II error probability underflowed to 0.0."""
