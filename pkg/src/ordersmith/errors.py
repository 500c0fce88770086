"""Exception types raised across the package.

Contract errors subclass ValueError where they signal bad caller input, so
generic validation handling keeps working.
"""


class OrdersmithError(Exception):
    """Base class for every error raised by this package."""


# probability-vector arithmetic
class SpaceMismatchError(OrdersmithError, ValueError):
    """Two distributions do not share the same label space."""


class AllZeroError(OrdersmithError, ValueError):
    """Every weight is zero; nothing to normalize."""


class NegativeWeightError(OrdersmithError, ValueError):
    """A weight is negative."""


class NonFiniteError(OrdersmithError, ValueError):
    """A score is NaN or infinite."""


class EmptyInputError(OrdersmithError, ValueError):
    """An operation that needs at least one element got none."""


# prompt rendering / backends
class BadOrderingError(OrdersmithError, ValueError):
    """Permutation indices do not match the demo set."""


class BadConfigError(OrdersmithError, ValueError):
    """A component was configured with out-of-range parameters."""


class TokenizationError(OrdersmithError):
    """A verbalizer cannot be scored as a single next token."""


class BackendUnavailableError(OrdersmithError):
    """Transport to the model backend failed after retries."""


class ProtocolError(OrdersmithError):
    """The backend returned a malformed or unparseable response."""


class CacheCorruptError(OrdersmithError):
    """A cache record could not be parsed (handled by skip-and-requery)."""


# ordering optimization
class EmptyDevSetError(OrdersmithError, ValueError):
    """A dev-set-dependent criterion got an empty example list."""


class UnlabeledExampleError(OrdersmithError, ValueError):
    """An operation requiring gold labels got an unlabeled example."""


class TooFewError(OrdersmithError, ValueError):
    """Asked to keep more entries than were scored."""


class PoolTooSmallError(OrdersmithError, ValueError):
    """The example pool has fewer members than one demo set needs."""


# evaluation
class EmptyRunError(OrdersmithError, ValueError):
    """A run holds no predictions."""


class BadConfidenceError(OrdersmithError, ValueError):
    """A confidence lies outside [0, 1]."""


# dataset / experiment configuration
class DatasetParseError(OrdersmithError):
    """A dataset record is malformed; the message names the line."""


class UnknownLabelError(OrdersmithError, ValueError):
    """A record's label is not in the configured label space."""


class ConfigError(OrdersmithError):
    """The experiment configuration is invalid or inconsistent."""
