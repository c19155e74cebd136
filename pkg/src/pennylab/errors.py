"""Exception types shared across the package."""


class PennylabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PennylabError, ValueError):
    """Malformed or out-of-range argument."""


class DomainError(PennylabError, ValueError):
    """Operation applied to a game outside its domain (e.g. non-zero-sum)."""


class UnsupportedError(PennylabError):
    """Valid request that this desk-scale engine deliberately does not handle."""


class ResourceLimitError(PennylabError):
    """An exact recursion would exceed the configured tree-size guard."""


class BoundViolationError(PennylabError):
    """A measured quantity violated a bound it is required to satisfy."""


class InternalInvariantError(PennylabError):
    """A should-be-impossible state was reached; indicates a bug, kept as a
    distinct sentinel so tests can assert it is never raised."""
