"""Exception types shared across the engine."""


class ColfuseError(Exception):
    """Base class for engine errors."""


class EncodeError(ColfuseError):
    """A value cannot be encoded (e.g. outside its width class)."""


class DecodeError(ColfuseError):
    """A payload is truncated or otherwise undecodable."""


class CorruptPageError(ColfuseError):
    """Checksum mismatch or malformed page structure."""


class CorruptRecordError(ColfuseError):
    """A compressed string record is malformed (e.g. trailing escape)."""


class WrongLayoutError(ColfuseError):
    """Values were routed to the wrong page layout (fixed vs varlen)."""


class PageOverflowError(ColfuseError):
    """Input does not fit the page; ``max_fit`` is the longest prefix that does."""

    def __init__(self, message, max_fit):
        super().__init__(message)
        self.max_fit = max_fit


class OversizedRecordError(ColfuseError):
    """A single encoded record exceeds the string mini-block size limit."""


class QueueFullError(ColfuseError):
    """Submission queue is at depth; the caller must poll and retry."""


class HashTableOverflowError(ColfuseError):
    """Build-side hash table exceeded its load-factor limit."""


class WorkMemExceededError(ColfuseError):
    """Staged-mode intermediates exceeded the configured work-memory budget."""


class LoadError(ColfuseError):
    """Data loading failed (e.g. device capacity exceeded)."""


class PlanError(ColfuseError):
    """A query plan is structurally invalid or uses an unsupported shape."""
