"""Exception hierarchy.

Every failure the library can report is a subclass of :class:`HomSyncError`
so callers (the harness and the CLI in particular) can separate typed
protocol/estimation failures from programming errors.
"""


class HomSyncError(Exception):
    """Base class for all library errors."""


class FsOverflowError(HomSyncError, OverflowError):
    """A femtosecond value left the signed 64-bit range."""


class ConfigError(HomSyncError, ValueError):
    """A model or experiment configuration violates its invariants."""


# balancing

class InvalidScanRange(ConfigError):
    pass


class NoDipFound(HomSyncError):
    def __init__(self, contrast, min_contrast):
        super().__init__(
            f"no HOM dip found: contrast {contrast:.4f} < {min_contrast:.4f}")
        self.contrast = contrast
        self.min_contrast = min_contrast


# correlation

class EmptySeries(HomSyncError):
    pass


class OracleTooLarge(HomSyncError):
    pass


class AmbiguousPeak(HomSyncError):
    def __init__(self, n_tied, significance):
        super().__init__(
            f"{n_tied} bins share the maximum count and significance "
            f"{significance:.3g} < 5")
        self.n_tied = n_tied
        self.significance = significance


# wire format

class ProtocolError(HomSyncError):
    """Base class for wire-format errors; ``offset`` is the byte offset of the
    offending field when one applies."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagic(ProtocolError):
    pass


class UnsupportedVersion(ProtocolError):
    pass


class ChecksumMismatch(ProtocolError):
    pass


class UnsortedTimestamps(ProtocolError):
    pass


class Truncated(ProtocolError):
    pass


class TrailingData(ProtocolError):
    pass


class BadHeaderField(ProtocolError):
    """Clock id or reserved byte holds a value the format does not allow."""


class MessageTooLarge(ProtocolError):
    pass


class IllegalTransition(HomSyncError):
    pass


# harness

class UnknownAxis(HomSyncError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
