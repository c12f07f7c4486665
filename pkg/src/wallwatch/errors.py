"""Exception hierarchy shared across the toolkit."""


class WallwatchError(Exception):
    """Base class for all toolkit errors."""


class CaptureFormatError(WallwatchError):
    """A capture stream could not be parsed.

    Carries the byte offset (binary inputs) or line number (text inputs)
    of the first fatal problem when known.
    """

    def __init__(self, message, *, offset=None, line=None):
        super().__init__(message)
        self.offset = offset
        self.line = line

    def __str__(self):
        base = super().__str__()
        if self.offset is not None:
            return f"{base} (at byte offset {self.offset})"
        if self.line is not None:
            return f"{base} (at line {self.line})"
        return base


class MergeError(WallwatchError):
    """Sniffer captures cannot be merged (e.g. duplicate sniffer ids)."""


class RegistryError(WallwatchError):
    """The vendor prefix registry is unusable (empty or unreadable)."""


class BleParseError(WallwatchError):
    """A BLE advertising blob is structurally invalid."""


class InsufficientObservations(WallwatchError):
    """Too few sniffers heard the device to build a usable fingerprint."""


class AmbiguousDirection(WallwatchError):
    """The fingerprint is too balanced to define a direction."""


class UnknownProfile(WallwatchError):
    """Not enough traffic to decide autonomous vs. interactive."""


class UnknownMobility(WallwatchError):
    """Not enough RSSI data to decide static vs. mobile."""


class CannotInferPresence(WallwatchError):
    """No interactive device is associated with the subject."""


class NoSleepInference(WallwatchError):
    """The subject's device was absent overnight; sleep cannot be judged."""


class InsufficientHistory(WallwatchError):
    """Fewer observed days than the weekly aggregation requires."""


class ScenarioError(WallwatchError):
    """A simulation scenario violates its invariants."""

    def __init__(self, message, *, field=None):
        super().__init__(message)
        self.field = field

    def __str__(self):
        base = super().__str__()
        if self.field is not None:
            return f"{self.field}: {base}"
        return base


class ConfigError(WallwatchError):
    """An analysis configuration is invalid or incomplete."""
