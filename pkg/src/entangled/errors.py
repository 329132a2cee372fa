"""Exception hierarchy shared across the toolkit."""


class EntangledError(Exception):
    """Base class for all toolkit errors."""


class UnreadableFile(EntangledError):
    """The file exists but could not be read or decoded."""


class UnsupportedFormat(EntangledError):
    """The file is not one of the supported raster formats (PNG/JPEG)."""


class DimensionMismatch(EntangledError):
    """Two inputs that must share dimensions do not."""


class DegenerateMask(EntangledError):
    """A mask with an empty inner or outer region where both are required."""


class EmptyRegion(EntangledError):
    """A region statistic was requested over zero samples."""


class LengthMismatch(EntangledError):
    """Two sample vectors that must align elementwise have different lengths."""


class NumericalError(EntangledError):
    """A computed value escaped its mathematical bounds beyond rounding noise."""


class OutOfCanvas(EntangledError):
    """A foreground placement does not fit inside the target canvas."""


class MissingManifest(EntangledError):
    """The dataset root has no manifest.json."""


class MalformedManifest(EntangledError):
    """manifest.json exists but does not parse or violates the schema."""


class BackendUnavailable(EntangledError):
    """A backend call failed at the transport/protocol level (not a semantic 'no')."""


class NoEvaluableRecords(EntangledError):
    """Every input record was skipped; nothing could be scored."""


class AlignmentError(EntangledError):
    """A variant image set does not align by id with its reference manifest."""


class ConfigError(EntangledError):
    """Invalid or contradictory configuration rejected before any work starts."""
