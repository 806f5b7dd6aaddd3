"""Exception types shared across the toolkit.

Every failure mode callers are expected to handle has its own class, so
error handling can dispatch on type instead of parsing messages.
"""


class SonovizError(Exception):
    """Base class for all toolkit errors."""


# --- MetaImage parsing / encoding ---------------------------------------


class MhaError(SonovizError, ValueError):
    """Base class for MetaImage header and payload errors."""


class MalformedLineError(MhaError):
    """A header line contains no ``=`` separator."""


class MissingRequiredKeyError(MhaError):
    """A required header key (NDims, DimSize, ElementType, ElementDataFile) is absent."""


class UnsupportedValueError(MhaError):
    """A recognized header key carries a value this toolkit cannot handle."""


class UnsupportedCompressionError(MhaError):
    """The header declares a compressed payload (CompressedData = True)."""


class PayloadTooShortError(MhaError):
    """Fewer payload bytes than DimSize and ElementType require."""


class PayloadTooLongError(MhaError):
    """More payload bytes than DimSize and ElementType require."""


# --- Volumes and filters -------------------------------------------------


class IndexOutOfBoundsError(SonovizError, IndexError):
    """A voxel or slice index lies outside the volume extent."""


class NonPositiveSigmaError(SonovizError, ValueError):
    """Gaussian sigma must be strictly positive."""


class NonPositiveRadiusError(SonovizError, ValueError):
    """Median window radius must be at least 1."""


# --- Surface extraction --------------------------------------------------


class VolumeTooSmallError(SonovizError, ValueError):
    """Surface extraction needs at least two samples along each required axis."""


class DegenerateEdgeError(SonovizError, ValueError):
    """Both edge endpoints carry the same value; no crossing can be interpolated."""


# --- Delaunay triangulation ----------------------------------------------


class CollinearTriangleError(SonovizError, ValueError):
    """The three circumcircle reference points are collinear."""


class TooFewPointsError(SonovizError, ValueError):
    """Triangulation needs at least three distinct points."""


class AllCollinearError(SonovizError, ValueError):
    """All input points lie on one line; no triangle exists."""


# --- Mesh encoding --------------------------------------------------------


class MeshTooLargeError(SonovizError, ValueError):
    """Mesh exceeds the 32-bit counts of the binary wire format."""


class WireFormatError(SonovizError, ValueError):
    """A binary mesh blob is not valid MSH1 data."""
