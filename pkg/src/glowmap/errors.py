"""Exception hierarchy shared across the package."""


class GlowmapError(Exception):
    """Base class for every error this package raises deliberately."""


# geographic primitives

class PolarLatitudeError(GlowmapError):
    """Local frame requested too close to a pole for an equirectangular fit."""


class OutOfFrameError(GlowmapError):
    """Point lies beyond the local frame's validity radius."""


class DegeneratePolygonError(GlowmapError):
    """Polygon has fewer than 3 distinct vertices."""


# light model

class NegativeDistanceError(GlowmapError):
    """Attenuation evaluated at a negative or non-finite distance."""


class NonPositiveScaleError(GlowmapError):
    """Intensity-to-SQM conversion needs a positive full-brightness anchor."""


class UnknownProfileError(GlowmapError):
    """Lighting profile id outside the built-in table."""


# interpolation

class TooFewSamplesError(GlowmapError):
    """Not enough sample points for the requested method."""


class SingularSystemError(GlowmapError):
    """Kriging/RBF linear system is singular; callers may fall back to IDW."""


# field rendering

class NoSourcesError(GlowmapError):
    """Point-field query on a scenario with no light sources."""


class GridTooLargeError(GlowmapError):
    """Raster request exceeds the cell-count guard."""


# optimization

class EmptyTargetError(GlowmapError):
    """Optimization target contains no usable evaluation points."""


class InfeasibleError(GlowmapError):
    """Initial point violates constraints and restoration failed."""


class LinAlgFailureError(GlowmapError):
    """Solver subproblem degenerated; projected-gradient fallback also failed."""


# footprint

class UnknownSourceError(GlowmapError):
    """Footprint requested for a source id not in the scenario."""


# scenario ingestion / persistence

class MalformedHeaderError(GlowmapError):
    """CSV header does not match the documented import schema."""


class EmptyFileError(GlowmapError):
    """Import payload is empty."""


class NotAFeatureCollectionError(GlowmapError):
    """GeoJSON payload is not a FeatureCollection."""


class StaleRevisionError(GlowmapError):
    """Compare-and-set save lost the race against a newer revision."""


class CorruptDocumentError(GlowmapError):
    """Stored scenario failed checksum or structural validation."""
