"""glowmap: outdoor light pollution modeling, mapping, and mitigation.

The package models lamp brightness falloff over distance, composes many
lamps into a continuous brightness field, renders that field as rasters and
web map tiles, interpolates scattered sky-quality measurements, accounts
for the light each lamp deposits on protected areas, and optimizes lamp
placement or falloff coefficients under street-illumination constraints.

The hot kernels run through a compiled extension when it is available and
fall back to a pure numpy implementation otherwise; ``glowmap.BACKEND``
names the active one.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    CorruptDocumentError,
    DegeneratePolygonError,
    EmptyFileError,
    EmptyTargetError,
    GlowmapError,
    GridTooLargeError,
    InfeasibleError,
    LinAlgFailureError,
    MalformedHeaderError,
    NegativeDistanceError,
    NonPositiveScaleError,
    NoSourcesError,
    NotAFeatureCollectionError,
    OutOfFrameError,
    PolarLatitudeError,
    SingularSystemError,
    StaleRevisionError,
    TooFewSamplesError,
    UnknownProfileError,
    UnknownSourceError,
)
from .geo import (
    EARTH_RADIUS_M,
    METERS_PER_DEG,
    GeoPoint,
    GeoPolygon,
    GridSpec,
    LocalFrame,
    cells_in,
    distance_m,
    make_local_frame,
)
from .light import (
    DEFAULT_ALPHA,
    DEFAULT_I0,
    PROFILES,
    SQM_BRIGHT,
    SQM_DARK,
    AttenuationParams,
    LightProfile,
    LightSource,
    attenuate,
    intensity_to_sqm,
    normalized_brightness,
    profile,
)
from .field import (
    COLOR_STOPS,
    FieldGrid,
    HotspotRegion,
    Scenario,
    colorize,
    field_at,
    field_at_many,
    grid_png,
    hotspots,
    render_grid,
    render_tile,
    tile_png,
)
from .interp import (
    METHOD_TAGS,
    InterpMethod,
    LooReport,
    SamplePoint,
    error_variance_pct,
    interpolate,
    leave_one_out,
    load_samples_csv,
)
from .footprint import (
    KERNEL_KINDS,
    FootprintReport,
    IlluminanceKernel,
    area_footprint,
    cell_illuminance,
    footprint_report,
    per_source_footprints,
    source_footprint,
)
from .optimize import (
    MODES,
    OptimizationResult,
    OptimizationSpec,
    g_constraint,
    h_constraint,
    objective,
    solve,
    solver_core,
)
from .scenario_io import (
    ImportReport,
    ScenarioStore,
    generate_synthetic_sources,
    import_sources_csv,
    import_sources_geojson,
    scenario_from_dict,
    scenario_to_dict,
    sources_to_geojson,
)
from .demo import lakefront_scenario

__all__ = [
    "BACKEND",
    "__version__",
    # errors
    "GlowmapError",
    "PolarLatitudeError",
    "OutOfFrameError",
    "DegeneratePolygonError",
    "NegativeDistanceError",
    "NonPositiveScaleError",
    "UnknownProfileError",
    "TooFewSamplesError",
    "SingularSystemError",
    "NoSourcesError",
    "GridTooLargeError",
    "EmptyTargetError",
    "InfeasibleError",
    "LinAlgFailureError",
    "UnknownSourceError",
    "MalformedHeaderError",
    "EmptyFileError",
    "NotAFeatureCollectionError",
    "StaleRevisionError",
    "CorruptDocumentError",
    # geography
    "EARTH_RADIUS_M",
    "METERS_PER_DEG",
    "GeoPoint",
    "GeoPolygon",
    "GridSpec",
    "LocalFrame",
    "make_local_frame",
    "distance_m",
    "cells_in",
    # light model
    "DEFAULT_ALPHA",
    "DEFAULT_I0",
    "SQM_BRIGHT",
    "SQM_DARK",
    "PROFILES",
    "AttenuationParams",
    "LightProfile",
    "LightSource",
    "attenuate",
    "profile",
    "intensity_to_sqm",
    "normalized_brightness",
    # field and rendering
    "COLOR_STOPS",
    "Scenario",
    "FieldGrid",
    "HotspotRegion",
    "field_at",
    "field_at_many",
    "render_grid",
    "render_tile",
    "grid_png",
    "tile_png",
    "colorize",
    "hotspots",
    # interpolation
    "METHOD_TAGS",
    "InterpMethod",
    "SamplePoint",
    "LooReport",
    "interpolate",
    "leave_one_out",
    "load_samples_csv",
    "error_variance_pct",
    # footprint accounting
    "KERNEL_KINDS",
    "IlluminanceKernel",
    "FootprintReport",
    "footprint_report",
    "area_footprint",
    "source_footprint",
    "per_source_footprints",
    "cell_illuminance",
    # optimization
    "MODES",
    "OptimizationSpec",
    "OptimizationResult",
    "solve",
    "objective",
    "solver_core",
    "g_constraint",
    "h_constraint",
    # persistence and imports
    "ScenarioStore",
    "ImportReport",
    "scenario_to_dict",
    "scenario_from_dict",
    "import_sources_csv",
    "import_sources_geojson",
    "sources_to_geojson",
    "generate_synthetic_sources",
    # demo
    "lakefront_scenario",
]
