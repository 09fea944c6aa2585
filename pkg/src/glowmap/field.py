"""Scenario container, field composition, rasterization, tiles, hotspots.

A Scenario is an immutable bundle of lamps, a bounding box, and optional
named protected areas. The composite field at a point is the inverse-square-
distance weighted mean of per-lamp attenuated intensities; rasters sample it
at cell centers and map the values through a fixed ten-stop colormap.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from PIL import Image
from scipy import ndimage

from . import _kernels
from .errors import GridTooLargeError, NoSourcesError, OutOfFrameError
from .geo import (
    FRAME_VALIDITY_RADIUS_M,
    METERS_PER_DEG,
    GeoPoint,
    GeoPolygon,
    GridSpec,
    LocalFrame,
    make_local_frame,
)
from .light import DEFAULT_ALPHA, DEFAULT_I0, LightSource, intensity_to_sqm, normalized_brightness

MAX_GRID_CELLS = 100_000_000
TILE_SIZE = 256
MAX_ZOOM = 22

#: padding around the bbox within which sources must lie
SOURCE_PAD_M = 1_000.0


@dataclass(frozen=True)
class Scenario:
    """One modeled area: lamps, bounding box, raster resolution, named areas.

    Sources are stored sorted by id so that every field evaluation sums
    contributions in the same order and rasters are bit-reproducible.
    """

    scenario_id: str
    sources: tuple[LightSource, ...]
    min_corner: GeoPoint
    max_corner: GeoPoint
    cell_size_m: float = 10.0
    alpha: float = DEFAULT_ALPHA
    protected_areas: "dict[str, GeoPolygon]" = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.scenario_id:
            raise ValueError("scenario_id must be non-empty")
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        ordered = tuple(sorted(self.sources, key=lambda s: s.source_id))
        object.__setattr__(self, "sources", ordered)
        ids = [s.source_id for s in ordered]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate source ids: {dupes}")
        for name in self.protected_areas:
            if not name:
                raise ValueError("protected area names must be non-empty")
        # bbox sanity comes from GridSpec; build it eagerly so bad boxes fail here
        _ = self.grid
        pad_lat = SOURCE_PAD_M / METERS_PER_DEG
        center_lat = 0.5 * (self.min_corner.lat_deg + self.max_corner.lat_deg)
        pad_lon = SOURCE_PAD_M / (METERS_PER_DEG * math.cos(math.radians(center_lat)))
        for s in ordered:
            if not (
                self.min_corner.lat_deg - pad_lat <= s.position.lat_deg <= self.max_corner.lat_deg + pad_lat
                and self.min_corner.lon_deg - pad_lon <= s.position.lon_deg <= self.max_corner.lon_deg + pad_lon
            ):
                raise ValueError(f"source {s.source_id} lies more than {SOURCE_PAD_M:.0f} m outside the bbox")

    @cached_property
    def frame(self) -> LocalFrame:
        center = GeoPoint(
            0.5 * (self.min_corner.lat_deg + self.max_corner.lat_deg),
            0.5 * (self.min_corner.lon_deg + self.max_corner.lon_deg),
        )
        return make_local_frame(center)

    @cached_property
    def grid(self) -> GridSpec:
        return GridSpec.from_bbox(self.min_corner, self.max_corner, self.cell_size_m)

    @cached_property
    def i0_max(self) -> float:
        if not self.sources:
            return DEFAULT_I0
        return max(s.params.i0 for s in self.sources)

    @cached_property
    def source_arrays(self) -> tuple[np.ndarray, ...]:
        """Per-source (x, y, i0, c1, c2, alpha) arrays in frame meters, id order."""
        lats = np.array([s.position.lat_deg for s in self.sources])
        lons = np.array([s.position.lon_deg for s in self.sources])
        xs, ys = self.frame.project_arrays(lats, lons)
        i0 = np.array([s.params.i0 for s in self.sources])
        c1 = np.array([s.params.c1 for s in self.sources])
        c2 = np.array([s.params.c2 for s in self.sources])
        alpha = np.array([s.params.alpha for s in self.sources])
        return tuple(np.ascontiguousarray(a, dtype=np.float64) for a in (xs, ys, i0, c1, c2, alpha))

    def with_sources(self, sources: "tuple[LightSource, ...] | list[LightSource]") -> "Scenario":
        return replace(self, sources=tuple(sources))

    def get_source(self, source_id: str) -> LightSource:
        for s in self.sources:
            if s.source_id == source_id:
                return s
        from .errors import UnknownSourceError

        raise UnknownSourceError(f"no source with id {source_id!r}")


@dataclass(frozen=True)
class FieldGrid:
    """A sampled field: grid geometry plus row-major cell-center intensities."""

    spec: GridSpec
    values: np.ndarray  # 1-D, length rows * cols, row-major

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size != self.spec.rows * self.spec.cols:
            raise ValueError(f"values must be flat with length {self.spec.rows * self.spec.cols}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("field values must be finite and non-negative")
        object.__setattr__(self, "values", v)

    def value_at(self, row: int, col: int) -> float:
        return float(self.values[row * self.spec.cols + col])

    @property
    def matrix(self) -> np.ndarray:
        """Values as a (rows, cols) view, row 0 southmost."""
        return self.values.reshape(self.spec.rows, self.spec.cols)


#: normalized brightness -> color ramp; positions k/9 for k = 0..9
COLOR_STOPS: tuple[tuple[float, tuple[int, int, int]], ...] = (
    (0.0, (0, 0, 0)),  # black
    (1 / 9, (0, 0, 255)),  # blue
    (2 / 9, (0, 255, 255)),  # cyan
    (3 / 9, (0, 255, 0)),  # lime
    (4 / 9, (255, 255, 0)),  # yellow
    (5 / 9, (255, 165, 0)),  # orange
    (6 / 9, (255, 0, 0)),  # red
    (7 / 9, (128, 0, 0)),  # maroon
    (8 / 9, (128, 0, 128)),  # purple
    (1.0, (255, 255, 255)),  # white
)


def _check_in_frame(frame: LocalFrame, p: GeoPoint) -> tuple[float, float]:
    x, y = frame.project(p)
    if math.hypot(x, y) > FRAME_VALIDITY_RADIUS_M:
        raise OutOfFrameError(f"point {p} beyond frame validity radius")
    return x, y


def field_at(scenario: Scenario, p: GeoPoint) -> float:
    """Composite intensity at a point; raises NoSourcesError on an empty scenario."""
    if not scenario.sources:
        raise NoSourcesError(f"scenario {scenario.scenario_id!r} has no sources")
    x, y = _check_in_frame(scenario.frame, p)
    sx, sy, i0, c1, c2, alpha = scenario.source_arrays
    out = _kernels.field_values(np.array([x]), np.array([y]), sx, sy, i0, c1, c2, alpha)
    return float(out[0])


def field_at_many(scenario: Scenario, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized field evaluation; zero sources yields zeros (used by rasters)."""
    qx, qy = scenario.frame.project_arrays(lats, lons)
    sx, sy, i0, c1, c2, alpha = scenario.source_arrays
    return _kernels.field_values(
        np.ascontiguousarray(qx, dtype=np.float64),
        np.ascontiguousarray(qy, dtype=np.float64),
        sx,
        sy,
        i0,
        c1,
        c2,
        alpha,
    )


def render_grid(scenario: Scenario) -> FieldGrid:
    """Sample the field at every cell center of the scenario grid.

    An empty scenario renders as a zero field (dark map) rather than raising;
    point queries via field_at still treat no sources as an error.
    """
    grid = scenario.grid
    n = grid.rows * grid.cols
    if n > MAX_GRID_CELLS:
        raise GridTooLargeError(f"grid has {n} cells, limit is {MAX_GRID_CELLS}")
    lats, lons = grid.center_arrays()
    return FieldGrid(grid, field_at_many(scenario, lats, lons))


def colorize(values: "np.ndarray | FieldGrid", i0_max: float) -> np.ndarray:
    """Map intensities to RGB via the sky-quality scale and the stop ramp.

    Accepts a FieldGrid (returns rows x cols x 3) or a bare array (returns
    the same shape plus a trailing 3). Output dtype is uint8.
    """
    if isinstance(values, FieldGrid):
        arr = values.matrix
    else:
        arr = np.asarray(values, dtype=np.float64)
    n = normalized_brightness(intensity_to_sqm(arr, i0_max))
    n = np.atleast_1d(np.asarray(n, dtype=np.float64))
    pos = np.array([p for p, _ in COLOR_STOPS])
    out = np.empty(n.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        ramp = np.array([c[ch] for _, c in COLOR_STOPS], dtype=np.float64)
        out[..., ch] = np.rint(np.interp(n, pos, ramp)).astype(np.uint8)
    if isinstance(values, FieldGrid) or np.ndim(values) > 0:
        return out
    return out.reshape(3)


def png_bytes(raster: np.ndarray) -> bytes:
    """Encode an (H, W, 3) or (H, W, 4) uint8 raster as PNG."""
    img = Image.fromarray(raster, mode="RGBA" if raster.shape[-1] == 4 else "RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def grid_png(scenario: Scenario, north_up: bool = True) -> bytes:
    """Render the scenario grid to a PNG (north at the top by default)."""
    rgb = colorize(render_grid(scenario), scenario.i0_max)
    if north_up:
        rgb = rgb[::-1]  # row 0 is the southmost grid row
    return png_bytes(np.ascontiguousarray(rgb))


def tile_pixel_latlon(z: int, x: int, y: int) -> tuple[np.ndarray, np.ndarray]:
    """Geographic centers of the 256x256 pixels of a web-mercator tile.

    Returns (lats, lons) flattened row-major, row 0 at the tile's top
    (north) edge.
    """
    n_tiles = float(1 << z)
    px = (np.arange(TILE_SIZE) + 0.5) / TILE_SIZE
    gx = (x + px) / n_tiles
    gy = (y + px) / n_tiles
    lons = gx * 360.0 - 180.0
    lats = np.degrees(np.arctan(np.sinh(np.pi * (1.0 - 2.0 * gy))))
    lat_grid, lon_grid = np.meshgrid(lats, lons, indexing="ij")
    return lat_grid.ravel(), lon_grid.ravel()


def render_tile(scenario: Scenario, z: int, x: int, y: int) -> np.ndarray:
    """Render one web-mercator tile of the field as a 256x256x4 RGBA raster.

    Pixels outside the scenario bbox are fully transparent; a tile that
    misses the bbox entirely comes back all-transparent.
    """
    if not 0 <= z <= MAX_ZOOM:
        raise ValueError(f"zoom {z} outside [0, {MAX_ZOOM}]")
    if not (0 <= x < (1 << z) and 0 <= y < (1 << z)):
        raise ValueError(f"tile ({x}, {y}) outside zoom {z} range")
    lats, lons = tile_pixel_latlon(z, x, y)
    inside = (
        (lats >= scenario.min_corner.lat_deg)
        & (lats <= scenario.max_corner.lat_deg)
        & (lons >= scenario.min_corner.lon_deg)
        & (lons <= scenario.max_corner.lon_deg)
    )
    out = np.zeros((TILE_SIZE * TILE_SIZE, 4), dtype=np.uint8)
    if inside.any():
        vals = np.zeros(lats.shape, dtype=np.float64)
        vals[inside] = field_at_many(scenario, lats[inside], lons[inside])
        rgb = colorize(vals, scenario.i0_max)
        out[inside, :3] = rgb[inside]
        out[inside, 3] = 255
    return out.reshape(TILE_SIZE, TILE_SIZE, 4)


def tile_png(scenario: Scenario, z: int, x: int, y: int) -> bytes:
    return png_bytes(render_tile(scenario, z, x, y))


@dataclass(frozen=True)
class HotspotRegion:
    """A 4-connected patch of cells at or above a brightness threshold."""

    cell_count: int
    centroid: GeoPoint
    cells: tuple[int, ...]  # flat row-major indices, ascending


def hotspots(grid: FieldGrid, threshold_sqm: float, i0_max: float = DEFAULT_I0) -> list[HotspotRegion]:
    """Connected regions of the grid whose sky-quality reading is at or
    below ``threshold_sqm`` (i.e. at least that bright).

    threshold_sqm must lie in [16, 22]; 22 selects every cell, 16 selects
    only cells at full brightness. Regions come back largest first; ties
    break by the smallest member index.
    """
    if not 16.0 <= threshold_sqm <= 22.0:
        raise ValueError(f"threshold_sqm must be in [16, 22], got {threshold_sqm}")
    cutoff = i0_max * (22.0 - threshold_sqm) / 6.0
    mask = grid.matrix >= cutoff
    labels, count = ndimage.label(mask)  # default structure is 4-connected
    regions: list[HotspotRegion] = []
    lats, lons = grid.spec.center_arrays()
    flat_labels = labels.ravel()
    for k in range(1, count + 1):
        cells = np.nonzero(flat_labels == k)[0]
        regions.append(
            HotspotRegion(
                cell_count=int(cells.size),
                centroid=GeoPoint(float(lats[cells].mean()), float(lons[cells].mean())),
                cells=tuple(int(c) for c in cells),
            )
        )
    regions.sort(key=lambda r: (-r.cell_count, r.cells[0]))
    return regions
