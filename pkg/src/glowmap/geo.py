"""Geographic primitives: points, polygons, a local metric frame, raster grids.

Everything here is immutable and pure. The local frame is a plain
equirectangular projection anchored at an origin point; at the sub-kilometer
scales this package works at (streetlight spacing, 50 m placement slack) its
error against a geodesic is far below other model error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolygonError, OutOfFrameError, PolarLatitudeError

EARTH_RADIUS_M = 6_378_137.0
METERS_PER_DEG = math.pi * EARTH_RADIUS_M / 180.0  # ~111,319.49 m per degree

#: Beyond this distance from the origin the equirectangular frame is not trusted.
FRAME_VALIDITY_RADIUS_M = 100_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS-84-style latitude/longitude pair in decimal degrees."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude {self.lat_deg} out of range [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude {self.lon_deg} out of range [-180, 180]")


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular projection centered on ``origin``.

    ``project`` maps degrees to (east, north) meters relative to the origin;
    ``unproject`` inverts it. The mapping is trusted out to
    ``FRAME_VALIDITY_RADIUS_M`` (100 km) from the origin.
    """

    origin: GeoPoint
    meters_per_deg_lat: float
    meters_per_deg_lon: float

    def project(self, p: GeoPoint) -> tuple[float, float]:
        x = (p.lon_deg - self.origin.lon_deg) * self.meters_per_deg_lon
        y = (p.lat_deg - self.origin.lat_deg) * self.meters_per_deg_lat
        return x, y

    def unproject(self, x_m: float, y_m: float) -> GeoPoint:
        return GeoPoint(
            self.origin.lat_deg + y_m / self.meters_per_deg_lat,
            self.origin.lon_deg + x_m / self.meters_per_deg_lon,
        )

    def project_arrays(self, lats: np.ndarray, lons: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`project` over degree arrays."""
        x = (np.asarray(lons, dtype=float) - self.origin.lon_deg) * self.meters_per_deg_lon
        y = (np.asarray(lats, dtype=float) - self.origin.lat_deg) * self.meters_per_deg_lat
        return x, y


def make_local_frame(origin: GeoPoint) -> LocalFrame:
    """Build the local metric frame anchored at ``origin``.

    Raises:
        PolarLatitudeError: if ``|origin.lat_deg| >= 89``; the cosine
            correction collapses near the poles.
    """
    if abs(origin.lat_deg) >= 89.0:
        raise PolarLatitudeError(f"latitude {origin.lat_deg} too close to a pole")
    return LocalFrame(
        origin=origin,
        meters_per_deg_lat=METERS_PER_DEG,
        meters_per_deg_lon=METERS_PER_DEG * math.cos(math.radians(origin.lat_deg)),
    )


def distance_m(a: GeoPoint, b: GeoPoint, frame: LocalFrame) -> float:
    """Planar distance in meters between two points, via the local frame.

    Raises:
        OutOfFrameError: if either point is beyond the frame's validity radius.
    """
    ax, ay = frame.project(a)
    bx, by = frame.project(b)
    for x, y, p in ((ax, ay, a), (bx, by, b)):
        if math.hypot(x, y) > FRAME_VALIDITY_RADIUS_M:
            raise OutOfFrameError(f"point {p} beyond frame validity radius")
    return math.hypot(bx - ax, by - ay)


class GeoPolygon:
    """A simple (non-self-intersecting) closed ring of GeoPoints.

    The ring is stored closed: the first vertex is repeated as the last. A
    point on the boundary counts as inside, by convention.
    """

    __slots__ = ("ring", "_bbox", "_lons", "_lats")

    def __init__(self, vertices: "list[GeoPoint] | tuple[GeoPoint, ...]"):
        verts = list(vertices)
        if verts and verts[0] == verts[-1]:
            verts = verts[:-1]
        distinct = {(v.lat_deg, v.lon_deg) for v in verts}
        if len(distinct) < 3:
            raise DegeneratePolygonError("polygon needs >= 3 distinct vertices")
        ring = tuple(verts) + (verts[0],)
        _check_simple(ring)
        lats = np.array([v.lat_deg for v in ring], dtype=float)
        lons = np.array([v.lon_deg for v in ring], dtype=float)
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "_lats", lats)
        object.__setattr__(self, "_lons", lons)
        object.__setattr__(
            self,
            "_bbox",
            (GeoPoint(lats.min(), lons.min()), GeoPoint(lats.max(), lons.max())),
        )

    def __setattr__(self, name, value):
        raise AttributeError("GeoPolygon is immutable")

    def __eq__(self, other):
        return isinstance(other, GeoPolygon) and self.ring == other.ring

    def __hash__(self):
        return hash(self.ring)

    def __repr__(self):
        return f"GeoPolygon({len(self.ring) - 1} vertices)"

    @property
    def bbox(self) -> tuple[GeoPoint, GeoPoint]:
        return self._bbox

    @property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        # closed ring as (lon, lat) arrays for the vectorized tests
        return self._lons, self._lats


def _check_simple(ring: tuple[GeoPoint, ...]) -> None:
    """Reject self-intersecting rings (O(n^2) proper-crossing test)."""
    n = len(ring) - 1  # closed ring; n edges
    pts = [(v.lon_deg, v.lat_deg) for v in ring]

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    for i in range(n):
        a, b = pts[i], pts[i + 1]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            c, d = pts[j], pts[j + 1]
            o1, o2 = orient(a, b, c), orient(a, b, d)
            o3, o4 = orient(c, d, a), orient(c, d, b)
            if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
                raise ValueError("polygon ring is self-intersecting")


#: Distance (degrees) under which a point counts as lying on a polygon edge.
_ON_EDGE_EPS_DEG = 1e-9


def contains_mask(poly: GeoPolygon, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized even-odd point-in-polygon test; boundary points are inside."""
    px = np.asarray(lons, dtype=float)
    py = np.asarray(lats, dtype=float)
    ring_x, ring_y = poly._arrays
    inside = np.zeros(px.shape, dtype=bool)
    boundary = np.zeros(px.shape, dtype=bool)
    for i in range(len(ring_x) - 1):
        x1, y1 = ring_x[i], ring_y[i]
        x2, y2 = ring_x[i + 1], ring_y[i + 1]
        crosses = (y1 > py) != (y2 > py)
        if crosses.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                x_int = (x2 - x1) * (py - y1) / (y2 - y1) + x1
            inside ^= crosses & (px < x_int)
        # boundary: perpendicular distance below eps and projection within segment
        ex, ey = x2 - x1, y2 - y1
        seg_len2 = ex * ex + ey * ey
        if seg_len2 == 0.0:
            continue
        cross = (px - x1) * ey - (py - y1) * ex
        dot = (px - x1) * ex + (py - y1) * ey
        on_seg = (np.abs(cross) <= _ON_EDGE_EPS_DEG * math.sqrt(seg_len2)) & (dot >= 0.0) & (dot <= seg_len2)
        boundary |= on_seg
    return inside | boundary


def contains(poly: GeoPolygon, p: GeoPoint) -> bool:
    """Even-odd containment test; points on the boundary count as inside."""
    return bool(contains_mask(poly, np.array([p.lat_deg]), np.array([p.lon_deg]))[0])


@dataclass(frozen=True)
class GridSpec:
    """A raster of square-ish cells covering a lat/lon bounding box.

    Cells are ``cell_size_m`` on a side (converted to degree steps at the
    bbox center latitude); rows index south to north, columns west to east,
    and flat indices are row-major. Cell centers always lie inside the bbox,
    so the grid may undershoot the box by up to one cell per axis.
    """

    min_corner: GeoPoint
    max_corner: GeoPoint
    cell_size_m: float
    rows: int
    cols: int
    lat_step_deg: float
    lon_step_deg: float

    @classmethod
    def from_bbox(cls, min_corner: GeoPoint, max_corner: GeoPoint, cell_size_m: float) -> "GridSpec":
        if cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if max_corner.lat_deg <= min_corner.lat_deg or max_corner.lon_deg <= min_corner.lon_deg:
            raise ValueError("bbox max corner must exceed min corner in both axes")
        center_lat = 0.5 * (min_corner.lat_deg + max_corner.lat_deg)
        m_lat = METERS_PER_DEG
        m_lon = METERS_PER_DEG * math.cos(math.radians(center_lat))
        lat_extent = max_corner.lat_deg - min_corner.lat_deg
        lon_extent = max_corner.lon_deg - min_corner.lon_deg
        lat_step = cell_size_m / m_lat
        lon_step = cell_size_m / m_lon
        rows = int(lat_extent / lat_step + 1e-9)
        cols = int(lon_extent / lon_step + 1e-9)
        if rows < 1:  # bbox narrower than one cell: single row centered in it
            rows, lat_step = 1, lat_extent
        if cols < 1:
            cols, lon_step = 1, lon_extent
        return cls(min_corner, max_corner, cell_size_m, rows, cols, lat_step, lon_step)

    def center_latlon(self, row: int, col: int) -> tuple[float, float]:
        return (
            self.min_corner.lat_deg + (row + 0.5) * self.lat_step_deg,
            self.min_corner.lon_deg + (col + 0.5) * self.lon_step_deg,
        )

    def center_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis center coordinates: (lats of rows, lons of cols)."""
        lats = self.min_corner.lat_deg + (np.arange(self.rows) + 0.5) * self.lat_step_deg
        lons = self.min_corner.lon_deg + (np.arange(self.cols) + 0.5) * self.lon_step_deg
        return lats, lons

    def center_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """All cell centers flattened row-major: (lats, lons), each rows*cols long."""
        lats, lons = self.center_axes()
        lat_grid, lon_grid = np.meshgrid(lats, lons, indexing="ij")
        return lat_grid.ravel(), lon_grid.ravel()


def cells_in(poly: GeoPolygon, grid: GridSpec) -> np.ndarray:
    """Flat row-major indices of grid cells whose centers fall inside ``poly``.

    Returns an empty array when nothing intersects; never raises for that.
    """
    bmin, bmax = poly.bbox
    if (
        bmax.lat_deg < grid.min_corner.lat_deg
        or bmin.lat_deg > grid.max_corner.lat_deg
        or bmax.lon_deg < grid.min_corner.lon_deg
        or bmin.lon_deg > grid.max_corner.lon_deg
    ):
        return np.empty(0, dtype=np.int64)
    lats, lons = grid.center_arrays()
    mask = contains_mask(poly, lats, lons)
    return np.nonzero(mask)[0].astype(np.int64)
