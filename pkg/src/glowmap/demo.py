"""A ready-made demonstration scenario: six streetlights around a lake.

Used by tests, the CLI (`glowmap render --demo`), and the service seed
endpoint. The layout is a lake-front block with six lamps ringing a small
protected waterbody; initial lamps barely attenuate (c1 = 0), which is what
the optimizer is meant to fix.
"""

from __future__ import annotations

import math

from .field import Scenario
from .geo import METERS_PER_DEG, GeoPoint, GeoPolygon
from .light import AttenuationParams, LightSource

LAKE_CENTER = GeoPoint(30.0545, -81.6145)
LAKE_HALF_WIDTH_M = 40.0

INITIAL_POSITIONS = (
    ("s1", 30.056, -81.617),
    ("s2", 30.055, -81.615),
    ("s3", 30.055, -81.613),
    ("s4", 30.053, -81.614),
    ("s5", 30.054, -81.614),
    ("s6", 30.055, -81.614),
)


def lake_polygon() -> GeoPolygon:
    """Square protected waterbody, 80 m on a side, none of the lamps inside."""
    dlat = LAKE_HALF_WIDTH_M / METERS_PER_DEG
    dlon = LAKE_HALF_WIDTH_M / (METERS_PER_DEG * math.cos(math.radians(LAKE_CENTER.lat_deg)))
    lat0, lon0 = LAKE_CENTER.lat_deg, LAKE_CENTER.lon_deg
    return GeoPolygon(
        [
            GeoPoint(lat0 - dlat, lon0 - dlon),
            GeoPoint(lat0 - dlat, lon0 + dlon),
            GeoPoint(lat0 + dlat, lon0 + dlon),
            GeoPoint(lat0 + dlat, lon0 - dlon),
        ]
    )


def lakefront_scenario(cell_size_m: float = 10.0) -> Scenario:
    params = AttenuationParams(c1=0.0, c2=0.03)
    sources = tuple(
        LightSource(sid, GeoPoint(lat, lon), params) for sid, lat, lon in INITIAL_POSITIONS
    )
    return Scenario(
        scenario_id="lakefront",
        sources=sources,
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
        cell_size_m=cell_size_m,
        protected_areas={"lake": lake_polygon()},
    )
