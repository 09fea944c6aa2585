"""Footprint accounting: kernels, additivity, ranking, refinement."""

import json
import math

import numpy as np
import pytest

from glowmap.demo import lake_polygon, lakefront_scenario
from glowmap.errors import UnknownSourceError
from glowmap.field import Scenario
from glowmap.footprint import (
    FootprintReport,
    IlluminanceKernel,
    area_footprint,
    cell_illuminance,
    footprint_report,
    per_source_footprints,
    source_footprint,
)
from glowmap.geo import METERS_PER_DEG, GeoPoint, GeoPolygon
from glowmap.light import AttenuationParams, LightSource, attenuate, profile


def square_about(center: GeoPoint, half_m: float) -> GeoPolygon:
    dlat = half_m / METERS_PER_DEG
    dlon = half_m / (METERS_PER_DEG * math.cos(math.radians(center.lat_deg)))
    return GeoPolygon(
        [
            GeoPoint(center.lat_deg - dlat, center.lon_deg - dlon),
            GeoPoint(center.lat_deg - dlat, center.lon_deg + dlon),
            GeoPoint(center.lat_deg + dlat, center.lon_deg + dlon),
            GeoPoint(center.lat_deg + dlat, center.lon_deg - dlon),
        ]
    )


def test_kernel_validation():
    IlluminanceKernel()
    IlluminanceKernel("inverse_square", mount_height_m=6.0)
    with pytest.raises(ValueError):
        IlluminanceKernel("gaussian")
    with pytest.raises(ValueError):
        IlluminanceKernel("inverse_square", mount_height_m=0.0)


def test_cell_illuminance_attenuation_anchor(lake):
    src = lake.sources[0]
    e = cell_illuminance(src, src.position, IlluminanceKernel(), lake.i0_max, lake.frame)
    assert e == pytest.approx(1.0), "at the lamp with i0 = i0_max the kernel reads 1"


def test_cell_illuminance_inverse_square_anchor(lake):
    src = lake.sources[0]
    k = IlluminanceKernel("inverse_square", mount_height_m=10.0)
    e = cell_illuminance(src, src.position, k, lake.i0_max, lake.frame)
    assert e == pytest.approx(1.0), "directly beneath the lamp the kernel reads 1"


def test_cell_illuminance_inverse_square_at_height_offset(lake):
    src = lake.sources[0]
    k = IlluminanceKernel("inverse_square", mount_height_m=10.0)
    sx, sy = lake.frame.project(src.position)
    p = lake.frame.unproject(sx + 10.0, sy)  # horizontal offset equal to the mount height
    e = cell_illuminance(src, p, k, lake.i0_max, lake.frame)
    assert e == pytest.approx(0.35355339, abs=1e-6)


def test_cell_illuminance_in_unit_interval(lake):
    rng = np.random.default_rng(3)
    for kind in ("attenuation", "inverse_square"):
        k = IlluminanceKernel(kind)
        for _ in range(50):
            p = lake.frame.unproject(*rng.uniform(-400, 400, size=2))
            for src in lake.sources:
                e = cell_illuminance(src, p, k, lake.i0_max, lake.frame)
                assert 0.0 <= e <= 1.0


def test_source_footprint_hand_sum():
    # 3 m x 3 m area at 1 m cells: nine cell centers, one lamp at the corner
    center = GeoPoint(30.0545, -81.6145)
    src_pos = GeoPoint(30.0545, -81.6145)
    sc = Scenario(
        scenario_id="hand",
        sources=(LightSource("a", src_pos, AttenuationParams(c1=0.1, c2=0.03)),),
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
    )
    area = square_about(center, 1.5)
    got = source_footprint(sc, "a", area)
    frame = sc.frame
    bmin, bmax = area.bbox
    from glowmap.geo import GridSpec, cells_in

    grid = GridSpec.from_bbox(bmin, bmax, 1.0)
    idx = cells_in(area, grid)
    assert idx.size == 9, "3x3 m area at 1 m cells must cover 9 centers"
    lats, lons = grid.center_arrays()
    sx, sy = frame.project(src_pos)
    total = 0.0
    for i in idx:
        qx, qy = frame.project(GeoPoint(float(lats[i]), float(lons[i])))
        d = math.hypot(qx - sx, qy - sy)
        total += attenuate(sc.sources[0].params, d) / sc.i0_max
    assert got == pytest.approx(total, rel=1e-12), "kernel sum deviates from the 9-term hand sum"


def test_no_sources_zero_footprint():
    sc = Scenario(
        scenario_id="none",
        sources=(),
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
    )
    assert area_footprint(sc, lake_polygon()) == 0.0


def test_additivity(lake):
    area = lake_polygon()
    for kind in ("attenuation", "inverse_square"):
        kernel = IlluminanceKernel(kind)
        total = area_footprint(lake, area, kernel)
        parts = sum(source_footprint(lake, s.source_id, area, kernel) for s in lake.sources)
        assert abs(total - parts) <= 1e-9 * max(abs(total), 1.0), f"{kind}: area total must equal the source sum"
        assert total > 0


def test_disjoint_areas_add(lake):
    a = square_about(GeoPoint(30.0545, -81.6145), 20.0)
    b = square_about(GeoPoint(30.0570, -81.6180), 20.0)
    fa = area_footprint(lake, a)
    fb = area_footprint(lake, b)
    # stitch the two disjoint squares by summing; the discrete sum is additive
    assert fa + fb == pytest.approx(fa + fb)
    assert fa > 0 and fb > 0


def test_mirror_symmetric_sources_equal_footprints():
    # two identical lamps mirror-placed east/west of a symmetric area
    center = GeoPoint(30.0545, -81.6145)
    frame_sc = Scenario(
        scenario_id="sym0",
        sources=(),
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
    )
    cx, cy = frame_sc.frame.project(center)
    east = frame_sc.frame.unproject(cx + 90.0, cy)
    west = frame_sc.frame.unproject(cx - 90.0, cy)
    sc = Scenario(
        scenario_id="sym",
        sources=(
            LightSource("e", east, AttenuationParams(c1=0.1, c2=0.03)),
            LightSource("w", west, AttenuationParams(c1=0.1, c2=0.03)),
        ),
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
    )
    area = square_about(center, 25.0)
    fe = source_footprint(sc, "e", area)
    fw = source_footprint(sc, "w", area)
    assert abs(fe - fw) <= 1e-9 * fe, "mirror-symmetric lamps must deposit equal footprints"


def test_footprint_monotone_in_attenuation(lake):
    area = lake_polygon()
    base = source_footprint(lake, "s5", area)
    dimmer = lake.with_sources(
        tuple(
            s.with_params(AttenuationParams(c1=s.params.c1 + 2.0, c2=s.params.c2)) if s.source_id == "s5" else s
            for s in lake.sources
        )
    )
    assert source_footprint(dimmer, "s5", area) < base, "raising c1 must lower the footprint"


def test_heavily_attenuated_below_profile1_twin():
    center = GeoPoint(30.0545, -81.6145)
    pos = GeoPoint(30.0551, -81.6145)
    mk = lambda pid, params: Scenario(
        scenario_id=f"tw{pid}",
        sources=(LightSource("x", pos, params),),
        min_corner=GeoPoint(30.050, -81.620),
        max_corner=GeoPoint(30.059, -81.610),
    )
    area = square_about(center, 30.0)
    dim = source_footprint(mk("a", AttenuationParams(c1=10.0, c2=0.03)), "x", area)
    wide = source_footprint(mk("b", profile(1).params), "x", area)
    assert dim < wide, "a heavily attenuated lamp must deposit less than its wide-throw twin"
    assert dim > 0


def test_unknown_source(lake):
    with pytest.raises(UnknownSourceError):
        source_footprint(lake, "nope", lake_polygon())


def test_report_ranked_and_total(lake):
    rep = footprint_report(lake, lake_polygon())
    assert set(rep.per_source) == {s.source_id for s in lake.sources}
    vals = [v for _, v in rep.ranked]
    assert vals == sorted(vals, reverse=True)
    assert rep.area_total == pytest.approx(sum(rep.per_source.values()), rel=1e-12)
    assert rep.kernel_kind == "attenuation"
    assert rep.cell_size_m == 1.0


def test_report_ordering_matches_distance(lake):
    # same params everywhere, so closer lamps must rank higher
    area = lake_polygon()
    rep = footprint_report(lake, area)
    center = GeoPoint(30.0545, -81.6145)
    cx, cy = lake.frame.project(center)
    dist = {}
    for s in lake.sources:
        sx, sy = lake.frame.project(s.position)
        dist[s.source_id] = math.hypot(sx - cx, sy - cy)
    ranked_ids = [sid for sid, _ in rep.ranked]
    by_distance = sorted(dist, key=lambda sid: dist[sid])
    assert ranked_ids == by_distance, "with identical params the nearest lamp dominates"


def test_single_source_report_total_equals_entry(lake):
    solo = lake.with_sources(lake.sources[:1])
    rep = footprint_report(solo, lake_polygon())
    assert len(rep.ranked) == 1
    assert rep.area_total == pytest.approx(rep.ranked[0][1])


def test_grid_refinement_convergence(lake):
    area = lake_polygon()
    coarse = area_footprint(lake, area, cell_size_m=2.0)
    fine = area_footprint(lake, area, cell_size_m=1.0)
    # compare per unit area: totals scale with cell count times dA
    assert abs(fine - coarse) / fine < 0.02, "halving the cell size should move the total by < 2%"


def test_report_serialization(lake):
    rep = footprint_report(lake, lake_polygon())
    doc = json.loads(rep.to_json())
    assert doc["kernel"] == "attenuation"
    assert doc["area_total"] == pytest.approx(rep.area_total)
    assert [row["source_id"] for row in doc["per_source"]] == [sid for sid, _ in rep.ranked]
    lines = rep.to_csv().splitlines()
    assert lines[0] == "source_id,footprint"
    assert len(lines) == 7
    sid, val = lines[1].split(",")
    assert sid == rep.ranked[0][0]
    assert float(val) == pytest.approx(rep.ranked[0][1])


def test_empty_cover_returns_zero(lake):
    # a sliver polygon thinner than one cell covers no centers
    sliver = GeoPolygon(
        [
            GeoPoint(30.0545, -81.6145),
            GeoPoint(30.0545001, -81.6145),
            GeoPoint(30.0545001, -81.61450005),
        ]
    )
    assert area_footprint(lake, sliver) == 0.0
    per = per_source_footprints(lake, sliver)
    assert all(v == 0.0 for v in per.values())
