"""HTTP API tests driven through the in-process test client. Numeric
responses are cross-checked against direct library calls on the same
scenario documents."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from glowmap.demo import lakefront_scenario
from glowmap.field import field_at, hotspots, render_grid
from glowmap.footprint import footprint_report
from glowmap.geo import GeoPoint
from glowmap.light import PROFILES, intensity_to_sqm, normalized_brightness
from glowmap.scenario_io import scenario_to_dict, sources_to_geojson
from glowmap.service import create_app

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture()
def client(store_root):
    app = create_app(store_root, jobs=2)
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def lake_doc(lake):
    return scenario_to_dict(lake)


def create_lake(client, lake_doc):
    resp = client.post("/scenarios", json=lake_doc)
    assert resp.status_code == 201, resp.text
    return resp.json()


def assert_error_shape(resp, code):
    body = resp.json()
    assert set(body) >= {"code", "message"}, f"uniform error body expected, got {body}"
    assert body["code"] == code


def wait_for_job(client, job_id, timeout_s=30.0):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        body = client.get(f"/jobs/{job_id}").json()
        if body["status"] in ("done", "failed"):
            return body
        time.sleep(0.05)
    raise AssertionError(f"job {job_id} did not finish within {timeout_s}s")


# ------------------------------------------------------------------ lifecycle


def test_health_endpoint(client):
    body = client.get("/").json()
    assert body["name"] == "glowmap"
    assert body["backend"] in ("compiled", "numpy")


def test_create_get_list_delete(client, lake_doc):
    created = create_lake(client, lake_doc)
    assert created == {"scenario_id": lake_doc["scenario_id"], "revision": 1}

    got = client.get(f"/scenarios/{lake_doc['scenario_id']}")
    assert got.status_code == 200
    assert got.json()["revision"] == 1
    assert got.json()["scenario"] == json.loads(json.dumps(lake_doc))

    listing = client.get("/scenarios").json()
    assert listing == [{"scenario_id": lake_doc["scenario_id"], "revision": 1}]

    assert client.delete(f"/scenarios/{lake_doc['scenario_id']}").status_code == 204
    assert client.get("/scenarios").json() == []


def test_create_duplicate_conflicts(client, lake_doc):
    create_lake(client, lake_doc)
    resp = client.post("/scenarios", json=lake_doc)
    assert resp.status_code == 409
    assert_error_shape(resp, "already_exists")


def test_create_invalid_scenario(client):
    resp = client.post("/scenarios", json={"scenario_id": "x"})
    assert resp.status_code == 400
    assert_error_shape(resp, "invalid_scenario")


def test_get_missing_scenario(client):
    resp = client.get("/scenarios/ghost")
    assert resp.status_code == 404
    assert_error_shape(resp, "not_found")


# -------------------------------------------------------------------- sources


def test_put_sources_with_profile_fill(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    rows = [{"id": "n1", "lat": 30.055, "lon": -81.615, "profile_id": 2}]
    resp = client.put(f"/scenarios/{sid}/sources", json={"revision": 1, "sources": rows})
    assert resp.status_code == 200, resp.text
    assert resp.json()["revision"] == 2

    got = client.get(f"/scenarios/{sid}").json()["scenario"]["sources"]
    assert len(got) == 1
    assert got[0]["params"]["c1"] == PROFILES[2].params.c1, "server fills params from the profile"


def test_put_sources_stale_revision(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    rows = [{"id": "n1", "lat": 30.055, "lon": -81.615, "profile_id": 2}]
    ok = client.put(f"/scenarios/{sid}/sources", json={"revision": 1, "sources": rows})
    assert ok.status_code == 200
    stale = client.put(f"/scenarios/{sid}/sources", json={"revision": 1, "sources": rows})
    assert stale.status_code == 409
    assert_error_shape(stale, "stale_revision")


def test_put_sources_invalid_rows(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    bad = [{"id": "n1", "lat": 95.0, "lon": -81.615, "profile_id": 2}]
    resp = client.put(f"/scenarios/{sid}/sources", json={"revision": 1, "sources": bad})
    assert resp.status_code == 400
    assert_error_shape(resp, "invalid_sources")
    missing = client.put(f"/scenarios/{sid}/sources", json={"sources": []})
    assert missing.status_code == 400


# --------------------------------------------------------------------- import


def test_import_csv_appends(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    dup = lake_doc["sources"][0]["id"]
    csv_data = (
        "id,lat,lon,profile\n"
        f"{dup},30.0551,-81.6151,1\n"
        "new1,30.0552,-81.6152,2\n"
        "new2,30.0553,-81.6153,\n"
    ).encode()
    resp = client.post(
        f"/scenarios/{sid}/import?format=csv&default_profile=3", content=csv_data
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["accepted"] == 2
    assert len(body["rejected"]) == 1 and "duplicate" in body["rejected"][0][1]
    assert body["profile_counts"] == {"2": 1, "3": 1}
    assert body["revision"] == 2

    got = client.get(f"/scenarios/{sid}").json()["scenario"]
    assert len(got["sources"]) == len(lake_doc["sources"]) + 2, "import appends, never replaces"


def test_import_geojson(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    doc = sources_to_geojson(
        [lake.sources[0].with_position(GeoPoint(30.0556, -81.6156))]
    )
    doc["features"][0]["properties"]["id"] = "gj1"
    resp = client.post(f"/scenarios/{sid}/import?format=geojson", content=json.dumps(doc))
    assert resp.status_code == 200, resp.text
    assert resp.json()["accepted"] == 1


def test_import_bad_requests(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    assert client.post(f"/scenarios/{sid}/import?format=xml", content=b"x").status_code == 422
    empty = client.post(f"/scenarios/{sid}/import?format=csv", content=b"")
    assert empty.status_code == 400
    assert_error_shape(empty, "bad_import")
    bad_profile = client.post(
        f"/scenarios/{sid}/import?format=csv&default_profile=77",
        content=b"id,lat,lon\nx,30.0551,-81.6151\n",
    )
    assert bad_profile.status_code == 422


# ---------------------------------------------------------------------- value


def test_value_probe_matches_library(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    p = GeoPoint(30.0545, -81.6145)
    resp = client.get(f"/scenarios/{sid}/value", params={"lat": p.lat_deg, "lon": p.lon_deg})
    body = resp.json()
    expected = field_at(lake, p)
    assert body["intensity"] == pytest.approx(expected, rel=1e-12)
    assert body["sqm"] == pytest.approx(intensity_to_sqm(expected, lake.i0_max), rel=1e-12)
    assert body["normalized"] == pytest.approx(
        normalized_brightness(intensity_to_sqm(expected, lake.i0_max)), rel=1e-12
    )


def test_value_probe_empty_scenario(client):
    doc = {
        "scenario_id": "empty",
        "bbox": {"min_lat": 30.0, "min_lon": -81.7, "max_lat": 30.01, "max_lon": -81.69},
        "sources": [],
    }
    assert client.post("/scenarios", json=doc).status_code == 201
    body = client.get("/scenarios/empty/value", params={"lat": 30.005, "lon": -81.695}).json()
    assert body == {"intensity": 0.0, "sqm": 22.0, "normalized": 0.0}


def test_value_probe_validation(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(f"/scenarios/{sid}/value", params={"lat": 95.0, "lon": 0.0})
    assert resp.status_code == 422
    resp = client.get(f"/scenarios/{sid}/value", params={"lat": "abc", "lon": 0.0})
    assert resp.status_code == 422
    assert_error_shape(resp, "validation_error")


# ---------------------------------------------------------------------- tiles


def lake_tile_address(lake, z=17):
    import math

    center_lat = (lake.min_corner.lat_deg + lake.max_corner.lat_deg) / 2
    center_lon = (lake.min_corner.lon_deg + lake.max_corner.lon_deg) / 2
    n = 2**z
    x = int((center_lon + 180.0) / 360.0 * n)
    lat_rad = math.radians(center_lat)
    y = int((1.0 - math.log(math.tan(lat_rad) + 1.0 / math.cos(lat_rad)) / math.pi) / 2.0 * n)
    return z, x, y


def test_tile_roundtrip_and_etag(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    z, x, y = lake_tile_address(lake)
    resp = client.get(f"/scenarios/{sid}/tiles/{z}/{x}/{y}.png")
    assert resp.status_code == 200
    assert resp.content[:8] == PNG_MAGIC
    assert resp.headers["content-type"] == "image/png"
    etag = resp.headers["etag"]
    assert etag == f'"{sid}-1-{z}-{x}-{y}"'

    cached = client.get(
        f"/scenarios/{sid}/tiles/{z}/{x}/{y}.png", headers={"If-None-Match": etag}
    )
    assert cached.status_code == 304
    assert cached.content == b""


def test_tile_etag_changes_with_revision(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    z, x, y = lake_tile_address(lake)
    first = client.get(f"/scenarios/{sid}/tiles/{z}/{x}/{y}.png").headers["etag"]
    rows = [{"id": "n1", "lat": 30.055, "lon": -81.615, "profile_id": 2}]
    client.put(f"/scenarios/{sid}/sources", json={"revision": 1, "sources": rows})
    second = client.get(f"/scenarios/{sid}/tiles/{z}/{x}/{y}.png").headers["etag"]
    assert first != second, "new revision must invalidate cached tiles"
    stale = client.get(
        f"/scenarios/{sid}/tiles/{z}/{x}/{y}.png", headers={"If-None-Match": first}
    )
    assert stale.status_code == 200, "old ETag no longer matches"


def test_tile_bad_address(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(f"/scenarios/{sid}/tiles/23/0/0.png")
    assert resp.status_code == 422
    assert_error_shape(resp, "bad_tile_address")


# ------------------------------------------------------------------ footprint


def test_footprint_matches_library(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(f"/scenarios/{sid}/footprint", params={"area": "lake"})
    assert resp.status_code == 200
    body = resp.json()
    report = footprint_report(lake, "lake")
    assert body["area_total"] == pytest.approx(report.area_total, rel=1e-12)
    assert [r["source_id"] for r in body["per_source"]] == [sid_ for sid_, _ in report.ranked]
    assert body["kernel"] == "attenuation"


def test_footprint_parameter_errors(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    missing = client.get(f"/scenarios/{sid}/footprint", params={"area": "swamp"})
    assert missing.status_code == 404
    assert_error_shape(missing, "unknown_area")
    bad = client.get(f"/scenarios/{sid}/footprint", params={"area": "lake", "kernel": "warp"})
    assert bad.status_code == 422
    assert_error_shape(bad, "bad_kernel")
    neg = client.get(
        f"/scenarios/{sid}/footprint", params={"area": "lake", "cell_size_m": -1.0}
    )
    assert neg.status_code == 422


def test_footprint_inverse_square_kernel(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(
        f"/scenarios/{sid}/footprint",
        params={"area": "lake", "kernel": "inverse_square", "mount_height_m": 8.0},
    )
    assert resp.status_code == 200
    assert resp.json()["kernel"] == "inverse_square"


# ------------------------------------------------------------------- hotspots


def test_hotspots_match_library(client, lake_doc, lake):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(f"/scenarios/{sid}/hotspots", params={"threshold": 20.5})
    assert resp.status_code == 200
    body = resp.json()
    regions = hotspots(render_grid(lake), 20.5, i0_max=lake.i0_max)
    assert len(body["regions"]) == len(regions)
    if regions:
        assert body["regions"][0]["cell_count"] == regions[0].cell_count
        assert body["regions"][0]["cells"] == list(regions[0].cells)


def test_hotspots_threshold_validation(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    resp = client.get(f"/scenarios/{sid}/hotspots", params={"threshold": 25.0})
    assert resp.status_code == 422
    assert_error_shape(resp, "bad_threshold")


# ----------------------------------------------------------------------- jobs


def test_optimize_job_lifecycle(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    submit = client.post(
        f"/scenarios/{sid}/optimize", json={"mode": "tune_c1", "target": {"area": "lake"}}
    )
    assert submit.status_code == 202, submit.text
    job_id = submit.json()["job_id"]

    job = wait_for_job(client, job_id)
    assert job["status"] == "done", job.get("error")
    result = job["result"]
    assert result["converged"] is True
    for row in result["sources"]:
        assert row["after"]["c1"] == pytest.approx(0.65, abs=1e-3)

    # apply the result through the normal CAS update path
    apply_rows = result["scenario_after_sources"]
    resp = client.put(
        f"/scenarios/{sid}/sources", json={"revision": job["revision"], "sources": apply_rows}
    )
    assert resp.status_code == 200
    updated = client.get(f"/scenarios/{sid}").json()["scenario"]["sources"]
    assert all(abs(r["params"]["c1"] - 0.65) < 1e-3 for r in updated)


def test_optimize_validation_errors(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    bad_mode = client.post(
        f"/scenarios/{sid}/optimize", json={"mode": "warp", "target": {"area": "lake"}}
    )
    assert bad_mode.status_code == 422
    assert_error_shape(bad_mode, "invalid_spec")
    bad_area = client.post(
        f"/scenarios/{sid}/optimize", json={"mode": "tune_c1", "target": {"area": "pond"}}
    )
    assert bad_area.status_code == 422
    assert_error_shape(bad_area, "unknown_area")
    missing = client.post(
        "/scenarios/ghost/optimize", json={"mode": "tune_c1", "target": {"area": "lake"}}
    )
    assert missing.status_code == 404


def test_job_not_found(client):
    resp = client.get("/jobs/doesnotexist")
    assert resp.status_code == 404
    assert_error_shape(resp, "not_found")


def test_parallel_jobs_fifo(client, lake_doc):
    create_lake(client, lake_doc)
    sid = lake_doc["scenario_id"]
    ids = []
    for _ in range(3):
        resp = client.post(
            f"/scenarios/{sid}/optimize", json={"mode": "tune_c1", "target": {"area": "lake"}}
        )
        ids.append(resp.json()["job_id"])
    for job_id in ids:
        job = wait_for_job(client, job_id)
        assert job["status"] == "done"
