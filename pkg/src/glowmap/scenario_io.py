"""Scenario serialization, a revisioned on-disk store, and bulk imports.

Documents are plain JSON. The store keeps one file per scenario under its
root, each wrapping the scenario in an envelope with a format version, a
monotonically increasing revision, and a checksum of the canonical scenario
body. Saves are compare-and-swap on the revision so concurrent editors
cannot silently clobber each other.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptDocumentError,
    EmptyFileError,
    MalformedHeaderError,
    NotAFeatureCollectionError,
    StaleRevisionError,
    UnknownProfileError,
)
from .field import Scenario
from .geo import GeoPoint, GeoPolygon
from .light import AttenuationParams, LightSource, profile

FORMAT_VERSION = 1
_ID_PATTERN = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.-]*")


def _req(doc: dict, key: str):
    if key not in doc:
        raise ValueError(f"scenario document is missing {key!r}")
    return doc[key]


def scenario_to_dict(scenario: Scenario) -> dict:
    """Scenario -> plain JSON-serializable dict."""
    sources = []
    for s in scenario.sources:
        row = {
            "id": s.source_id,
            "lat": s.position.lat_deg,
            "lon": s.position.lon_deg,
            "profile_id": s.profile_id,
            "params": {
                "c1": s.params.c1,
                "c2": s.params.c2,
                "i0": s.params.i0,
                "alpha": s.params.alpha,
            },
        }
        sources.append(row)
    areas = {
        name: [[v.lat_deg, v.lon_deg] for v in poly.ring[:-1]]
        for name, poly in scenario.protected_areas.items()
    }
    bmin, bmax = scenario.min_corner, scenario.max_corner
    return {
        "scenario_id": scenario.scenario_id,
        "bbox": {
            "min_lat": bmin.lat_deg,
            "min_lon": bmin.lon_deg,
            "max_lat": bmax.lat_deg,
            "max_lon": bmax.lon_deg,
        },
        "cell_size_m": scenario.cell_size_m,
        "alpha": scenario.alpha,
        "sources": sources,
        "protected_areas": areas,
    }


def source_from_dict(row: dict) -> LightSource:
    """One source row -> LightSource.

    ``params`` may be omitted when ``profile_id`` is given; it is then
    filled from the stock profile. When both are given they must agree.
    """
    position = GeoPoint(float(_req(row, "lat")), float(_req(row, "lon")))
    profile_id = row.get("profile_id")
    raw = row.get("params")
    if raw is None:
        if profile_id is None:
            raise ValueError(f"source {row.get('id')!r} has neither params nor profile_id")
        params = profile(int(profile_id)).params
    else:
        params = AttenuationParams(
            c1=float(raw["c1"]),
            c2=float(raw["c2"]),
            i0=float(raw.get("i0", 16.0)),
            alpha=float(raw.get("alpha", 0.1)),
        )
    return LightSource(
        source_id=str(_req(row, "id")),
        position=position,
        params=params,
        profile_id=None if profile_id is None else int(profile_id),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    """Plain dict -> Scenario; raises ValueError on structural problems."""
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a JSON object")
    bbox = _req(doc, "bbox")
    sources = tuple(source_from_dict(row) for row in doc.get("sources", []))
    areas = {}
    for name, ring in doc.get("protected_areas", {}).items():
        areas[name] = GeoPolygon([GeoPoint(float(a), float(b)) for a, b in ring])
    return Scenario(
        scenario_id=str(_req(doc, "scenario_id")),
        sources=sources,
        min_corner=GeoPoint(float(_req(bbox, "min_lat")), float(_req(bbox, "min_lon"))),
        max_corner=GeoPoint(float(_req(bbox, "max_lat")), float(_req(bbox, "max_lon"))),
        cell_size_m=float(doc.get("cell_size_m", 10.0)),
        alpha=float(doc.get("alpha", 0.1)),
        protected_areas=areas,
    )


def canonical_json(doc: dict) -> str:
    """Key-sorted, separator-stable JSON used for checksums."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _checksum(scenario_doc: dict) -> str:
    return hashlib.sha256(canonical_json(scenario_doc).encode()).hexdigest()


class ScenarioStore:
    """One JSON file per scenario with CAS revisions and checksums.

    save() with expected_revision enforces compare-and-swap: the caller
    must name the revision it read, and a mismatch raises
    StaleRevisionError. Writes go through a temp file and os.replace so a
    crash never leaves a half-written document.
    """

    def __init__(self, root: "str | Path"):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, scenario_id: str) -> Path:
        if not _ID_PATTERN.fullmatch(scenario_id):
            raise ValueError(f"scenario id {scenario_id!r} is not storable")
        return self.root / f"{scenario_id}.json"

    def save(self, scenario: Scenario, expected_revision: "int | None" = None) -> int:
        """Persist and return the new revision (1 for a first save).

        expected_revision semantics: None skips the check; 0 requires that
        the scenario not exist yet; otherwise it must equal the currently
        stored revision.
        """
        path = self._path(scenario.scenario_id)
        with self._lock:
            current = 0
            if path.exists():
                current = self._read_envelope(path)["revision"]
            if expected_revision is not None and expected_revision != current:
                raise StaleRevisionError(
                    f"scenario {scenario.scenario_id!r} is at revision {current}, "
                    f"caller expected {expected_revision}"
                )
            body = scenario_to_dict(scenario)
            envelope = {
                "format_version": FORMAT_VERSION,
                "revision": current + 1,
                "checksum": _checksum(body),
                "scenario": body,
            }
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(envelope, indent=1))
            tmp.replace(path)
            return current + 1

    def _read_envelope(self, path: Path) -> dict:
        try:
            envelope = json.loads(path.read_text())
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptDocumentError(f"{path.name}: not valid JSON") from exc
        if not isinstance(envelope, dict) or not {"revision", "checksum", "scenario"} <= set(envelope):
            raise CorruptDocumentError(f"{path.name}: missing envelope fields")
        if envelope.get("format_version") != FORMAT_VERSION:
            raise CorruptDocumentError(f"{path.name}: unsupported format version")
        if _checksum(envelope["scenario"]) != envelope["checksum"]:
            raise CorruptDocumentError(f"{path.name}: checksum mismatch")
        return envelope

    def load(self, scenario_id: str) -> tuple[Scenario, int]:
        """Read one scenario and its revision; FileNotFoundError if absent."""
        path = self._path(scenario_id)
        if not path.exists():
            raise FileNotFoundError(f"no stored scenario {scenario_id!r}")
        envelope = self._read_envelope(path)
        try:
            scenario = scenario_from_dict(envelope["scenario"])
        except (ValueError, TypeError, KeyError) as exc:
            raise CorruptDocumentError(f"{path.name}: {exc}") from exc
        return scenario, int(envelope["revision"])

    def exists(self, scenario_id: str) -> bool:
        return self._path(scenario_id).exists()

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def delete(self, scenario_id: str) -> None:
        path = self._path(scenario_id)
        if not path.exists():
            raise FileNotFoundError(f"no stored scenario {scenario_id!r}")
        path.unlink()


@dataclass(frozen=True)
class ImportReport:
    """Result of a bulk import: what got in, what did not, and why.

    ``rejected`` pairs a 1-based CSV line number (or 0-based GeoJSON
    feature index) with a human-readable reason. Every input row lands in
    exactly one of the two lists.
    """

    accepted: tuple[LightSource, ...]
    rejected: tuple[tuple[int, str], ...]
    profile_counts: "dict[int, int]"


def _decode(data: "bytes | str") -> str:
    return data.decode("utf-8") if isinstance(data, bytes) else data


def import_sources_csv(
    data: "bytes | str",
    default_profile: int = 4,
    existing_ids: "frozenset[str] | set[str]" = frozenset(),
) -> ImportReport:
    """Parse lamp rows from CSV with header id,lat,lon[,profile].

    Header matching is case- and whitespace-insensitive; extra columns are
    ignored. Bad rows are rejected individually with their line number, so
    one typo never sinks a whole import. ``existing_ids`` are treated as
    taken and matching rows rejected.
    """
    default_profile = profile(default_profile).profile_id
    text = _decode(data)
    if not text.strip():
        raise EmptyFileError("no CSV content")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFileError("no CSV content") from None
    names = [h.strip().lower() for h in header]
    cols = {name: i for i, name in enumerate(names)}
    missing = {"id", "lat", "lon"} - set(cols)
    if missing:
        raise MalformedHeaderError(f"CSV header lacks columns: {sorted(missing)}")

    accepted: list[LightSource] = []
    rejected: list[tuple[int, str]] = []
    counts: dict[int, int] = {}
    seen = set(existing_ids)

    def cell(row: list[str], name: str) -> str:
        i = cols.get(name)
        if i is None or i >= len(row):
            return ""
        return row[i].strip()

    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        source_id = cell(row, "id")
        if not source_id:
            rejected.append((line_no, "empty id"))
            continue
        if source_id in seen:
            rejected.append((line_no, f"duplicate id {source_id!r}"))
            continue
        try:
            position = GeoPoint(float(cell(row, "lat")), float(cell(row, "lon")))
        except ValueError as exc:
            rejected.append((line_no, f"bad coordinates: {exc}"))
            continue
        raw_profile = cell(row, "profile") if "profile" in cols else ""
        try:
            pid = int(raw_profile) if raw_profile else default_profile
            prof = profile(pid)
        except (ValueError, UnknownProfileError) as exc:
            rejected.append((line_no, str(exc)))
            continue
        seen.add(source_id)
        accepted.append(LightSource(source_id, position, prof.params, profile_id=prof.profile_id))
        counts[prof.profile_id] = counts.get(prof.profile_id, 0) + 1
    return ImportReport(tuple(accepted), tuple(rejected), counts)


def import_sources_geojson(
    data: "bytes | str",
    default_profile: int = 4,
    existing_ids: "frozenset[str] | set[str]" = frozenset(),
) -> ImportReport:
    """Parse lamp locations from a GeoJSON FeatureCollection of Points.

    Coordinates follow the GeoJSON convention [lon, lat]. Feature
    properties may carry ``id`` and ``profile``; absent ids are generated.
    Non-Point features are rejected by 0-based feature index.
    """
    default_profile = profile(default_profile).profile_id
    doc = json.loads(_decode(data))
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise NotAFeatureCollectionError("top-level object must be a FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise NotAFeatureCollectionError("FeatureCollection has no features array")

    accepted: list[LightSource] = []
    rejected: list[tuple[int, str]] = []
    counts: dict[int, int] = {}
    seen = set(existing_ids)
    next_generated = 1

    for idx, feat in enumerate(features):
        geom = feat.get("geometry") if isinstance(feat, dict) else None
        if not isinstance(geom, dict):
            rejected.append((idx, "feature has no geometry"))
            continue
        if geom.get("type") != "Point":
            rejected.append((idx, f"geometry type {geom.get('type')!r} is not Point"))
            continue
        coords = geom.get("coordinates")
        if not isinstance(coords, (list, tuple)) or len(coords) < 2:
            rejected.append((idx, "Point needs [lon, lat] coordinates"))
            continue
        props = feat.get("properties") or {}
        source_id = str(props.get("id") or "").strip()
        if not source_id:
            while True:
                source_id = f"src-{next_generated:04d}"
                next_generated += 1
                if source_id not in seen:
                    break
        if source_id in seen:
            rejected.append((idx, f"duplicate id {source_id!r}"))
            continue
        try:
            position = GeoPoint(float(coords[1]), float(coords[0]))
            raw_profile = props.get("profile")
            pid = default_profile if raw_profile in (None, "") else int(raw_profile)
            prof = profile(pid)
        except (ValueError, TypeError, UnknownProfileError) as exc:
            rejected.append((idx, str(exc)))
            continue
        seen.add(source_id)
        accepted.append(LightSource(source_id, position, prof.params, profile_id=prof.profile_id))
        counts[prof.profile_id] = counts.get(prof.profile_id, 0) + 1
    return ImportReport(tuple(accepted), tuple(rejected), counts)


def sources_to_geojson(sources) -> dict:
    """Sources -> GeoJSON FeatureCollection (Point features, [lon, lat])."""
    features = []
    for s in sources:
        props = {"id": s.source_id}
        if s.profile_id is not None:
            props["profile"] = s.profile_id
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [s.position.lon_deg, s.position.lat_deg],
                },
                "properties": props,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def generate_synthetic_sources(
    n: int,
    min_corner: GeoPoint,
    max_corner: GeoPoint,
    seed: int = 0,
) -> bytes:
    """Deterministic CSV of ``n`` random lamps inside a bounding box."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    lats = rng.uniform(min_corner.lat_deg, max_corner.lat_deg, n)
    lons = rng.uniform(min_corner.lon_deg, max_corner.lon_deg, n)
    profiles = rng.integers(1, 6, n)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "lat", "lon", "profile"])
    for i in range(n):
        writer.writerow([f"s{i + 1:05d}", repr(float(lats[i])), repr(float(lons[i])), int(profiles[i])])
    return buf.getvalue().encode()
