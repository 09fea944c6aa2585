"""Spatial interpolation of sparse sky-quality samples.

Six estimators behind one call: inverse-distance weighting (fixed power 2),
a localized modified-Shepard variant, ordinary kriging with an exponential
variogram, thin-plate-spline RBF with a linear tail, variable-power IDW, and
nearest-neighbor. All of them are exact at sample positions and deterministic
for a given sample set.

Sample sets load from CSV with header ``lat,lon,sqm`` (decimal degrees).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyFileError,
    MalformedHeaderError,
    SingularSystemError,
    TooFewSamplesError,
)
from .geo import GeoPoint, LocalFrame

METHOD_TAGS = ("idw", "shepard", "kriging", "rbf", "idw_vp", "nni")

#: queries closer than this (meters) to a sample are treated as coincident
COINCIDENT_QUERY_EPS_M = 1e-9


@dataclass(frozen=True)
class SamplePoint:
    """One field measurement: position and sky-quality value."""

    position: GeoPoint
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"sample value must be finite, got {self.value}")


@dataclass(frozen=True)
class InterpMethod:
    """An estimator choice plus its hyperparameters.

    tag: one of idw, shepard, kriging, rbf, idw_vp, nni (hyphens accepted).
    power: IDW exponent; fixed at 2 for plain idw, adjustable in [1, 6]
        for idw_vp.
    radius_factor: Shepard search radius as a multiple of the mean
        nearest-neighbor spacing of the sample set.
    lag_bins: number of lag bins for the empirical variogram (kriging).
    nugget_floor: lower bound on the fitted nugget, for conditioning.
    ridge: diagonal regularization for the RBF system.
    """

    tag: str
    power: float = 2.0
    radius_factor: float = 2.0
    lag_bins: int = 8
    nugget_floor: float = 1e-6
    ridge: float = 1e-8

    def __post_init__(self) -> None:
        norm = self.tag.lower().replace("-", "_")
        if norm not in METHOD_TAGS:
            raise ValueError(f"unknown interpolation tag {self.tag!r}; expected one of {METHOD_TAGS}")
        object.__setattr__(self, "tag", norm)
        if norm == "idw" and self.power != 2.0:
            raise ValueError("plain idw is fixed at power 2; use idw_vp to vary the exponent")
        if norm == "idw_vp" and not 1.0 <= self.power <= 6.0:
            raise ValueError(f"idw_vp power must be in [1, 6], got {self.power}")
        if self.radius_factor <= 0:
            raise ValueError("radius_factor must be positive")
        if self.lag_bins < 2:
            raise ValueError("lag_bins must be at least 2")
        if self.nugget_floor < 0 or self.ridge < 0:
            raise ValueError("nugget_floor and ridge must be >= 0")


@dataclass
class LooReport:
    """Leave-one-out cross-validation results.

    estimates[i] / abs_errors[i] are None when fold i failed (its error is
    excluded from the mean). mean_abs_error is the arithmetic mean over the
    successful folds.
    """

    method_tag: str
    estimates: "list[float | None]"
    abs_errors: "list[float | None]"
    mean_abs_error: float
    n_folds: int
    n_failed: int
    failed_folds: list[int] = field(default_factory=list)


def error_variance_pct(estimate: float, baseline: float) -> float:
    """Relative disagreement of an estimate against a reference value, in percent."""
    if baseline == 0:
        raise ValueError("baseline must be nonzero")
    return abs(estimate - baseline) / abs(baseline) * 100.0


def _prepare(samples: "list[SamplePoint]", frame: LocalFrame):
    """Project samples to frame meters and merge duplicate positions."""
    lats = np.array([s.position.lat_deg for s in samples])
    lons = np.array([s.position.lon_deg for s in samples])
    xs, ys = frame.project_arrays(lats, lons)
    vals = np.array([s.value for s in samples], dtype=float)
    # merge positions closer than the coincidence epsilon, averaging values
    n = xs.size
    keep: list[int] = []
    merged_into = np.full(n, -1, dtype=int)
    for i in range(n):
        dup = -1
        for k in keep:
            if (xs[i] - xs[k]) ** 2 + (ys[i] - ys[k]) ** 2 < COINCIDENT_QUERY_EPS_M**2:
                dup = k
                break
        if dup < 0:
            keep.append(i)
        else:
            merged_into[i] = dup
    if len(keep) < n:
        warnings.warn(
            f"{n - len(keep)} duplicate sample position(s) averaged",
            stacklevel=3,
        )
        out_x, out_y, out_v = [], [], []
        for k in keep:
            group = [vals[k]] + [vals[i] for i in range(n) if merged_into[i] == k]
            out_x.append(xs[k])
            out_y.append(ys[k])
            out_v.append(float(np.mean(group)))
        return np.array(out_x), np.array(out_y), np.array(out_v)
    return xs, ys, vals


def _idw(d: np.ndarray, vals: np.ndarray, power: float) -> float:
    w = 1.0 / d**power
    return float(np.sum(w * vals) / np.sum(w))


def _shepard(d: np.ndarray, vals: np.ndarray, xs: np.ndarray, ys: np.ndarray, radius_factor: float) -> float:
    if xs.size == 1:
        return float(vals[0])
    # mean nearest-neighbor spacing sets the search radius
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    np.fill_diagonal(dist, np.inf)
    radius = radius_factor * float(dist.min(axis=1).mean())
    near = d < radius
    if not near.any():
        # sparse coverage: no sample within the search radius, use global IDW
        return _idw(d, vals, 2.0)
    dn = d[near]
    w = ((radius - dn) / (radius * dn)) ** 2
    return float(np.sum(w * vals[near]) / np.sum(w))


def _fit_variogram(xs: np.ndarray, ys: np.ndarray, vals: np.ndarray, lag_bins: int, nugget_floor: float):
    """Least-squares exponential variogram fit on binned semivariances.

    Returns (nugget, sill, range) for gamma(h) = nugget + sill * (1 - exp(-h/range)).
    """
    iu, ju = np.triu_indices(xs.size, k=1)
    h = np.hypot(xs[iu] - xs[ju], ys[iu] - ys[ju])
    sv = 0.5 * (vals[iu] - vals[ju]) ** 2
    hmax = float(h.max())
    width = hmax / lag_bins
    idx = np.minimum((h / width).astype(int), lag_bins - 1)
    centers, gammas = [], []
    for b in range(lag_bins):
        m = idx == b
        if m.any():
            centers.append((b + 0.5) * width)
            gammas.append(float(sv[m].mean()))
    hc = np.array(centers)
    gc = np.array(gammas)
    best = None
    for r in np.geomspace(hmax / 100.0, hmax * 2.0, 48):
        basis = 1.0 - np.exp(-hc / r)
        design = np.column_stack([np.ones_like(hc), basis])
        coef, *_ = np.linalg.lstsq(design, gc, rcond=None)
        nug = max(float(coef[0]), nugget_floor)
        sill = max(float(coef[1]), 1e-12)
        sse = float(np.sum((nug + sill * basis - gc) ** 2))
        if best is None or sse < best[0]:
            best = (sse, nug, sill, float(r))
    _, nug, sill, rng = best
    return nug, sill, rng


def _kriging(d: np.ndarray, vals: np.ndarray, xs: np.ndarray, ys: np.ndarray, method: InterpMethod) -> float:
    n = xs.size
    nug, sill, rng = _fit_variogram(xs, ys, vals, method.lag_bins, method.nugget_floor)

    def gamma(h):
        return nug + sill * (1.0 - np.exp(-h / rng))

    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    hij = np.sqrt(dx * dx + dy * dy)
    a = np.empty((n + 1, n + 1))
    a[:n, :n] = gamma(hij)
    np.fill_diagonal(a[:n, :n], 0.0)
    a[n, :n] = 1.0
    a[:n, n] = 1.0
    a[n, n] = 0.0
    rhs = np.empty(n + 1)
    rhs[:n] = gamma(d)
    rhs[n] = 1.0
    try:
        lam = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"kriging system is singular: {exc}") from None
    if not np.all(np.isfinite(lam)):
        raise SingularSystemError("kriging system produced non-finite weights")
    return float(lam[:n] @ vals)


def _rbf_tps(d: np.ndarray, vals: np.ndarray, xs: np.ndarray, ys: np.ndarray, qx: float, qy: float, ridge: float) -> float:
    n = xs.size
    # center and scale coordinates for conditioning; the spline is fit in
    # the scaled plane, which preserves exactness at the nodes
    cx, cy = float(xs.mean()), float(ys.mean())
    sx, sy = (xs - cx), (ys - cy)
    qxs, qys = qx - cx, qy - cy
    dx = sx[:, None] - sx[None, :]
    dy = sy[:, None] - sy[None, :]
    r = np.sqrt(dx * dx + dy * dy)
    scale = float(r[r > 0].mean()) if (r > 0).any() else 1.0
    r /= scale

    def phi(rr):
        out = np.zeros_like(rr)
        pos = rr > 0
        out[pos] = rr[pos] ** 2 * np.log(rr[pos])
        return out

    a_kernel = phi(r) + ridge * np.eye(n)
    if n >= 3:
        p = np.column_stack([np.ones(n), sx / scale, sy / scale])
    else:
        p = np.ones((n, 1))
    m = p.shape[1]
    a = np.zeros((n + m, n + m))
    a[:n, :n] = a_kernel
    a[:n, n:] = p
    a[n:, :n] = p.T
    rhs = np.zeros(n + m)
    rhs[:n] = vals
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"thin-plate system is singular: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise SingularSystemError("thin-plate system produced non-finite weights")
    w, c = sol[:n], sol[n:]
    rq = np.hypot(sx - qxs, sy - qys) / scale
    val = float(w @ phi(rq))
    if m == 3:
        val += float(c[0] + c[1] * qxs / scale + c[2] * qys / scale)
    else:
        val += float(c[0])
    return val


def interpolate(method: InterpMethod, samples: "list[SamplePoint]", query: GeoPoint, frame: LocalFrame) -> float:
    """Estimate the field value at ``query`` from scattered samples.

    Every method returns the sample's own value when the query lands exactly
    on a sample position. Raises TooFewSamplesError when the sample set is
    too small for the method (1 minimum; 3 for kriging) and
    SingularSystemError when a linear system cannot be solved, which callers
    may treat as a cue to fall back to idw.
    """
    if len(samples) < 1:
        raise TooFewSamplesError("need at least one sample")
    if method.tag == "kriging" and len(samples) < 3:
        raise TooFewSamplesError("kriging needs at least three samples")
    xs, ys, vals = _prepare(samples, frame)
    qx, qy = frame.project(query)
    d = np.hypot(xs - qx, ys - qy)
    hit = int(np.argmin(d))
    if d[hit] < COINCIDENT_QUERY_EPS_M:
        return float(vals[hit])
    if method.tag == "idw":
        return _idw(d, vals, 2.0)
    if method.tag == "idw_vp":
        return _idw(d, vals, method.power)
    if method.tag == "shepard":
        return _shepard(d, vals, xs, ys, method.radius_factor)
    if method.tag == "nni":
        return float(vals[hit])
    if method.tag == "kriging":
        if xs.size < 3:
            raise TooFewSamplesError("kriging needs at least three distinct sample positions")
        return _kriging(d, vals, xs, ys, method)
    return _rbf_tps(d, vals, xs, ys, qx, qy, method.ridge)


def leave_one_out(method: InterpMethod, samples: "list[SamplePoint]", frame: LocalFrame) -> LooReport:
    """Hold out each sample in turn and estimate it from the rest.

    Folds that raise (too few remaining samples, singular systems) are
    recorded as failed and excluded from the mean absolute error.
    """
    if len(samples) < 3:
        raise TooFewSamplesError("leave-one-out needs at least three samples")
    estimates: "list[float | None]" = []
    errors: "list[float | None]" = []
    failed: list[int] = []
    for i, held in enumerate(samples):
        rest = samples[:i] + samples[i + 1 :]
        try:
            est = interpolate(method, rest, held.position, frame)
        except (TooFewSamplesError, SingularSystemError):
            estimates.append(None)
            errors.append(None)
            failed.append(i)
            continue
        estimates.append(est)
        errors.append(abs(est - held.value))
    ok = [e for e in errors if e is not None]
    mean_err = float(np.mean(ok)) if ok else float("nan")
    return LooReport(
        method_tag=method.tag,
        estimates=estimates,
        abs_errors=errors,
        mean_abs_error=mean_err,
        n_folds=len(samples),
        n_failed=len(failed),
        failed_folds=failed,
    )


def load_samples_csv(data: "bytes | str") -> "list[SamplePoint]":
    """Parse a sample set from CSV text with header ``lat,lon,sqm``."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    text = data.strip()
    if not text:
        raise EmptyFileError("sample CSV is empty")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if [h.strip().lower() for h in header] != ["lat", "lon", "sqm"]:
        raise MalformedHeaderError(f"expected header lat,lon,sqm, got {','.join(header)!r}")
    out: list[SamplePoint] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            lat, lon, sqm = (float(c) for c in row)
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {row!r}") from None
        out.append(SamplePoint(GeoPoint(lat, lon), sqm))
    if not out:
        raise EmptyFileError("sample CSV has a header but no rows")
    return out
