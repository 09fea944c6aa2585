"""Scattered-data interpolation: six estimators and the LOO harness."""

import numpy as np
import pytest

from glowmap.errors import EmptyFileError, MalformedHeaderError, TooFewSamplesError
from glowmap.geo import GeoPoint, make_local_frame
from glowmap.interp import (
    METHOD_TAGS,
    InterpMethod,
    SamplePoint,
    error_variance_pct,
    interpolate,
    leave_one_out,
    load_samples_csv,
)

FRAME = make_local_frame(GeoPoint(27.438, -80.312))


def mk_samples(offsets_m, values):
    """Build samples from (east, north) meter offsets in the shared frame."""
    out = []
    for (x, y), v in zip(offsets_m, values):
        out.append(SamplePoint(FRAME.unproject(x, y), v))
    return out


def scatter(rng, n, span=400.0, lo=16.5, hi=21.5):
    pts = rng.uniform(-span, span, size=(n, 2))
    vals = rng.uniform(lo, hi, size=n)
    return mk_samples(pts, vals)


def all_methods():
    return [InterpMethod(tag) for tag in METHOD_TAGS]


def test_method_tag_validation():
    assert InterpMethod("IDW-VP").tag == "idw_vp"
    assert InterpMethod("Kriging").tag == "kriging"
    with pytest.raises(ValueError):
        InterpMethod("spline")
    with pytest.raises(ValueError):
        InterpMethod("idw_vp", power=0.5)
    with pytest.raises(ValueError):
        InterpMethod("idw_vp", power=6.5)
    with pytest.raises(ValueError):
        InterpMethod("idw", power=3.0)
    with pytest.raises(ValueError):
        InterpMethod("kriging", lag_bins=1)


def test_sample_validation():
    with pytest.raises(ValueError):
        SamplePoint(GeoPoint(0, 0), float("nan"))


@pytest.mark.parametrize("method", all_methods(), ids=lambda m: m.tag)
def test_node_exactness(method):
    rng = np.random.default_rng(5)
    samples = scatter(rng, 9)
    for s in samples:
        got = interpolate(method, samples, s.position, FRAME)
        assert got == pytest.approx(s.value, abs=1e-9), f"{method.tag} not exact at a sample position"


def test_idw_midpoint_symmetry():
    samples = mk_samples([(-50.0, 0.0), (50.0, 0.0)], [10.0, 20.0])
    mid = FRAME.unproject(0.0, 0.0)
    assert interpolate(InterpMethod("idw"), samples, mid, FRAME) == pytest.approx(15.0)


def test_idw_matches_direct_oracle():
    rng = np.random.default_rng(17)
    samples = scatter(rng, 20)
    xs = np.array([FRAME.project(s.position)[0] for s in samples])
    ys = np.array([FRAME.project(s.position)[1] for s in samples])
    vals = np.array([s.value for s in samples])
    for _ in range(100):
        qx, qy = rng.uniform(-450, 450, size=2)
        q = FRAME.unproject(qx, qy)
        d2 = (xs - qx) ** 2 + (ys - qy) ** 2
        if d2.min() < 1.0:  # avoid near-node cases; exactness tested separately
            continue
        w = 1.0 / d2
        expected = float(np.sum(w * vals) / np.sum(w))
        got = interpolate(InterpMethod("idw"), samples, q, FRAME)
        assert got == pytest.approx(expected, abs=1e-10), "idw deviates from the direct weighted sum"


def test_idw_vp_power_changes_locality():
    # higher power leans harder on the nearest sample
    samples = mk_samples([(0.0, 0.0), (100.0, 0.0)], [10.0, 20.0])
    q = FRAME.unproject(30.0, 0.0)
    low = interpolate(InterpMethod("idw_vp", power=1.0), samples, q, FRAME)
    high = interpolate(InterpMethod("idw_vp", power=6.0), samples, q, FRAME)
    assert high < low, "raising the power should pull the estimate toward the nearest sample"
    assert 10.0 < high < low < 20.0


@pytest.mark.parametrize("tag", ["idw", "shepard", "nni", "idw_vp"])
def test_bounded_methods_stay_in_sample_range(tag):
    rng = np.random.default_rng(23)
    samples = scatter(rng, 12)
    vmin = min(s.value for s in samples)
    vmax = max(s.value for s in samples)
    for _ in range(60):
        q = FRAME.unproject(*rng.uniform(-500, 500, size=2))
        got = interpolate(InterpMethod(tag), samples, q, FRAME)
        assert vmin - 1e-12 <= got <= vmax + 1e-12, f"{tag} escaped the sample value range"


def test_nni_returns_nearest_value():
    samples = mk_samples([(0.0, 0.0), (100.0, 0.0), (0.0, 100.0)], [17.0, 19.0, 21.0])
    q = FRAME.unproject(70.0, 10.0)  # clearly nearest to the (100, 0) sample
    assert interpolate(InterpMethod("nni"), samples, q, FRAME) == pytest.approx(19.0)


def test_shepard_far_query_falls_back_to_idw():
    samples = mk_samples([(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], [17.0, 18.0, 19.0])
    q = FRAME.unproject(5000.0, 5000.0)  # far outside the search radius
    got = interpolate(InterpMethod("shepard"), samples, q, FRAME)
    idw = interpolate(InterpMethod("idw"), samples, q, FRAME)
    assert got == pytest.approx(idw), "with no neighbors in radius, shepard should match global idw"


def test_shepard_is_local():
    # a far-away sample must not influence a query surrounded by near samples
    near = mk_samples([(0.0, 10.0), (10.0, 0.0), (-10.0, 0.0), (0.0, -10.0)], [18.0, 18.0, 18.0, 18.0])
    far = mk_samples([(800.0, 800.0)], [10.0])
    q = FRAME.unproject(1.0, 1.0)
    got = interpolate(InterpMethod("shepard"), near + far, q, FRAME)
    assert got == pytest.approx(18.0, abs=1e-9), "sample outside the search radius leaked in"


@pytest.mark.parametrize("tag", ["kriging", "rbf"])
def test_constant_field_reproduction(tag):
    rng = np.random.default_rng(31)
    for trial in range(4):
        pts = rng.uniform(-300, 300, size=(7, 2))
        samples = mk_samples(pts, [19.0] * 7)
        for _ in range(10):
            q = FRAME.unproject(*rng.uniform(-400, 400, size=2))
            got = interpolate(InterpMethod(tag), samples, q, FRAME)
            assert got == pytest.approx(19.0, abs=1e-8), f"{tag} failed to reproduce a constant field"


def test_kriging_needs_three_samples():
    samples = mk_samples([(0.0, 0.0), (10.0, 0.0)], [17.0, 18.0])
    with pytest.raises(TooFewSamplesError):
        interpolate(InterpMethod("kriging"), samples, FRAME.unproject(5.0, 0.0), FRAME)


def test_empty_sample_set_rejected():
    with pytest.raises(TooFewSamplesError):
        interpolate(InterpMethod("idw"), [], GeoPoint(0, 0), FRAME)


@pytest.mark.parametrize("method", all_methods(), ids=lambda m: m.tag)
def test_translation_invariance(method):
    rng = np.random.default_rng(41)
    pts = rng.uniform(-200, 200, size=(8, 2))
    vals = rng.uniform(17.0, 21.0, size=8)
    q = np.array([35.0, -60.0])
    shift = np.array([400.0, 250.0])
    a = interpolate(method, mk_samples(pts, vals), FRAME.unproject(*q), FRAME)
    b = interpolate(method, mk_samples(pts + shift, vals), FRAME.unproject(*(q + shift)), FRAME)
    assert a == pytest.approx(b, abs=1e-9), f"{method.tag} is not translation invariant"


def test_duplicate_positions_averaged():
    samples = mk_samples([(0.0, 0.0), (0.0, 0.0), (100.0, 0.0)], [16.0, 18.0, 20.0])
    with pytest.warns(UserWarning, match="duplicate"):
        got = interpolate(InterpMethod("idw"), samples, FRAME.unproject(0.0, 0.0), FRAME)
    assert got == pytest.approx(17.0), "coincident samples should average before interpolation"


def test_rbf_fits_linear_ramp():
    # thin-plate with a linear tail reproduces an affine field almost exactly
    rng = np.random.default_rng(47)
    pts = rng.uniform(-200, 200, size=(10, 2))
    vals = 18.0 + 0.004 * pts[:, 0] - 0.002 * pts[:, 1]
    samples = mk_samples(pts, vals)
    q = FRAME.unproject(37.0, -81.0)
    expected = 18.0 + 0.004 * 37.0 - 0.002 * -81.0
    got = interpolate(InterpMethod("rbf"), samples, q, FRAME)
    assert got == pytest.approx(expected, abs=1e-6), "rbf should reproduce an affine ramp"


def test_loo_constant_samples_zero_error():
    rng = np.random.default_rng(53)
    pts = rng.uniform(-100, 100, size=(6, 2))
    samples = mk_samples(pts, [18.5] * 6)
    for method in all_methods():
        rep = leave_one_out(method, samples, FRAME)
        assert rep.mean_abs_error == pytest.approx(0.0, abs=1e-8), f"{method.tag} nonzero error on constant data"
        assert rep.n_failed == 0


def test_loo_ramp_rbf_beats_nni():
    rng = np.random.default_rng(59)
    pts = rng.uniform(-250, 250, size=(12, 2))
    vals = 19.0 + 0.003 * pts[:, 0] + 0.001 * pts[:, 1]
    samples = mk_samples(pts, vals)
    nni = leave_one_out(InterpMethod("nni"), samples, FRAME)
    rbf = leave_one_out(InterpMethod("rbf"), samples, FRAME)
    assert nni.mean_abs_error > 0, "nearest neighbor cannot be exact on a ramp"
    assert rbf.mean_abs_error < nni.mean_abs_error, "thin-plate should beat nearest neighbor on a smooth ramp"


def test_loo_exposes_designated_fold():
    # six samples around a shoreline; the report carries each fold's estimate
    offsets = [(0.0, 0.0), (120.0, 10.0), (240.0, -20.0), (360.0, 15.0), (480.0, 0.0), (600.0, -10.0)]
    values = [18.2, 18.4, 18.9, 19.3, 19.1, 18.8]
    samples = mk_samples(offsets, values)
    rep = leave_one_out(InterpMethod("idw"), samples, FRAME)
    assert rep.n_folds == 6
    assert len(rep.estimates) == 6
    est5 = rep.estimates[5]
    assert est5 is not None and np.isfinite(est5)
    assert rep.abs_errors[5] == pytest.approx(abs(est5 - values[5]))
    # the per-fold estimate feeds the against-baseline comparison
    assert error_variance_pct(est5, values[5]) == pytest.approx(abs(est5 - values[5]) / values[5] * 100.0)


def test_loo_kriging_fold_failure_is_counted():
    # 3 samples: each kriging fold sees only 2 and fails, but the report survives
    samples = mk_samples([(0.0, 0.0), (50.0, 0.0), (0.0, 50.0)], [17.0, 18.0, 19.0])
    rep = leave_one_out(InterpMethod("kriging"), samples, FRAME)
    assert rep.n_failed == 3
    assert rep.failed_folds == [0, 1, 2]
    assert all(e is None for e in rep.estimates)
    assert np.isnan(rep.mean_abs_error)


def test_loo_requires_three_samples():
    samples = mk_samples([(0.0, 0.0), (10.0, 0.0)], [17.0, 18.0])
    with pytest.raises(TooFewSamplesError):
        leave_one_out(InterpMethod("idw"), samples, FRAME)


def test_error_variance_pct():
    assert error_variance_pct(21.0, 20.0) == pytest.approx(5.0)
    assert error_variance_pct(19.0, 20.0) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        error_variance_pct(19.0, 0.0)


def test_load_samples_csv():
    text = "lat,lon,sqm\n27.438,-80.312,18.5\n27.440,-80.310,19.0\n"
    samples = load_samples_csv(text)
    assert len(samples) == 2
    assert samples[0].position.lat_deg == pytest.approx(27.438)
    assert samples[0].value == pytest.approx(18.5)
    # bytes input and padded header both accepted
    samples = load_samples_csv(b"lat, lon, sqm\n1.0,2.0,17.0\n")
    assert samples[0].value == pytest.approx(17.0)


def test_load_samples_csv_errors():
    with pytest.raises(EmptyFileError):
        load_samples_csv("")
    with pytest.raises(EmptyFileError):
        load_samples_csv("lat,lon,sqm\n")
    with pytest.raises(MalformedHeaderError):
        load_samples_csv("lon,lat,sqm\n1,2,3\n")
    with pytest.raises(ValueError):
        load_samples_csv("lat,lon,sqm\n1.0,2.0\n")
    with pytest.raises(ValueError):
        load_samples_csv("lat,lon,sqm\n1.0,2.0,abc\n")
