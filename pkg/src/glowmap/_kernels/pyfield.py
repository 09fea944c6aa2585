"""NumPy reference kernels for field composition and footprint sums.

These are the fallback implementations used when the compiled extension is
unavailable; the compiled module implements the same functions with the same
signatures and must agree to floating-point roundoff.

All positions are planar meters in a shared local frame. Per-source
parameter arrays are aligned: sx[i], sy[i], i0[i], c1[i], c2[i], alpha[i]
describe source i.
"""

from __future__ import annotations

import numpy as np

#: queries within this distance of a source count as coincident with it
COINCIDENT_EPS_M = 1e-6

#: queries are processed in chunks this long to bound the distance matrix
_CHUNK = 65_536


def field_values(
    qx: np.ndarray,
    qy: np.ndarray,
    sx: np.ndarray,
    sy: np.ndarray,
    i0: np.ndarray,
    c1: np.ndarray,
    c2: np.ndarray,
    alpha: np.ndarray,
) -> np.ndarray:
    """Composite intensity at each query point.

    The field is the inverse-square-distance weighted mean of the per-source
    attenuated intensities:

        f(p) = sum_i w_i * I_i(d_i) / sum_i w_i,   w_i = 1 / d_i^2

    A query within COINCIDENT_EPS_M of any source instead returns the mean
    i0 of all sources it coincides with. Zero sources yields zeros.
    """
    qx = np.ascontiguousarray(qx, dtype=np.float64)
    qy = np.ascontiguousarray(qy, dtype=np.float64)
    out = np.zeros(qx.shape[0], dtype=np.float64)
    n_src = sx.shape[0]
    if n_src == 0:
        return out
    for start in range(0, qx.shape[0], _CHUNK):
        stop = min(start + _CHUNK, qx.shape[0])
        dx = qx[start:stop, None] - sx[None, :]
        dy = qy[start:stop, None] - sy[None, :]
        d2 = dx * dx + dy * dy
        d = np.sqrt(d2)
        y = alpha[None, :] * d
        inten = i0[None, :] / (1.0 + c1[None, :] * y + c2[None, :] * y * y)
        near = d < COINCIDENT_EPS_M
        hit = near.any(axis=1)
        with np.errstate(divide="ignore"):
            w = 1.0 / d2
        w[near] = 0.0
        num = (w * inten).sum(axis=1)
        den = w.sum(axis=1)
        vals = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
        if hit.any():
            counts = near.sum(axis=1)
            sums = (near * i0[None, :]).sum(axis=1)
            vals = np.where(hit, sums / np.maximum(counts, 1), vals)
        out[start:stop] = vals
    return out


def footprint_attenuation(
    qx: np.ndarray,
    qy: np.ndarray,
    sx: np.ndarray,
    sy: np.ndarray,
    i0: np.ndarray,
    c1: np.ndarray,
    c2: np.ndarray,
    alpha: np.ndarray,
    i0_max: float,
) -> np.ndarray:
    """Per-source sums of normalized attenuated intensity over the query set.

    Returns an array of length n_sources where entry i is
    sum_q I_i(d(q, i)) / i0_max. Unlike rendering, contributions add; this
    is an exposure total, not a brightness estimate.
    """
    n_src = sx.shape[0]
    sums = np.zeros(n_src, dtype=np.float64)
    if n_src == 0 or qx.shape[0] == 0:
        return sums
    qx = np.ascontiguousarray(qx, dtype=np.float64)
    qy = np.ascontiguousarray(qy, dtype=np.float64)
    for start in range(0, qx.shape[0], _CHUNK):
        stop = min(start + _CHUNK, qx.shape[0])
        dx = qx[start:stop, None] - sx[None, :]
        dy = qy[start:stop, None] - sy[None, :]
        y = alpha[None, :] * np.sqrt(dx * dx + dy * dy)
        inten = i0[None, :] / (1.0 + c1[None, :] * y + c2[None, :] * y * y)
        sums += inten.sum(axis=0)
    return sums / i0_max


def footprint_inverse_square(
    qx: np.ndarray,
    qy: np.ndarray,
    sx: np.ndarray,
    sy: np.ndarray,
    mount_height_m: float,
) -> np.ndarray:
    """Per-source sums of ground illuminance under an inverse-square model.

    Each lamp sits mount_height_m above its ground position; the ground
    illuminance at horizontal offset d, normalized by the value directly
    beneath the lamp, is h^3 / (d^2 + h^2)^(3/2).
    """
    n_src = sx.shape[0]
    sums = np.zeros(n_src, dtype=np.float64)
    if n_src == 0 or qx.shape[0] == 0:
        return sums
    qx = np.ascontiguousarray(qx, dtype=np.float64)
    qy = np.ascontiguousarray(qy, dtype=np.float64)
    h = float(mount_height_m)
    h3 = h * h * h
    for start in range(0, qx.shape[0], _CHUNK):
        stop = min(start + _CHUNK, qx.shape[0])
        dx = qx[start:stop, None] - sx[None, :]
        dy = qy[start:stop, None] - sy[None, :]
        rho2 = dx * dx + dy * dy + h * h
        sums += (h3 / (rho2 * np.sqrt(rho2))).sum(axis=0)
    return sums
