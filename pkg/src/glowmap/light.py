"""Lamp intensity model: rational attenuation with distance, sky-quality scale.

A lamp emits intensity ``i0`` at its own position and decays with planar
distance d as

    I(d) = i0 / (1 + c1 * (alpha * d) + c2 * (alpha * d)^2)

where ``alpha`` converts meters to the dimensionless decay argument and
``c1``/``c2`` describe the linear and quadratic falloff of the luminaire
class. Larger coefficients mean tighter, more shielded fixtures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NegativeDistanceError, NonPositiveScaleError, UnknownProfileError
from .geo import GeoPoint

#: intensity treated as full brightness on the sky-quality scale
SQM_BRIGHT = 16.0
#: sky-quality reading assigned to zero intensity
SQM_DARK = 22.0

DEFAULT_I0 = 16.0
DEFAULT_ALPHA = 0.1  # per meter


@dataclass(frozen=True)
class AttenuationParams:
    """Falloff coefficients for one lamp. All coefficients are dimensionless."""

    c1: float
    c2: float
    i0: float = DEFAULT_I0
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        for name in ("c1", "c2", "i0", "alpha"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError(f"falloff coefficients must be >= 0, got c1={self.c1}, c2={self.c2}")
        if self.i0 <= 0:
            raise ValueError(f"i0 must be positive, got {self.i0}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.c1 == 0 and self.c2 == 0:
            warnings.warn("c1 = c2 = 0: lamp does not attenuate with distance", stacklevel=3)


@dataclass(frozen=True)
class LightProfile:
    """A named luminaire class with stock falloff coefficients."""

    profile_id: int
    name: str
    params: AttenuationParams


#: Stock luminaire classes, ordered from widest throw to most local.
PROFILES: dict[int, LightProfile] = {
    1: LightProfile(1, "High-speed roadway", AttenuationParams(c1=0.01, c2=0.03)),
    2: LightProfile(2, "State roadway", AttenuationParams(c1=0.03, c2=0.03)),
    3: LightProfile(3, "County roadway", AttenuationParams(c1=0.06, c2=0.03)),
    4: LightProfile(4, "Municipal street", AttenuationParams(c1=0.10, c2=0.03)),
    5: LightProfile(5, "Parkway / rural", AttenuationParams(c1=0.90, c2=0.60)),
}


def profile(profile_id: int) -> LightProfile:
    """Look up a stock luminaire class by id."""
    try:
        return PROFILES[profile_id]
    except KeyError:
        raise UnknownProfileError(f"unknown lamp profile id {profile_id!r}") from None


@dataclass(frozen=True)
class LightSource:
    """One lamp: identity, position, and its falloff parameters.

    ``profile_id`` is advisory; when set, ``params`` must equal that
    profile's stock parameters. Sources with tuned parameters carry
    ``profile_id=None``.
    """

    source_id: str
    position: GeoPoint
    params: AttenuationParams
    profile_id: "int | None" = field(default=None)

    def __post_init__(self) -> None:
        if not self.source_id:
            raise ValueError("source_id must be non-empty")
        if self.profile_id is not None and profile(self.profile_id).params != self.params:
            raise ValueError(
                f"source {self.source_id}: params do not match profile {self.profile_id}; "
                "clear profile_id when tuning parameters"
            )

    def with_params(self, params: AttenuationParams) -> "LightSource":
        """Copy with new falloff parameters; drops the profile tag."""
        return replace(self, params=params, profile_id=None)

    def with_position(self, position: GeoPoint) -> "LightSource":
        return replace(self, position=position)


def attenuate(params: AttenuationParams, d_m: "float | np.ndarray") -> "float | np.ndarray":
    """Intensity of a lamp at planar distance ``d_m`` meters.

    Accepts a scalar or an ndarray of distances. Negative distances raise.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d < 0):
        raise NegativeDistanceError("distance must be >= 0")
    y = params.alpha * d
    out = params.i0 / (1.0 + params.c1 * y + params.c2 * y * y)
    if np.isscalar(d_m) or np.ndim(d_m) == 0:
        return float(out)
    return out


def intensity_to_sqm(v: "float | np.ndarray", i0_max: float) -> "float | np.ndarray":
    """Map composed intensity to the 16..22 sky-quality scale.

    ``i0_max`` is the brightest source intensity in the scenario; intensities
    at or above it read 16 (bright), zero reads 22 (dark).
    """
    if i0_max <= 0:
        raise NonPositiveScaleError(f"i0_max must be positive, got {i0_max}")
    n = np.clip(np.asarray(v, dtype=float) / i0_max, 0.0, 1.0)
    out = SQM_DARK - (SQM_DARK - SQM_BRIGHT) * n
    if np.isscalar(v) or np.ndim(v) == 0:
        return float(out)
    return out


def normalized_brightness(sqm: "float | np.ndarray") -> "float | np.ndarray":
    """Map a sky-quality reading to [0, 1]: 0 at 22 (dark), 1 at 16 (bright)."""
    out = np.clip((SQM_DARK - np.asarray(sqm, dtype=float)) / (SQM_DARK - SQM_BRIGHT), 0.0, 1.0)
    if np.isscalar(sqm) or np.ndim(sqm) == 0:
        return float(out)
    return out
