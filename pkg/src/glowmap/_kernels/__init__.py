"""Kernel backend selection.

Imports the compiled extension when it exists and falls back to the NumPy
implementation otherwise. Set GLOWMAP_PURE_PYTHON=1 to force the fallback
(useful for benchmarking and debugging).

Exports: field_values, footprint_attenuation, footprint_inverse_square,
COINCIDENT_EPS_M, BACKEND.
"""

from __future__ import annotations

import os

from .pyfield import COINCIDENT_EPS_M

if os.environ.get("GLOWMAP_PURE_PYTHON", "") not in ("", "0"):
    from .pyfield import field_values, footprint_attenuation, footprint_inverse_square

    BACKEND = "numpy"
else:
    try:
        from .cyfield import (  # type: ignore[import-not-found]
            field_values,
            footprint_attenuation,
            footprint_inverse_square,
        )

        BACKEND = "compiled"
    except ImportError:
        from .pyfield import field_values, footprint_attenuation, footprint_inverse_square

        BACKEND = "numpy"

__all__ = [
    "field_values",
    "footprint_attenuation",
    "footprint_inverse_square",
    "COINCIDENT_EPS_M",
    "BACKEND",
]
