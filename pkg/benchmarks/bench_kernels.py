"""Benchmark the compiled kernels against the NumPy fallback.

The backend is chosen at import time, so each backend runs in its own
subprocess (the fallback is forced with GLOWMAP_PURE_PYTHON=1). The parent
verifies both backends produce the same numbers before printing timings.

Usage: python benchmarks/bench_kernels.py [--repeats N] [--queries N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

SOURCE_COUNTS = (8, 64, 512)


def build_inputs(n_queries: int, n_sources: int):
    import numpy as np

    rng = np.random.default_rng(2024)
    qx = rng.uniform(-2000.0, 2000.0, size=n_queries)
    qy = rng.uniform(-2000.0, 2000.0, size=n_queries)
    sx = rng.uniform(-1500.0, 1500.0, size=n_sources)
    sy = rng.uniform(-1500.0, 1500.0, size=n_sources)
    i0 = np.full(n_sources, 16.0)
    c1 = rng.uniform(0.01, 0.9, size=n_sources)
    c2 = rng.uniform(0.03, 0.6, size=n_sources)
    alpha = np.full(n_sources, 0.1)
    return qx, qy, sx, sy, i0, c1, c2, alpha


def time_call(fn, repeats: int) -> float:
    """Best-of-N wall time in seconds."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_worker(n_queries: int, repeats: int) -> None:
    import numpy as np

    from glowmap._kernels import (
        BACKEND,
        field_values,
        footprint_attenuation,
        footprint_inverse_square,
    )

    rows = []
    for n_sources in SOURCE_COUNTS:
        qx, qy, sx, sy, i0, c1, c2, alpha = build_inputs(n_queries, n_sources)
        cases = {
            "field_values": lambda: field_values(qx, qy, sx, sy, i0, c1, c2, alpha),
            "footprint_attenuation": lambda: footprint_attenuation(
                qx, qy, sx, sy, i0, c1, c2, alpha, 16.0
            ),
            "footprint_inverse_square": lambda: footprint_inverse_square(
                qx, qy, sx, sy, 10.0
            ),
        }
        for name, fn in cases.items():
            fn()  # warm up
            rows.append(
                {
                    "kernel": name,
                    "n_queries": n_queries,
                    "n_sources": n_sources,
                    "seconds": time_call(fn, repeats),
                    "checksum": float(np.sum(fn())),
                }
            )
    json.dump({"backend": BACKEND, "rows": rows}, sys.stdout)


def spawn(pure: bool, n_queries: int, repeats: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["GLOWMAP_PURE_PYTHON"] = "1"
    else:
        env.pop("GLOWMAP_PURE_PYTHON", None)
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--queries", str(n_queries), "--repeats", str(repeats)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--queries", type=int, default=65536)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        run_worker(args.queries, args.repeats)
        return 0

    fast = spawn(False, args.queries, args.repeats)
    slow = spawn(True, args.queries, args.repeats)
    if fast["backend"] == slow["backend"]:
        print(
            f"note: both subprocesses report the {fast['backend']!r} backend; "
            "build the extension (pip install -e .) to compare against it"
        )

    header = f"{'kernel':<26} {'queries':>8} {'sources':>8} {fast['backend']:>12} {slow['backend']:>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for a, b in zip(fast["rows"], slow["rows"]):
        rel = abs(a["checksum"] - b["checksum"]) / max(1.0, abs(b["checksum"]))
        if rel > 1e-9:
            print(f"checksum mismatch on {a['kernel']}: {a['checksum']} vs {b['checksum']}")
            return 1
        speed = b["seconds"] / a["seconds"] if a["seconds"] > 0 else float("inf")
        print(
            f"{a['kernel']:<26} {a['n_queries']:>8} {a['n_sources']:>8} "
            f"{a['seconds'] * 1e3:>9.2f} ms {b['seconds'] * 1e3:>9.2f} ms {speed:>7.2f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
