"""Constrained lamp optimization: placement, type tuning, or both.

The decision vector stacks per-lamp degrees of freedom chosen by the mode:
position offsets within a slack disk around each lamp's anchor (placement),
falloff coefficients (tune_c1 / tune_c2), or all of them (joint). The
objective is the mean composite field intensity over a target: a polygon
(sampled at scenario grid cell centers), an explicit point list, or the name
of one of the scenario's protected areas.

Two inequality constraints shape the feasible set, both residual-style
(feasible means <= 0):

    g = d^2(p, anchor) - R^2        lamp stays within R meters of its anchor
    h = omega*(1 + c1*y + c2*y^2) - 1,  y = alpha*R
                                    at least omega of peak brightness
                                    survives at distance R (street safety)

The solver is sequential quadratic programming with central-difference
gradients, a recorded per-iteration trace, and a penalty-descent fallback
for degenerate subproblems.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import _kernels
from .errors import EmptyTargetError, InfeasibleError, LinAlgFailureError, NoSourcesError
from .field import Scenario, field_at_many
from .geo import GeoPoint, GeoPolygon, LocalFrame, cells_in
from .light import AttenuationParams

MODES = ("placement", "tune_c1", "tune_c2", "joint")

MAX_TARGET_POINTS = 2000
#: evaluation points closer than this to a lamp are dropped (keeps the
#: objective smooth for finite differencing)
SOURCE_EXCLUSION_M = 1e-3
C_BOUND = 10.0
FD_REL_STEP = 1e-6
MERIT_PENALTY = 1e3


@dataclass(frozen=True)
class OptimizationSpec:
    """What to optimize and under which limits.

    target is a GeoPolygon, a tuple of GeoPoints, or the name of a protected
    area on the scenario being solved.
    """

    mode: str
    target: "GeoPolygon | tuple[GeoPoint, ...] | str"
    slack_r_m: float = 50.0
    omega: float = 0.2
    max_iters: int = 200
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must be in (0, 1), got {self.omega}")
        if self.slack_r_m <= 0:
            raise ValueError("slack_r_m must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if isinstance(self.target, str):
            if not self.target:
                raise ValueError("target area name must be non-empty")
        elif isinstance(self.target, GeoPolygon):
            pass
        else:
            pts = tuple(self.target)
            if not pts:
                raise ValueError("target point list must be non-empty")
            if any(not isinstance(p, GeoPoint) for p in pts):
                raise ValueError("target points must be GeoPoint instances")
            object.__setattr__(self, "target", pts)

    def to_dict(self) -> dict:
        if isinstance(self.target, str):
            target: dict = {"area": self.target}
        elif isinstance(self.target, GeoPolygon):
            target = {"polygon": [[v.lat_deg, v.lon_deg] for v in self.target.ring[:-1]]}
        else:
            target = {"points": [[p.lat_deg, p.lon_deg] for p in self.target]}
        return {
            "mode": self.mode,
            "target": target,
            "slack_r_m": self.slack_r_m,
            "omega": self.omega,
            "max_iters": self.max_iters,
            "tolerance": self.tolerance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OptimizationSpec":
        raw = doc.get("target")
        if not isinstance(raw, dict) or len(raw) != 1:
            raise ValueError("target must be exactly one of {area, polygon, points}")
        kind, payload = next(iter(raw.items()))
        if kind == "area":
            target: "GeoPolygon | tuple[GeoPoint, ...] | str" = str(payload)
        elif kind == "polygon":
            target = GeoPolygon([GeoPoint(float(a), float(b)) for a, b in payload])
        elif kind == "points":
            target = tuple(GeoPoint(float(a), float(b)) for a, b in payload)
        else:
            raise ValueError(f"unknown target kind {kind!r}")
        return cls(
            mode=doc["mode"],
            target=target,
            slack_r_m=float(doc.get("slack_r_m", 50.0)),
            omega=float(doc.get("omega", 0.2)),
            max_iters=int(doc.get("max_iters", 200)),
            tolerance=float(doc.get("tolerance", 1e-6)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: "str | bytes") -> "OptimizationSpec":
        return cls.from_dict(json.loads(text))


def g_constraint(p: GeoPoint, p0: GeoPoint, r_m: float, frame: LocalFrame) -> float:
    """Slack-disk residual: squared distance to the anchor minus R^2."""
    x, y = frame.project(p)
    x0, y0 = frame.project(p0)
    return (x - x0) ** 2 + (y - y0) ** 2 - r_m * r_m


def h_constraint(c1: float, c2: float, omega: float, y: float) -> float:
    """Street-illumination residual; <= 0 keeps >= omega of peak brightness at R."""
    return omega * (1.0 + c1 * y + c2 * y * y) - 1.0


def resolve_target_points(scenario: Scenario, target) -> tuple[np.ndarray, np.ndarray]:
    """Target -> evaluation point (lats, lons), decimated and lamp-excluded.

    Polygon targets sample the scenario grid's covered cell centers, thinned
    to at most MAX_TARGET_POINTS by taking every k-th point (deterministic).
    Points within SOURCE_EXCLUSION_M of a lamp are dropped.
    """
    if isinstance(target, str):
        if target not in scenario.protected_areas:
            raise ValueError(f"scenario has no protected area named {target!r}")
        target = scenario.protected_areas[target]
    if isinstance(target, GeoPolygon):
        idx = cells_in(target, scenario.grid)
        if idx.size == 0:
            raise EmptyTargetError("target polygon covers no grid cells")
        lats, lons = scenario.grid.center_arrays()
        lats, lons = lats[idx], lons[idx]
    else:
        pts = tuple(target)
        if not pts:
            raise EmptyTargetError("no target points given")
        lats = np.array([p.lat_deg for p in pts])
        lons = np.array([p.lon_deg for p in pts])
    if lats.size > MAX_TARGET_POINTS:
        k = math.ceil(lats.size / MAX_TARGET_POINTS)
        lats, lons = lats[::k], lons[::k]
    if scenario.sources:
        qx, qy = scenario.frame.project_arrays(lats, lons)
        sx, sy = scenario.source_arrays[:2]
        d2 = (qx[:, None] - sx[None, :]) ** 2 + (qy[:, None] - sy[None, :]) ** 2
        keep = d2.min(axis=1) > SOURCE_EXCLUSION_M**2
        lats, lons = lats[keep], lons[keep]
    if lats.size == 0:
        raise EmptyTargetError("no evaluation points remain after exclusion")
    return lats, lons


def objective(scenario: Scenario, target) -> float:
    """Mean composite intensity over the resolved target points."""
    if not scenario.sources:
        raise NoSourcesError("objective needs at least one source")
    lats, lons = resolve_target_points(scenario, target)
    return float(field_at_many(scenario, lats, lons).mean())


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    objective: float
    max_residual: float
    merit: float  # best penalized value seen so far; non-increasing


@dataclass
class SolverOutcome:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    status: str
    trace: list[TraceEntry] = field(default_factory=list)
    feasible: bool = False


def central_difference(fun, rel_step: float = FD_REL_STEP):
    """Gradient by central differences, step scaled per variable."""

    def grad(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i in range(x.size):
            h = rel_step * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            out[i] = (fun(xp) - fun(xm)) / (2.0 * h)
        return out

    return grad


def _max_residual(constraints, x: np.ndarray) -> float:
    if not constraints:
        return 0.0
    return max(float(g(x)) for g in constraints)


def _penalty_descent(fun, x0, constraints, bounds, max_iters, tolerance):
    """Projected-gradient fallback on an escalating quadratic penalty.

    Returns (x, iterations, stationary) where stationary is True when the
    final penalized-gradient norm met the tolerance.
    """
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds]) if bounds else None
    hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds]) if bounds else None

    def project(x):
        return np.clip(x, lo, hi) if bounds else x

    x = project(np.asarray(x0, dtype=float))
    iters = 0
    stationary = False
    for mu in (10.0, 100.0, 1e3, 1e4):

        def penalized(z, mu=mu):
            viol = [max(0.0, float(g(z))) for g in constraints]
            return fun(z) + mu * sum(v * v for v in viol)

        grad = central_difference(penalized)
        for _ in range(max(1, max_iters // 4)):
            iters += 1
            gvec = grad(x)
            gnorm = float(np.linalg.norm(gvec))
            stationary = gnorm <= tolerance
            if stationary:
                break
            step = 1.0 / max(1.0, gnorm)
            fx = penalized(x)
            for _ in range(30):  # backtracking line search
                cand = project(x - step * gvec)
                if penalized(cand) < fx - 1e-4 * step * gnorm * gnorm:
                    x = cand
                    break
                step *= 0.5
            else:
                break
    return x, iters, stationary


def solver_core(
    fun,
    x0: np.ndarray,
    constraints=(),
    bounds=None,
    max_iters: int = 200,
    tolerance: float = 1e-6,
) -> SolverOutcome:
    """Minimize fun subject to residual-style constraints (feasible <= 0).

    Runs sequential quadratic programming with central-difference gradients.
    Every objective evaluation is screened: the best feasible point seen
    anywhere (line searches included) is what comes back, so a late
    divergence never discards a good iterate. Degenerate subproblems fall
    back to projected penalty descent.
    """
    x0 = np.asarray(x0, dtype=float)
    constraints = list(constraints)
    state = {"best_x": None, "best_f": np.inf, "merit": np.inf}

    def tracked(x):
        f = float(fun(np.asarray(x, dtype=float)))
        r = _max_residual(constraints, x)
        merit = f + MERIT_PENALTY * max(0.0, r)
        if merit < state["merit"]:
            state["merit"] = merit
        if r <= tolerance and f < state["best_f"]:
            state["best_f"] = f
            state["best_x"] = np.array(x, dtype=float)
        return f

    trace: list[TraceEntry] = []

    def record(i, x):
        trace.append(
            TraceEntry(
                iteration=i,
                objective=float(fun(x)),
                max_residual=_max_residual(constraints, x),
                merit=state["merit"],
            )
        )

    tracked(x0)
    record(0, x0)
    scipy_constraints = [
        {"type": "ineq", "fun": (lambda x, g=g: -float(g(x))), "jac": (lambda x, g=g: -central_difference(g)(x))}
        for g in constraints
    ]
    counter = {"it": 0}

    def callback(xk):
        counter["it"] += 1
        record(counter["it"], xk)

    try:
        res = scipy.optimize.minimize(
            tracked,
            x0,
            jac=central_difference(tracked),
            method="SLSQP",
            bounds=bounds,
            constraints=scipy_constraints,
            callback=callback,
            options={"maxiter": max_iters, "ftol": tolerance},
        )
        status, nit, x_final = int(res.status), int(res.nit), np.asarray(res.x, dtype=float)
        degenerate = status in (5, 6)  # singular LSQ subproblems
    except (np.linalg.LinAlgError, LinAlgFailureError):
        status, nit, x_final = -1, counter["it"], x0
        degenerate = True
    if degenerate:
        start = state["best_x"] if state["best_x"] is not None else x0
        x_final, extra, stationary = _penalty_descent(tracked, start, constraints, bounds, max_iters, tolerance)
        nit += extra
        record(nit, x_final)
        if stationary and _max_residual(constraints, x_final) <= tolerance:
            status = 0

    # The tracker is a safety net: prefer the solver's own final point and
    # fall back to the best feasible evaluation only when the final point is
    # infeasible or materially worse (finite-difference probe points sit up
    # to one step outside the boundary, so sub-tolerance "gains" are noise).
    final_r = _max_residual(constraints, x_final)
    final_f = tracked(x_final)
    if state["best_x"] is not None and (final_r > tolerance or state["best_f"] < final_f - tolerance):
        x_best, f_best, feasible = state["best_x"], state["best_f"], True
    else:
        x_best, f_best, feasible = x_final, final_f, final_r <= tolerance
    # a stalled line search at an unchanged objective is convergence in practice
    stalled_done = (
        status == 8
        and len(trace) >= 2
        and abs(trace[-1].objective - trace[-2].objective) <= tolerance * max(1.0, abs(trace[-1].objective))
    )
    converged = feasible and (status == 0 or stalled_done)
    status_name = {0: "converged", 9: "max_iters", 4: "incompatible", 5: "singular", 6: "singular", 8: "stalled"}.get(
        status, f"status_{status}"
    )
    return SolverOutcome(
        x=x_best,
        objective=f_best,
        iterations=nit,
        converged=converged,
        status=status_name,
        trace=trace,
        feasible=feasible,
    )


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of one solve: new sources plus solver diagnostics."""

    mode: str
    sources_before: tuple
    sources_after: tuple
    objective_before: float
    objective_after: float
    residuals: "dict[str, dict[str, float]]"
    iterations: int
    converged: bool
    trace: tuple[TraceEntry, ...]

    def scenario_after(self, scenario: Scenario) -> Scenario:
        return scenario.with_sources(self.sources_after)

    def to_dict(self) -> dict:
        rows = []
        for before, after in zip(self.sources_before, self.sources_after):
            rows.append(
                {
                    "source_id": before.source_id,
                    "before": {
                        "lat": before.position.lat_deg,
                        "lon": before.position.lon_deg,
                        "c1": before.params.c1,
                        "c2": before.params.c2,
                    },
                    "after": {
                        "lat": after.position.lat_deg,
                        "lon": after.position.lon_deg,
                        "c1": after.params.c1,
                        "c2": after.params.c2,
                    },
                }
            )
        return {
            "mode": self.mode,
            "converged": self.converged,
            "iterations": self.iterations,
            "objective_before": self.objective_before,
            "objective_after": self.objective_after,
            "residuals": self.residuals,
            "sources": rows,
            "trace": [
                {
                    "iteration": t.iteration,
                    "objective": t.objective,
                    "max_residual": t.max_residual,
                    "merit": t.merit,
                }
                for t in self.trace
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Problem:
    """Packs per-mode decision variables and evaluates the shared objective."""

    def __init__(self, scenario: Scenario, spec: OptimizationSpec):
        self.scenario = scenario
        self.spec = spec
        lats, lons = resolve_target_points(scenario, spec.target)
        self.qx, self.qy = (
            np.ascontiguousarray(a, dtype=np.float64) for a in scenario.frame.project_arrays(lats, lons)
        )
        sx, sy, i0, c1, c2, alpha = scenario.source_arrays
        self.anchor_x, self.anchor_y = sx.copy(), sy.copy()
        self.i0, self.alpha = i0, alpha
        self.c1_0, self.c2_0 = c1.copy(), c2.copy()
        self.n = sx.size
        self.mode = spec.mode
        self.r = spec.slack_r_m

    def x0(self) -> np.ndarray:
        if self.mode == "placement":
            return np.zeros(2 * self.n)
        if self.mode == "tune_c1":
            return self.c1_0.copy()
        if self.mode == "tune_c2":
            return self.c2_0.copy()
        return np.concatenate([np.zeros(2 * self.n), self.c1_0, self.c2_0])

    def bounds(self):
        r = self.r
        if self.mode == "placement":
            return [(-r, r)] * (2 * self.n)
        if self.mode in ("tune_c1", "tune_c2"):
            return [(0.0, C_BOUND)] * self.n
        return [(-r, r)] * (2 * self.n) + [(0.0, C_BOUND)] * (2 * self.n)

    def unpack(self, x: np.ndarray):
        """x -> (source_x, source_y, c1, c2) arrays."""
        if self.mode == "placement":
            off = x.reshape(self.n, 2)
            return self.anchor_x + off[:, 0], self.anchor_y + off[:, 1], self.c1_0, self.c2_0
        if self.mode == "tune_c1":
            return self.anchor_x, self.anchor_y, x, self.c2_0
        if self.mode == "tune_c2":
            return self.anchor_x, self.anchor_y, self.c1_0, x
        off = x[: 2 * self.n].reshape(self.n, 2)
        c1 = x[2 * self.n : 3 * self.n]
        c2 = x[3 * self.n :]
        return self.anchor_x + off[:, 0], self.anchor_y + off[:, 1], c1, c2

    def objective(self, x: np.ndarray) -> float:
        sx, sy, c1, c2 = self.unpack(x)
        vals = _kernels.field_values(
            self.qx,
            self.qy,
            np.ascontiguousarray(sx),
            np.ascontiguousarray(sy),
            self.i0,
            np.ascontiguousarray(c1, dtype=np.float64),
            np.ascontiguousarray(c2, dtype=np.float64),
            self.alpha,
        )
        return float(vals.mean())

    def constraints(self):
        cons = []
        r2 = self.r * self.r
        if self.mode in ("placement", "joint"):
            for i in range(self.n):

                def g(x, i=i):
                    off = x[2 * i : 2 * i + 2]
                    return float(off[0] ** 2 + off[1] ** 2 - r2)

                cons.append(g)
        if self.mode in ("tune_c1", "tune_c2", "joint"):
            omega = self.spec.omega
            for i in range(self.n):
                y = float(self.alpha[i]) * self.r

                def h(x, i=i, y=y):
                    _, _, c1, c2 = self.unpack(x)
                    return h_constraint(float(c1[i]), float(c2[i]), omega, y)

                cons.append(h)
        return cons

    def residuals_by_source(self, x: np.ndarray) -> "dict[str, dict[str, float]]":
        out: "dict[str, dict[str, float]]" = {}
        sx, sy, c1, c2 = self.unpack(x)
        for i, s in enumerate(self.scenario.sources):
            entry: dict[str, float] = {}
            if self.mode in ("placement", "joint"):
                dx = float(sx[i] - self.anchor_x[i])
                dy = float(sy[i] - self.anchor_y[i])
                entry["g"] = dx * dx + dy * dy - self.r * self.r
            if self.mode in ("tune_c1", "tune_c2", "joint"):
                y = float(self.alpha[i]) * self.r
                entry["h"] = h_constraint(float(c1[i]), float(c2[i]), self.spec.omega, y)
            out[s.source_id] = entry
        return out

    def rebuild_sources(self, x: np.ndarray) -> tuple:
        sx, sy, c1, c2 = self.unpack(x)
        out = []
        for i, s in enumerate(self.scenario.sources):
            new = s
            if self.mode in ("placement", "joint"):
                new = new.with_position(self.scenario.frame.unproject(float(sx[i]), float(sy[i])))
            if self.mode in ("tune_c1", "joint") or self.mode == "tune_c2":
                changed_c1 = self.mode in ("tune_c1", "joint")
                changed_c2 = self.mode in ("tune_c2", "joint")
                nc1 = float(c1[i]) if changed_c1 else s.params.c1
                nc2 = float(c2[i]) if changed_c2 else s.params.c2
                if nc1 != s.params.c1 or nc2 != s.params.c2:
                    new = new.with_params(
                        AttenuationParams(c1=nc1, c2=nc2, i0=s.params.i0, alpha=s.params.alpha)
                    )
            out.append(new)
        return tuple(out)


def _restore_feasibility(problem: _Problem, x0, constraints, bounds, spec) -> np.ndarray:
    """Pull an infeasible start onto the feasible set by least-infeasibility."""

    def infeasibility(x):
        return sum(max(0.0, float(g(x))) ** 2 for g in constraints)

    res = scipy.optimize.minimize(
        infeasibility,
        x0,
        jac=central_difference(infeasibility),
        method="SLSQP",
        bounds=bounds,
        options={"maxiter": spec.max_iters, "ftol": 1e-12},
    )
    x = np.asarray(res.x, dtype=float)
    if _max_residual(constraints, x) > spec.tolerance:
        raise InfeasibleError("initial point is infeasible and restoration failed")
    return x


def solve(scenario: Scenario, spec: OptimizationSpec) -> OptimizationResult:
    """Run one optimization and return the re-built sources plus diagnostics.

    The returned sources always satisfy the mode's constraints to the
    requested tolerance. If the scenario's own parameters start infeasible,
    they are first restored to the feasible boundary; objective_before then
    refers to that restored starting point.
    """
    if not scenario.sources:
        raise NoSourcesError("cannot optimize a scenario with no sources")
    problem = _Problem(scenario, spec)
    constraints = problem.constraints()
    bounds = problem.bounds()
    x0 = problem.x0()
    if _max_residual(constraints, x0) > spec.tolerance:
        x0 = _restore_feasibility(problem, x0, constraints, bounds, spec)
    outcome = solver_core(
        problem.objective,
        x0,
        constraints=constraints,
        bounds=bounds,
        max_iters=spec.max_iters,
        tolerance=spec.tolerance,
    )
    if not outcome.feasible:
        raise InfeasibleError("no feasible iterate found")
    return OptimizationResult(
        mode=spec.mode,
        sources_before=scenario.sources,
        sources_after=problem.rebuild_sources(outcome.x),
        objective_before=problem.objective(x0),
        objective_after=outcome.objective,
        residuals=problem.residuals_by_source(outcome.x),
        iterations=outcome.iterations,
        converged=outcome.converged,
        trace=tuple(outcome.trace),
    )
