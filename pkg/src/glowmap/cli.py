"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 I/O problem (missing input,
refusing to overwrite without --force), 3 optimization finished without
converging (the result is still written), 4 invalid input data. Reports go
to stdout; progress and errors go to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import CorruptDocumentError, GlowmapError
from .field import grid_png
from .footprint import KERNEL_KINDS, IlluminanceKernel, footprint_report
from .geo import GeoPoint, make_local_frame
from .interp import METHOD_TAGS, InterpMethod, interpolate, leave_one_out, load_samples_csv
from .optimize import MODES, OptimizationSpec, solve
from .scenario_io import _checksum, scenario_from_dict, scenario_to_dict


class CliIOError(Exception):
    """File-level problem: missing input or a refused overwrite."""


class NonConvergence(Exception):
    """Optimization hit its iteration budget; output was still written."""


def _read_json_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliIOError(f"cannot read {path}: {exc}") from exc
    return json.loads(text)


def _read_scenario(path: str):
    """Load a scenario from a bare document or a store envelope."""
    doc = _read_json_file(path)
    if isinstance(doc, dict) and "scenario" in doc and "revision" in doc:
        body = doc["scenario"]
        if "checksum" in doc and _checksum(body) != doc["checksum"]:
            raise CorruptDocumentError(f"{path}: checksum mismatch")
        return scenario_from_dict(body)
    return scenario_from_dict(doc)


def _write_bytes(data: bytes, output: "str | None", force: bool) -> None:
    if output is None:
        sys.stdout.buffer.write(data)
        return
    path = Path(output)
    if path.exists() and not force:
        raise CliIOError(f"{output} exists; pass --force to overwrite")
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise CliIOError(f"cannot write {output}: {exc}") from exc


def _write_text(text: str, output: "str | None", force: bool) -> None:
    if output is None:
        click.echo(text)
        return
    if not text.endswith("\n"):
        text += "\n"
    _write_bytes(text.encode(), output, force)


@click.group()
@click.version_option(version=__version__, prog_name="glowmap")
def cli():
    """Light pollution modeling: render, optimize, account, interpolate."""


@cli.command()
@click.argument("scenario_file")
@click.option("--output", "-o", required=True, help="PNG file to write.")
@click.option("--force", is_flag=True, help="Overwrite an existing output file.")
@click.option("--north-up/--no-north-up", default=True, show_default=True)
def render(scenario_file, output, force, north_up):
    """Render a scenario's brightness field to a PNG."""
    scenario = _read_scenario(scenario_file)
    click.echo(
        f"rendering {scenario.grid.rows}x{scenario.grid.cols} grid "
        f"for {scenario.scenario_id!r}",
        err=True,
    )
    _write_bytes(grid_png(scenario, north_up=north_up), output, force)
    click.echo(f"wrote {output}", err=True)


@cli.command()
@click.argument("scenario_file")
@click.option("--mode", type=click.Choice(MODES), required=True)
@click.option("--target-area", help="Name of a protected area in the scenario.")
@click.option("--target-points", help="JSON array of [lat, lon] pairs.")
@click.option("--slack-r", type=float, default=50.0, show_default=True, help="Anchor slack radius, meters.")
@click.option("--omega", type=float, default=0.2, show_default=True, help="Street illumination floor fraction.")
@click.option("--max-iters", type=int, default=200, show_default=True)
@click.option("--tolerance", type=float, default=1e-6, show_default=True)
@click.option("--output", "-o", help="Result JSON file (default stdout).")
@click.option("--apply", "apply_path", help="Also write the updated scenario document here.")
@click.option("--force", is_flag=True, help="Overwrite existing output files.")
def optimize(
    scenario_file, mode, target_area, target_points, slack_r, omega, max_iters, tolerance,
    output, apply_path, force,
):
    """Optimize lamp placement and/or falloff under constraints."""
    if (target_area is None) == (target_points is None):
        raise click.UsageError("give exactly one of --target-area or --target-points")
    scenario = _read_scenario(scenario_file)
    if target_area is not None:
        target = target_area
    else:
        pairs = json.loads(target_points)
        target = tuple(GeoPoint(float(a), float(b)) for a, b in pairs)
    spec = OptimizationSpec(
        mode=mode,
        target=target,
        slack_r_m=slack_r,
        omega=omega,
        max_iters=max_iters,
        tolerance=tolerance,
    )
    click.echo(f"optimizing {scenario.scenario_id!r}: mode={mode}", err=True)
    result = solve(scenario, spec)
    _write_text(json.dumps(result.to_dict(), indent=1), output, force)
    if apply_path is not None:
        updated = result.scenario_after(scenario)
        _write_text(json.dumps(scenario_to_dict(updated), indent=1), apply_path, force)
    click.echo(
        f"objective {result.objective_before:.6g} -> {result.objective_after:.6g} "
        f"in {result.iterations} iterations",
        err=True,
    )
    if not result.converged:
        raise NonConvergence(f"stopped after {result.iterations} iterations")


@cli.command()
@click.argument("scenario_file")
@click.option("--area", required=True, help="Protected area name.")
@click.option("--kernel", type=click.Choice(KERNEL_KINDS), default="attenuation", show_default=True)
@click.option("--cell-size", type=float, default=1.0, show_default=True, help="Accounting cell size, meters.")
@click.option("--mount-height", type=float, default=10.0, show_default=True, help="Lamp mount height, meters.")
@click.option("--fmt", type=click.Choice(("json", "csv")), default="json", show_default=True)
@click.option("--output", "-o", help="Output file (default stdout).")
@click.option("--force", is_flag=True)
def footprint(scenario_file, area, kernel, cell_size, mount_height, fmt, output, force):
    """Per-source light deposit over a protected area."""
    scenario = _read_scenario(scenario_file)
    report = footprint_report(
        scenario,
        area,
        IlluminanceKernel(kind=kernel, mount_height_m=mount_height),
        cell_size_m=cell_size,
    )
    text = report.to_json() if fmt == "json" else report.to_csv()
    _write_text(text, output, force)


@cli.command("interp-eval")
@click.argument("samples_file")
@click.option(
    "--method",
    type=click.Choice(tuple(METHOD_TAGS) + ("idw-vp",)),
    default="idw",
    show_default=True,
)
@click.option("--power", type=float, default=None, help="IDW exponent (idw_vp only).")
@click.option("--at", nargs=2, type=float, default=None, help="Predict at LAT LON instead of cross-validating.")
@click.option("--output", "-o", help="Output file (default stdout).")
@click.option("--force", is_flag=True)
def interp_eval(samples_file, method, power, at, output, force):
    """Cross-validate an interpolation method on a sample CSV (lat,lon,sqm)."""
    try:
        data = Path(samples_file).read_bytes()
    except OSError as exc:
        raise CliIOError(f"cannot read {samples_file}: {exc}") from exc
    samples = load_samples_csv(data)
    kwargs = {} if power is None else {"power": power}
    m = InterpMethod(tag=method, **kwargs)
    center = GeoPoint(
        sum(s.position.lat_deg for s in samples) / len(samples),
        sum(s.position.lon_deg for s in samples) / len(samples),
    )
    frame = make_local_frame(center)
    if at:
        value = interpolate(m, samples, GeoPoint(at[0], at[1]), frame)
        _write_text(json.dumps({"method": m.tag, "at": [at[0], at[1]], "value": value}), output, force)
        return
    report = leave_one_out(m, samples, frame)
    _write_text(
        json.dumps(
            {
                "method": report.method_tag,
                "n_folds": report.n_folds,
                "n_failed": report.n_failed,
                "failed_folds": report.failed_folds,
                "mean_abs_error": report.mean_abs_error,
            }
        ),
        output,
        force,
    )


@cli.command()
@click.option("--store", default="./scenarios", show_default=True, help="Scenario store directory.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--jobs", type=int, default=2, show_default=True, help="Optimization worker threads.")
def serve(store, host, port, jobs):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    click.echo(f"serving store {store!r} on {host}:{port}", err=True)
    uvicorn.run(create_app(store, jobs=jobs), host=host, port=port)


def main(argv=None) -> int:
    """Entry point with deterministic exit codes (see module docstring)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except CliIOError as exc:
        click.echo(f"io error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"io error: {exc}", err=True)
        return 2
    except NonConvergence as exc:
        click.echo(f"did not converge: {exc}", err=True)
        return 3
    except json.JSONDecodeError as exc:
        click.echo(f"invalid input: {exc}", err=True)
        return 4
    except (GlowmapError, ValueError) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
