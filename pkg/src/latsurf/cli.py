"""Command-line interface: fetch, build, optimize, report, export, serve."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from .artifact import canonical_json, export_manifold, import_manifold
from .geodesic import ReportOptions, predictor_report, stability_report
from .mesh import HalfEdgeMesh
from .netgraph import load_measurements
from .optimize import OptimizeConfig
from .pipeline import PipelineConfig, build_graphs, load_matrix, run_pipeline
from . import report as report_mod

logger = logging.getLogger(__name__)


def _common_pipeline_options(fn):
    options = [
        click.option("--measurements", "measurements_path", required=True,
                     type=click.Path(exists=True), help="Measurement JSON or CSV file."),
        click.option("--format", "measurement_format", default="json",
                     type=click.Choice(["json", "csv"]), show_default=True),
        click.option("--vantage-points", "vantage_points_path", default=None,
                     type=click.Path(exists=True),
                     help="Companion vantage_points.csv for --format csv."),
        click.option("--epsilon", "epsilons", multiple=True, type=float,
                     default=(10.0,), show_default=True,
                     help="Residual threshold in ms; repeat for a sweep."),
        click.option("--residual-mode", default="rtt-minus-2gcl",
                     type=click.Choice(["rtt-minus-2gcl", "half-rtt-minus-gcl"]),
                     show_default=True),
        click.option("--cluster-cutoff-km", default=0.0, type=float, show_default=True,
                     help="Single-linkage clustering cutoff; 0 disables."),
        click.option("--projection", "projection_kind", default="web-mercator",
                     type=click.Choice(["web-mercator", "equirectangular"]),
                     show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config_from(kwargs) -> PipelineConfig:
    kwargs = dict(kwargs)
    kwargs["epsilons"] = sorted(float(e) for e in kwargs.pop("epsilons"))
    optimizer = OptimizeConfig(
        max_iterations=kwargs.pop("max_iterations", 2000),
        gradient_tolerance=kwargs.pop("gradient_tolerance", 1e-6),
        relative_loss_tolerance=kwargs.pop("relative_loss_tolerance", 1e-9),
        lbfgs_memory=kwargs.pop("lbfgs_memory", 10))
    lambdas = kwargs.pop("lambda_smooths", None)
    if lambdas is not None:
        kwargs["lambda_smooths"] = [float(x) for x in lambdas]
    return PipelineConfig(optimizer=optimizer, **kwargs)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose):
    """Turn latency measurements into curvature-annotated graphs and
    optimized manifold surfaces."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_common_pipeline_options
@click.option("--out", "output_dir", required=True, type=click.Path())
def build(output_dir, **kwargs):
    """Ingest measurements and write the thresholded, curvature-annotated
    graph for every sweep epsilon."""
    config = _config_from(kwargs)
    matrix = load_matrix(config)
    clustered, graphs, clamped = build_graphs(matrix, config)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for g in graphs:
        doc = {
            "epsilon_ms": g.epsilon_ms,
            "residual_mode": config.residual_mode,
            "cluster_cutoff_km": config.cluster_cutoff_km,
            "clamped_residuals": clamped,
            "vertices": [{"id": v.id, "name": v.name, "lat": v.location.lat,
                          "lon": v.location.lon} for v in g.vertices],
            "edges": [{"u": e.u, "v": e.v, "residual_ms": e.residual_ms,
                       "rtt_ms": e.rtt_ms, "ricci": e.ricci,
                       "epsilon_first_ms": e.epsilon_first_ms} for e in g.edges],
        }
        path = out / f"graph_eps{g.epsilon_ms:g}.json"
        path.write_bytes(canonical_json(doc))
        click.echo(f"wrote {path} ({len(g.edges)} edges)")
    report_mod.sweep_figure(graphs, out / "sweep.png")
    click.echo(f"wrote {out / 'sweep.png'}")


@main.command()
@_common_pipeline_options
@click.option("--lambda-smooth", "lambda_smooths", multiple=True, type=float,
              default=(0.001,), show_default=True, help="Repeat for a sweep.")
@click.option("--mesh-k", default=30, type=int, show_default=True)
@click.option("--ball-radius", default=None, type=float,
              help="Edge-ball radius override in normalized units.")
@click.option("--apex-fraction", default=0.1, type=float, show_default=True)
@click.option("--loss-variant", "curvature_loss_variant", default="length-weighted",
              type=click.Choice(["length-weighted", "uniform"]), show_default=True)
@click.option("--max-iterations", default=2000, type=int, show_default=True)
@click.option("--gradient-tolerance", default=1e-6, type=float, show_default=True)
@click.option("--subtract-initial/--no-subtract-initial", default=True,
              show_default=True)
@click.option("--flatten/--no-flatten", "flatten_exterior", default=True,
              show_default=True)
@click.option("--report-subdivision", default=4, type=int, show_default=True)
@click.option("--out", "output_dir", required=True, type=click.Path())
def optimize(**kwargs):
    """Run the full pipeline and export one manifold artifact per
    (epsilon, lambda) sweep point."""
    config = _config_from(kwargs)
    artifacts = run_pipeline(config)
    for a in artifacts:
        click.echo(f"wrote {Path(config.output_dir) / (a.artifact_id + '.json')} "
                   f"(final loss {a.metadata['final_loss']:.6g}, "
                   f"{a.metadata['iterations']} iterations)")


@main.command()
@click.option("--artifact", "artifact_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--measurements", "measurements_path", default=None,
              type=click.Path(exists=True),
              help="Re-run the predictor report against these measurements "
                   "(defaults to the report embedded in the artifact).")
@click.option("--snapshot", "snapshot_paths", multiple=True,
              type=click.Path(exists=True),
              help="Measurement snapshots for a stability report; repeat.")
@click.option("--with-intercept", is_flag=True)
@click.option("--tiv-filter", is_flag=True,
              help="Drop triangle-inequality-violating pairs before fitting.")
@click.option("--tiv-slack-ms", default=0.0, type=float, show_default=True)
@click.option("--out", "output_dir", required=True, type=click.Path())
def report(artifact_paths, measurements_path, snapshot_paths, with_intercept,
           tiv_filter, tiv_slack_ms, output_dir):
    """Render per-link predictor tables, JSON mirrors, and figures for
    exported artifacts."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path in artifact_paths:
        artifact = import_manifold(path)
        names = {v.id: v.name for v in artifact.graph.vertices}
        if measurements_path:
            with open(measurements_path, "r", encoding="utf-8") as fh:
                matrix = load_measurements(fh)
            mesh = HalfEdgeMesh(k=artifact.mesh_k, bounds=artifact.mesh_bounds,
                                xy=artifact.vertex_xy, z=artifact.vertex_z,
                                faces=artifact.faces)
            sweep = artifact.metadata.get("config", {}).get("epsilons",
                                                            [artifact.epsilon_ms])
            rep = predictor_report(matrix, artifact.graph, mesh, artifact.projection,
                                   ReportOptions(sweep_epsilons=sweep,
                                                 with_intercept=with_intercept,
                                                 tiv_filter=tiv_filter,
                                                 tiv_slack_ms=tiv_slack_ms))
        else:
            rep = artifact.reports.get("predictor")
            if rep is None:
                raise click.ClickException(
                    f"{path} embeds no predictor report; pass --measurements")
        stem = f"predictor_{artifact.artifact_id}"
        for written in report_mod.write_predictor_outputs(rep, out, stem=stem,
                                                          names=names):
            click.echo(f"wrote {written}")

    if snapshot_paths:
        if not measurements_path and not artifact_paths:
            raise click.ClickException("stability needs artifacts for config echo")
        first = import_manifold(artifact_paths[0])
        echo = first.metadata.get("config", {})
        config = PipelineConfig(
            residual_mode=echo.get("residual_mode", "rtt-minus-2gcl"),
            epsilons=[first.epsilon_ms],
            cluster_cutoff_km=echo.get("cluster_cutoff_km", 0.0),
            mesh_k=echo.get("mesh_k", first.mesh_k),
            projection_kind=echo.get("projection_kind", first.projection.kind),
            lambda_smooths=[first.lambda_smooth],
            apex_fraction=echo.get("apex_fraction", 0.1),
            optimizer=OptimizeConfig(max_iterations=echo.get("max_iterations", 2000)),
        )
        matrices = []
        for sp in snapshot_paths:
            with open(sp, "r", encoding="utf-8") as fh:
                matrices.append(load_measurements(fh))
        stab = stability_report(matrices, config)
        names = {v.id: v.name for v in first.graph.vertices}
        for written in report_mod.write_stability_outputs(stab, out, names=names):
            click.echo(f"wrote {written}")


@main.command()
@click.option("--artifact", "artifact_path", required=True, type=click.Path(exists=True))
@click.option("--out", "output_path", required=True, type=click.Path())
def export(artifact_path, output_path):
    """Validate an artifact and re-export it canonically."""
    artifact = import_manifold(artifact_path)
    path = export_manifold(artifact, output_path)
    round_trip = import_manifold(path)
    if round_trip != artifact:
        raise click.ClickException("round-trip mismatch after export")
    click.echo(f"wrote {path}")


@main.command()
@click.option("--dir", "directory", required=True, type=click.Path(exists=True),
              help="Directory of exported artifacts.")
@click.option("--port", default=8787, type=int, show_default=True)
@click.option("--viewer-dist", default=None, type=click.Path(),
              help="Static viewer bundle to host at /.")
def serve(directory, port, viewer_dist):
    """Serve artifacts and geodesic queries over HTTP."""
    from .server import serve as run_server

    run_server(directory, port=port, viewer_dist=viewer_dist)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Atlas fetch configuration JSON.")
@click.option("--out", "output_path", required=True, type=click.Path())
def fetch(config_path, output_path):
    """Pull ping results from RIPE Atlas and write the measurement file.
    Reads the API key from ATLAS_API_KEY."""
    from .fetch import AtlasConfig, fetch_measurements

    config = AtlasConfig.from_file(config_path)
    doc = fetch_measurements(config)
    out = Path(output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1), encoding="utf-8")
    click.echo(f"wrote {out} ({len(doc['measurements'])} pairs)")


if __name__ == "__main__":
    main(prog_name="latsurf")
