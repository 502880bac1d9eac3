"""Report rendering: aligned-column text tables mirroring the per-link
latency comparison layout, JSON mirrors, and matplotlib figures written
next to the delimited output."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .artifact import _report_dict, canonical_json
from .geodesic import PredictorReport, StabilityReport
from .netgraph import DelayGraph


def _fmt(value, nd=1) -> str:
    if value is None:
        return "-"
    return f"{value:.{nd}f}"


def render_predictor_text(report: PredictorReport,
                          names: Optional[dict] = None,
                          edges_only: bool = True) -> str:
    """Aligned columns in the order: threshold, endpoints, great-circle and
    geodesic prediction errors, great-circle distance."""
    names = names or {}
    header = ["eps", "City A", "City B", "d_GCD", "d_Geo", "d_GCD_km"]
    rows = []
    for r in report.rows:
        if edges_only and not r.is_edge:
            continue
        rows.append([
            _fmt(r.epsilon_first_ms, 0),
            names.get(r.pair[0], r.pair[0]),
            names.get(r.pair[1], r.pair[1]),
            _fmt(r.delta_gcd_ms),
            _fmt(r.delta_geo_ms),
            _fmt(r.d_gcd_km),
        ])
    widths = [max(len(header[c]), *(len(row[c]) for row in rows)) if rows
              else len(header[c]) for c in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    lines.append("")
    lines.append(f"gcd fit: slope={report.gcd_fit.slope:.6g} ms/km "
                 f"intercept={report.gcd_fit.intercept:.6g} r2={report.gcd_fit.r_squared:.4f}")
    lines.append(f"geodesic fit: slope={report.geodesic_fit.slope:.6g} ms/unit "
                 f"intercept={report.geodesic_fit.intercept:.6g} "
                 f"r2={report.geodesic_fit.r_squared:.4f}")
    lines.append(f"tiv_filtered={report.tiv_filtered}")
    return "\n".join(lines) + "\n"


def render_predictor_json(report: PredictorReport) -> bytes:
    return canonical_json(_report_dict(report))


def render_stability_text(report: StabilityReport, names: Optional[dict] = None) -> str:
    names = names or {}
    header = ["City A", "City B", "min_ms", "max_ms", "range_ms"]
    rows = [[names.get(r.pair[0], r.pair[0]), names.get(r.pair[1], r.pair[1]),
             _fmt(r.min_ms, 2), _fmt(r.max_ms, 2), _fmt(r.range_ms, 2)]
            for r in report.rows]
    widths = [max(len(header[c]), *(len(row[c]) for row in rows)) if rows
              else len(header[c]) for c in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    lines.append("")
    lines.append(f"snapshots={report.n_snapshots} eps={report.epsilon_ms:g} "
                 f"lambda={report.lambda_smooth:g}")
    return "\n".join(lines) + "\n"


def render_stability_json(report: StabilityReport) -> bytes:
    doc = {
        "n_snapshots": report.n_snapshots,
        "epsilon_ms": report.epsilon_ms,
        "lambda_smooth": report.lambda_smooth,
        "rows": [{"pair": list(r.pair), "min_ms": r.min_ms, "max_ms": r.max_ms,
                  "range_ms": r.range_ms} for r in report.rows],
    }
    return canonical_json(doc)


def predictor_scatter_figure(report: PredictorReport, path) -> Path:
    """Fitted latency against observed minimum RTT, one marker set per
    predictor, with the identity diagonal."""
    fig, ax = plt.subplots(figsize=(6, 6))
    obs = [r.rtt_ms for r in report.rows]
    gcd_fit = [report.gcd_fit.predict(r.d_gcd_km) for r in report.rows]
    geo_fit = [report.geodesic_fit.predict(r.geodesic_length) for r in report.rows]
    ax.scatter(obs, gcd_fit, s=18, alpha=0.7, label="great-circle predictor")
    ax.scatter(obs, geo_fit, s=18, alpha=0.7, marker="^", label="geodesic predictor")
    lim = [0, max(obs + gcd_fit + geo_fit) * 1.05]
    ax.plot(lim, lim, "k--", linewidth=0.8, label="exact")
    ax.set_xlabel("measured minimum RTT (ms)")
    ax.set_ylabel("fitted latency (ms)")
    ax.set_title(f"latency recovery, eps = {report.epsilon_ms:g} ms")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def stability_figure(report: StabilityReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ranges = sorted(r.range_ms for r in report.rows)
    ax.hist(ranges, bins=min(20, max(5, len(ranges) // 3)), color="#4477aa")
    ax.set_xlabel("fitted geodesic latency range over snapshots (ms)")
    ax.set_ylabel("pairs")
    ax.set_title(f"stability across {report.n_snapshots} snapshots")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure(graphs: Sequence[DelayGraph], path) -> Path:
    """Edge count and mean edge curvature across the threshold sweep."""
    eps = [g.epsilon_ms for g in graphs]
    counts = [len(g.edges) for g in graphs]
    means = []
    for g in graphs:
        riccis = [e.ricci for e in g.edges if e.ricci is not None]
        means.append(sum(riccis) / len(riccis) if riccis else float("nan"))
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(eps, counts, "o-", color="#4477aa")
    ax1.set_xlabel("threshold eps (ms)")
    ax1.set_ylabel("edges", color="#4477aa")
    ax2 = ax1.twinx()
    ax2.plot(eps, means, "s--", color="#cc6677")
    ax2.set_ylabel("mean Ricci curvature", color="#cc6677")
    ax1.set_title("threshold sweep")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_predictor_outputs(report: PredictorReport, out_dir, stem: str = "predictor",
                            names: Optional[dict] = None) -> list[Path]:
    """Text + JSON + scatter figure, written side by side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt = out_dir / f"{stem}.txt"
    txt.write_text(render_predictor_text(report, names=names), encoding="utf-8")
    js = out_dir / f"{stem}.json"
    js.write_bytes(render_predictor_json(report))
    fig = predictor_scatter_figure(report, out_dir / f"{stem}_scatter.png")
    return [txt, js, fig]


def write_stability_outputs(report: StabilityReport, out_dir, stem: str = "stability",
                            names: Optional[dict] = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt = out_dir / f"{stem}.txt"
    txt.write_text(render_stability_text(report, names=names), encoding="utf-8")
    js = out_dir / f"{stem}.json"
    js.write_bytes(render_stability_json(report))
    fig = stability_figure(report, out_dir / f"{stem}_ranges.png")
    return [txt, js, fig]
