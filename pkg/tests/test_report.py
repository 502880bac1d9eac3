import json


from latsurf.geodesic import PredictorFit, PredictorReport, PredictorRow
from latsurf.report import (
    predictor_scatter_figure,
    render_predictor_json,
    render_predictor_text,
    render_stability_text,
    sweep_figure,
    write_predictor_outputs,
)


def reference_report():
    """Static rows with hand-picked values; purely a formatting fixture."""
    rows = [
        PredictorRow(pair=("detroit", "pittsburgh"), epsilon_first_ms=10.0,
                     delta_gcd_ms=4.7, delta_geo_ms=1.4, d_gcd_km=349.9,
                     rtt_ms=12.0, geodesic_length=0.21, is_edge=True),
        PredictorRow(pair=("ashburn", "atlanta"), epsilon_first_ms=10.0,
                     delta_gcd_ms=9.6, delta_geo_ms=6.5, d_gcd_km=853.1,
                     rtt_ms=18.0, geodesic_length=0.44, is_edge=True),
        PredictorRow(pair=("dallas", "la"), epsilon_first_ms=22.0,
                     delta_gcd_ms=23.9, delta_geo_ms=4.5, d_gcd_km=1993.6,
                     rtt_ms=40.0, geodesic_length=0.95, is_edge=True),
    ]
    return PredictorReport(
        gcd_fit=PredictorFit(slope=0.012, intercept=0.0, r_squared=0.7664),
        geodesic_fit=PredictorFit(slope=42.0, intercept=0.0, r_squared=0.8827),
        rows=rows, tiv_filtered=False, with_intercept=False, subdivision=4,
        epsilon_ms=10.0)


class TestPredictorText:
    def test_column_order_and_values(self):
        names = {"detroit": "Detroit", "pittsburgh": "Pittsburgh",
                 "ashburn": "Ashburn", "atlanta": "Atlanta",
                 "dallas": "Dallas", "la": "L.A."}
        text = render_predictor_text(reference_report(), names=names)
        lines = text.splitlines()
        header = lines[0].split()
        assert header == ["eps", "City", "A", "City", "B", "d_GCD", "d_Geo", "d_GCD_km"]
        row = lines[2].split()
        assert row == ["10", "Detroit", "Pittsburgh", "4.7", "1.4", "349.9"]
        dallas = next(l for l in lines if "Dallas" in l).split()
        assert dallas == ["22", "Dallas", "L.A.", "23.9", "4.5", "1993.6"]

    def test_fit_summary_included(self):
        text = render_predictor_text(reference_report())
        assert "r2=0.7664" in text
        assert "r2=0.8827" in text

    def test_json_mirror_parses(self):
        blob = render_predictor_json(reference_report())
        doc = json.loads(blob)
        assert doc["rows"][0]["pair"] == ["detroit", "pittsburgh"]
        assert doc["gcd_fit"]["r_squared"] == 0.7664


class TestStabilityText:
    def test_renders(self):
        from latsurf.geodesic import StabilityReport, StabilityRow
        rep = StabilityReport(rows=[StabilityRow(pair=("la", "nyc"),
                                                 min_ms=72.9, max_ms=75.3)],
                              n_snapshots=28, epsilon_ms=22.0, lambda_smooth=0.001)
        text = render_stability_text(rep)
        assert "72.90" in text and "75.30" in text
        assert "2.40" in text  # the range column


class TestFigures:
    def test_scatter_written(self, tmp_path):
        path = predictor_scatter_figure(reference_report(), tmp_path / "scatter.png")
        assert path.exists() and path.stat().st_size > 1000

    def test_write_outputs_side_by_side(self, tmp_path):
        paths = write_predictor_outputs(reference_report(), tmp_path)
        suffixes = sorted(p.suffix for p in paths)
        assert suffixes == [".json", ".png", ".txt"]
        for p in paths:
            assert p.exists()

    def test_sweep_figure(self, tmp_path, quick_toy_artifacts):
        artifacts, _ = quick_toy_artifacts
        path = sweep_figure([a.graph for a in artifacts], tmp_path / "sweep.png")
        assert path.exists() and path.stat().st_size > 1000
