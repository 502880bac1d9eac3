import json
from pathlib import Path

import pytest

from latsurf.optimize import OptimizeConfig
from latsurf.pipeline import PipelineConfig, load_matrix, run_pipeline_on_matrix

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_meta():
    return json.loads((FIXTURES / "fixture_meta.json").read_text())


@pytest.fixture(scope="session")
def toy_config(fixture_meta):
    return PipelineConfig(
        measurements_path=str(FIXTURES / "toy_network.json"),
        epsilons=[fixture_meta["toy_epsilon_ms"]],
        lambda_smooths=[0.001],
        mesh_k=30,
        projection_kind=fixture_meta["toy_projection"],
        optimizer=OptimizeConfig(max_iterations=2000),
    )


@pytest.fixture(scope="session")
def toy_artifact(toy_config):
    """The full-scale toy manifold; shared across the suite because the
    optimization run is the expensive part."""
    matrix = load_matrix(toy_config)
    return run_pipeline_on_matrix(matrix, toy_config)[0]


@pytest.fixture(scope="session")
def quick_toy_artifacts():
    """Small, fast toy sweep for artifact/server/CLI plumbing tests."""
    config = PipelineConfig(
        measurements_path=str(FIXTURES / "toy_network.json"),
        epsilons=[5.0, 30.0],
        lambda_smooths=[0.001],
        mesh_k=12,
        projection_kind="equirectangular",
        optimizer=OptimizeConfig(max_iterations=60),
    )
    matrix = load_matrix(config)
    return run_pipeline_on_matrix(matrix, config), config
