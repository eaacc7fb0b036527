"""
Shared fixtures and factories for the test suite.
"""
import logging
import os

# Keep developer .env / shell overrides out of the defaults the tests rely on
for _key in [k for k in os.environ if k.startswith("PTPPM_")]:
    del os.environ[_key]

import numpy as np
import pytest

from ptppm.config import get_settings
from ptppm.core.grid_map import GridMap
from ptppm.core.mobility import ProbVector, Trajectory, build_transition_matrix
from ptppm.core.pipeline import PipelineConfig
from ptppm.core.road_graph import grid_graph
from ptppm.models import MapConfig, ScenarioConfig, SyntheticConfig
from ptppm.services.synthetic import random_walk_trajectories

CELL = 620.0


def pytest_addoption(parser):
    parser.addoption(
        "--full-trends",
        action="store_true",
        default=False,
        help="run the trend checks with 1,000 paired trials per parameter point",
    )


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def _restore_root_logger():
    """cli.main() reconfigures the root logger; undo it after each test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def grid4():
    return GridMap(rows=4, cols=4, cell_size_m=CELL)


@pytest.fixture
def grid8():
    return GridMap(rows=8, cols=8, cell_size_m=CELL, origin=(39.9, 116.3))


@pytest.fixture
def beijing_map():
    """16x16 map at the default cell size and time step."""
    return GridMap(rows=16, cols=16, origin=(39.9, 116.3))


@pytest.fixture
def make_prior():
    """Factory: random prior over n cells with a fixed seed; `zeros` cells get no mass."""

    def _make(n: int, seed: int = 0, zeros: int = 0) -> ProbVector:
        rng = np.random.default_rng(seed)
        w = rng.random(n) + 0.05
        if zeros:
            w[rng.choice(n, size=zeros, replace=False)] = 0.0
        return ProbVector.normalized(w)

    return _make


@pytest.fixture
def walks8(grid8):
    """Persistent random walks on the 8x8 grid graph."""
    return random_walk_trajectories(grid8, grid_graph(grid8), 30, 25, 0.8, np.random.default_rng(7))


@pytest.fixture
def pipeline_cfg8(grid8, walks8):
    """PF pipeline on the 8x8 map with a Markov model learned from walks8."""
    return PipelineConfig(
        grid_map=grid8,
        transition=build_transition_matrix(walks8, grid8),
        epsilon_default=0.5,
        delta=0.2,
        e_m=0.5 * CELL,
        on_infeasible="skip",
    )


@pytest.fixture
def line_trajectory():
    return Trajectory.from_cells([0, 1, 2, 10, 18], user_id="u1")


@pytest.fixture
def synthetic_scenario_config():
    """Small synthetic scenario; no files needed."""
    return ScenarioConfig(
        name="syn8",
        map=MapConfig(rows=8, cols=8, cell_size_m=CELL),
        synthetic=SyntheticConfig(n_trajectories=30, length=20, persistence=0.8, seed=3),
        sensitive=[27, 36],
        semantic_classes={27: 4, 36: 2},
        epsilon_s=1.0,
        epsilon_default=0.5,
        e_m=0.5 * CELL,
        delta=0.2,
    )
