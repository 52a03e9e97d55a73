import math

import numpy as np
import pytest

from c2gplan.geometry import Configuration, Workspace, random_workspace


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def empty_workspace():
    return Workspace(extent=500.0, id="empty")


@pytest.fixture
def cluttered_workspace():
    return random_workspace(seed=3, n_obstacles=5, extent=500.0, workspace_id="clutter-3")


def random_configuration(rng, lo=-5.0, hi=5.0) -> Configuration:
    return Configuration(
        float(rng.uniform(lo, hi)),
        float(rng.uniform(lo, hi)),
        float(rng.uniform(-math.pi, math.pi)),
    )
