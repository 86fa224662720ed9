import math

import pytest

from obfrank.model import PathLossModel, QosSpec, RectGrid, SystemConfig


@pytest.fixture
def fig4_grid():
    return RectGrid.adjacent(2.0)


@pytest.fixture
def qos():
    return QosSpec(eta=4.0, p=0.1)


@pytest.fixture
def two_cell_system(fig4_grid, qos):
    return SystemConfig(2, 10, 8, 0.01, fig4_grid, qos, PathLossModel(3.0))


def within_se(estimate, expected, trials, k=3.0):
    se = math.sqrt(expected * (1 - expected) / trials)
    return abs(estimate - expected) <= k * se
