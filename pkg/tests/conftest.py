import numpy as np
import pytest

from app.game_core import MAX, SUM, ExplicitDistribution, PolymatrixGame, ProductDistribution
from app.utils import load_settings


def all_pairs(n):
    return [(p, q) for p in range(n) for q in range(n) if p != q]


@pytest.fixture(autouse=True)
def fresh_settings():
    """Every test reads the defaults unless it writes its own settings file"""
    load_settings.cache_clear()
    yield
    load_settings.cache_clear()


@pytest.fixture
def game_a():
    """3 players, Max, every payoff row (0, 1): a uniform opponent pays 1 half the time"""
    payoffs = {key: [[0.0, 1.0], [0.0, 1.0]] for key in all_pairs(3)}
    return PolymatrixGame(3, (2, 2, 2), payoffs, MAX)


@pytest.fixture
def planted():
    """Two players; under d player 0 is told 0 and gains exactly 1 by switching to 1 half the time

    Returns (game, d, (p, i, j)) with g(0, 0, 1) = -0.5 the only negative entry.
    """
    payoffs = {
        (0, 1): [[0.0, 0.0], [1.0, 0.0]],
        (1, 0): [[0.0, 0.0], [0.0, 0.0]],
    }
    game = PolymatrixGame(2, (2, 2), payoffs, SUM)
    d = ExplicitDistribution({(0, 0): 0.5, (0, 1): 0.5})
    return game, d, (0, 0, 1)


@pytest.fixture
def constant_game():
    def build(n, counts, value=1.0, aggregator=MAX):
        payoffs = {(p, q): np.full((counts[p], counts[q]), value) for p, q in all_pairs(n)}
        return PolymatrixGame(n, counts, payoffs, aggregator)
    return build


@pytest.fixture
def uniform():
    return ProductDistribution.uniform
