import math
from pathlib import Path

import numpy as np
import pytest

from trafseed import model
from trafseed.model import Road
from trafseed.network import Demand, Network

PI = math.pi
ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def residential(length):
    return Road.from_reaction_times(length, 13.9)


def highway(length):
    return Road.from_reaction_times(length, 25.0)


def two_roads():
    return Network([residential(400 * PI), residential(1000 * PI)])


def four_roads():
    return Network([residential(400 * PI), highway(800 * PI), highway(1000 * PI),
                    residential(600 * PI)])


def random_network(rng, n):
    """Roads with distinct free-flow latencies and random reaction times."""
    while True:
        roads = [Road.from_reaction_times(rng.uniform(300, 3000), rng.uniform(5, 15),
                                          rng.uniform(2, 4), rng.uniform(0.5, 1.5))
                 for _ in range(n)]
        try:
            return Network(roads)
        except ValueError:
            continue


@pytest.fixture
def net2():
    return two_roads()


@pytest.fixture
def net4():
    return four_roads()


@pytest.fixture
def dem2():
    return Demand(0.3, 0.3)


@pytest.fixture
def dem4():
    return Demand(0.4, 1.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def case_a():
    """Two roads where the cheapest altruistic equilibrium congests road 1."""
    net = Network([Road(1000, 10, 20, 5), Road(3000, 10, 3, 3)])
    return net, Demand(0.3125, 0.4), 2.0


def case_b():
    """Three roads where using two equilibrium roads beats the minimal choice."""
    q1 = Road(1000, 10, 45, 2)
    a2 = model.latency(q1, (0.0, 1.0), True)
    net = Network([q1, Road(a2 * 5, 5, 20, 20), Road(9000, 30, 3, 3)])
    return net, Demand(0.2, 1.0), 4.0


def unbounded(ratio):
    """Three roads with a_3 / a_2 = ratio; selfish users pay a_3, altruists a_1..a_2."""
    net = Network([Road(1000, 10, 20, 20), Road(1100, 10, 20, 20),
                   Road(110 * ratio * 30, 30, 3, 3)])
    return net, Demand(0.4, 0.4), 1.1
