import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafseed import model
from trafseed.errors import ConservationError, DomainError
from trafseed.model import Road
from trafseed.network import (AltruismProfile, Demand, EquilibriumInfo, Network, Routing, cost,
                              is_altruistic_equilibrium, is_nash, phi_eval, road_latencies,
                              robustness)
from trafseed.solvers import solve_bne, solve_ne_at

from conftest import PI, four_roads, residential, two_roads


def test_network_sorts_by_free_flow_latency():
    net = Network([residential(1000 * PI), residential(400 * PI)])
    assert list(net.free_flow_latencies) == sorted(net.free_flow_latencies)
    assert net.a(1) == pytest.approx(400 * PI / 13.9)


def test_network_rejects_ties():
    with pytest.raises(ValueError, match="distinct"):
        Network([residential(500), residential(500)])
    with pytest.raises(ValueError):
        Network([])


def test_routing_invariants():
    with pytest.raises(ValueError):
        Routing([0.1], [0.0], [True, False])
    with pytest.raises(ValueError):
        Routing([0.0, 0.1], [0.0, 0.0], [True, False])  # congested but empty
    with pytest.raises(ValueError):
        Routing([-0.1], [0.0], [False])
    r = Routing([0.1, 0.0], [0.2, 0.0], [False, False])
    with pytest.raises(ValueError):
        r.x[0] = 1.0


def test_cost_reference_routings():
    net = two_roads()
    r = Routing([0.3, 0.0], [0.031, 0.269], [True, False])
    assert cost(net, r) == pytest.approx(135.608, rel=0.01)
    net4 = four_roads()
    r = Routing([0.4, 0, 0, 0], [0.024, 0.833, 0.343, 0], [True, False, False, False])
    assert cost(net4, r, slack=1e-3) == pytest.approx(169.469, rel=0.01)
    assert cost(net, Routing.empty(2)) == 0.0


def test_is_nash_reference_ne():
    net = two_roads()
    r = Routing([0.006, 0.294], [0.252, 0.048], [True, True])
    v = is_nash(net, r, Demand(0.3, 0.3), tol=0.02)
    assert v
    assert v.info.ell0 == pytest.approx(540, rel=0.02)
    assert v.info.m_eq == v.info.m_all == 2


def test_is_nash_trivial_cases():
    net = Network([residential(1000)])
    v = is_nash(net, Routing([0.1], [0.1], [False]), Demand(0.1, 0.1))
    assert v and v.info.ell0 == net.a(1)
    net = two_roads()
    v = is_nash(net, Routing([0.1, 0.1], [0.0, 0.0], [False, False]), Demand(0.2, 0.0))
    assert not v


def test_conservation_error():
    net = two_roads()
    with pytest.raises(ConservationError):
        is_nash(net, Routing([0.1, 0.0], [0.0, 0.0], [False, False]), Demand(0.3, 0.0))


def test_altruistic_reference_bane():
    net = four_roads()
    r = Routing([0.4, 0, 0, 0], [0.041, 0.833, 0.325, 0], [False] * 4)
    v = is_altruistic_equilibrium(net, r, Demand(0.4, 1.2), AltruismProfile.uniform(1.5),
                                  tol=1e-3)
    assert v
    assert v.info.ell0 == pytest.approx(net.a(1))
    assert v.info.m_all == 3


def test_altruism_violated():
    net = two_roads()
    dem = Demand(0.3, 0.3)
    # road 1 free-flow, the rest of the autonomous users on road 2 at a2 = 2.5 a1
    r = Routing([0.3, 0.0], [0.2, 0.1], [False, False])
    assert is_altruistic_equilibrium(net, r, dem, AltruismProfile.uniform(2.5))
    v = is_altruistic_equilibrium(net, r, dem, AltruismProfile.uniform(2.0))
    assert not v and v.reason == "altruism-violated"
    # half the autonomous users tolerate 2x, the other half 3x: 0.2 quicker covers them
    prof = AltruismProfile(((2.0, 0.5), (3.0, 1.0)))
    assert is_altruistic_equilibrium(net, r, dem, prof)
    prof = AltruismProfile(((2.0, 0.7), (3.0, 1.0)))
    assert not is_altruistic_equilibrium(net, r, dem, prof)


def test_human_on_slower_road_rejected():
    net = two_roads()
    r = Routing([0.2, 0.1], [0.1, 0.0], [False, False])
    v = is_altruistic_equilibrium(net, r, Demand(0.3, 0.1), AltruismProfile.uniform(5.0))
    assert not v


def test_robustness_reference_routings():
    net = four_roads()
    dem = Demand(0.4, 1.2)
    info = EquilibriumInfo(3, 3, net.a(3))
    r = Routing([0.391, 0.009, 0, 0], [0, 0.772, 0.428, 0], [True, True, False, False])
    assert robustness(net, r, dem, info) == pytest.approx(0.210, abs=0.005)
    r = Routing([0.075, 0.2, 0.126, 0], [0.52, 0.43, 0.25, 0], [True, True, False, False])
    assert robustness(net, r, dem, info) == pytest.approx(0.183, abs=0.005)


def test_robustness_edges():
    net = Network([residential(1000)])
    road = net.roads[0]
    cap = model.max_flow(road, (0.5, 0.5))
    r = Routing([cap / 2], [cap / 2], [False])
    info = EquilibriumInfo(1, 1, net.a(1))
    assert robustness(net, r, Demand(cap / 2, cap / 2), info) == pytest.approx(0.0, abs=1e-12)
    r = Routing([cap / 4], [cap / 4], [False])
    assert robustness(net, r, Demand(cap / 4, cap / 4), info) == pytest.approx(1.0)
    r = Routing([cap / 4], [cap / 4], [True])
    assert robustness(net, r, Demand(cap / 4, cap / 4), info) == 0.0
    with pytest.raises(DomainError):
        robustness(net, Routing.empty(1), Demand(0, 0), info)


def test_phi_eval():
    p = AltruismProfile.uniform(2.5)
    assert phi_eval(p, 2.5) == 0.0
    assert phi_eval(p, 2.500001) == 1.0
    assert phi_eval(p, 1.0) == 0.0
    two = AltruismProfile(((1.2, 0.4), (1.6, 1.0)))
    assert phi_eval(two, 1.4) == 0.4
    assert phi_eval(two, 1.2) == 0.0
    assert phi_eval(two, 2.0) == 1.0
    assert len(two) == 2


def test_profile_validation():
    for bad in [(), ((0.9, 1.0),), ((2.0, 0.5), (1.5, 1.0)), ((1.5, 0.6), (2.0, 0.4)),
                ((1.5, 0.5),), ((1.5, 1.2),)]:
        with pytest.raises(ValueError):
            AltruismProfile(bad)


def test_empty_roads_report_free_flow_latency():
    net = two_roads()
    lat = road_latencies(net, Routing([0.1, 0], [0, 0], [False, False]))
    assert list(lat) == list(net.free_flow_latencies)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 5.0), st.floats(0.02, 0.3), st.floats(0.02, 0.3))
def test_nash_implies_altruistic(seed, kappa, xbar, ybar):
    rng = np.random.default_rng(seed)
    from conftest import random_network
    net = random_network(rng, 3)
    dem = Demand(xbar, ybar)
    try:
        res = solve_bne(net, dem)
    except Exception:
        return
    prof = AltruismProfile.uniform(kappa)
    assert is_nash(net, res.routing, dem)
    assert is_altruistic_equilibrium(net, res.routing, dem, prof)
    # a congested member of the NE family too, when one exists
    ne = solve_ne_at(net, dem, net.n, net.a(net.n) * 1.5)
    if ne is not None:
        assert is_nash(net, ne.routing, dem)
        assert is_altruistic_equilibrium(net, ne.routing, dem, prof)


@settings(max_examples=100, deadline=None)
@given(st.floats(100, 3000), st.floats(5, 30), st.floats(3, 40), st.floats(0.01, 1), st.floats(0, 1),
       st.booleans())
def test_cost_ignores_split_when_headways_match(d, v, h, frac, alpha, congested):
    net = Network([Road(d, v, h, h)])
    z = frac * model.max_flow(net.roads[0], (1, 0))
    a = Routing([z], [0.0], [congested])
    b = Routing([z * (1 - alpha)], [z * alpha], [congested])
    assert cost(net, b) == pytest.approx(cost(net, a), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.02, 0.4), st.floats(0.02, 0.4))
def test_ell0_is_free_flow_latency_iff_free_flow(seed, xbar, ybar):
    from conftest import random_network
    net = random_network(np.random.default_rng(seed), 3)
    dem = Demand(xbar, ybar)
    try:
        res = solve_bne(net, dem)
    except Exception:
        return
    v = is_nash(net, res.routing, dem)
    m = v.info.m_eq
    at_a = abs(v.info.ell0 - net.a(m)) <= 1e-6 * net.a(m)
    assert at_a == (not res.routing.s[m - 1])
