"""Brute-force grid search over routings, used to cross-check the solvers.

The search is exhaustive over a flow grid and every congestion pattern, so
it is only practical for networks of up to three roads. A vectorized
prefilter discards most grid points; survivors are confirmed with the same
membership tests that define the equilibria.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BudgetExceeded, DomainError
from .network import (TIE_RTOL, AltruismProfile, Demand, Network, Routing,
                      is_altruistic_equilibrium, is_nash)

MAX_ROADS = 3


@dataclass(frozen=True)
class GridSpec:
    """Grid step (veh/s), relative latency slack, and capacity slack.

    ``capacity_slack`` (veh/s) is how far a free-flow grid point may sit
    past a road's capacity line. It only absorbs round-off: a point past
    capacity by any real amount can pose as an equilibrium that no nearby
    routing attains, because cost jumps where a road must congest. ``volume_slack``
    (veh/s) is the shortfall allowed when counting autonomous users on
    quicker roads; grid volumes are exact, so it only absorbs round-off.
    """

    step: float = 0.005
    tolerance: float = 0.01
    capacity_slack: float = 1e-9
    volume_slack: float = 1e-9
    node_cap: int = 10**8

    def __post_init__(self):
        if not self.step > 0 or not self.tolerance > 0:
            raise ValueError("grid step and tolerance must be positive")

    @property
    def slack(self) -> float:
        return self.capacity_slack


def resolution(net: Network, grid: GridSpec, best_cost: float, swing_cost: float = 0.0) -> float:
    """Cost uncertainty of a grid optimum.

    Latencies agree only up to the relative slack, a congested road's
    latency is known only up to its one-step swing (``swing_cost`` sums
    flow times swing over the roads of the argmin), and a road filled to a
    capacity line off the grid loses up to one step of flow per type to a
    slower road.
    """
    a = net.free_flow_latencies
    return (grid.tolerance * best_cost + swing_cost
            + 2 * net.n * grid.step * float(a.max() - a.min()))


@dataclass
class OracleResult:
    cost: float
    routing: Optional[Routing]
    evaluated: int = 0
    candidates: int = field(default=0, repr=False)
    latencies: Optional[np.ndarray] = field(default=None, repr=False)
    swing_cost: float = 0.0  # sum of flow times latency swing on the argmin


def _splits(total, n, step):
    """All ways to write ``total`` as n nonnegative parts on the step grid.

    When ``total`` is not a multiple of ``step`` the remainder is added to
    each road in turn, so every road can carry the whole demand.
    """
    k = int(np.floor(total / step + 1e-9))
    rem = total - k * step
    heads = [h for h in itertools.product(range(k + 1), repeat=n - 1) if sum(h) <= k]
    base = np.array([list(h) + [k - sum(h)] for h in heads], dtype=float) * step
    if rem <= 1e-12:
        return base
    out = []
    for j in range(n):
        shifted = base.copy()
        shifted[:, j] += rem
        out.append(shifted)
    return np.unique(np.vstack(out), axis=0)


def _road_latency_grid(road, x, y, congested, slack):
    """Vectorized two-regime latency and its sensitivity to each flow.

    NaN marks infeasible or undefined points. On the congested branch
    ``latency = a + k (v - usage) / z`` with ``k = d rho_max / v``, which
    falls as either flow grows; the returned slopes are the magnitudes of
    that fall per veh/s of human and of autonomous flow.
    """
    z = x + y
    usage = road.human_spacing * x + road.auto_spacing * y
    a = road.free_flow_latency
    v = road.free_flow_speed
    with np.errstate(divide="ignore", invalid="ignore"):
        feasible = (z <= 0) | (z <= v * z / usage + slack)
        if not congested:
            lat = np.full(z.shape, a)
            gx = gy = np.zeros(z.shape)
        else:
            k = road.length * road.max_density / v
            spare = v - usage
            lat = np.maximum(a + k * spare / z, a)
            spare = np.maximum(spare, 0.0)
            gx = k * (road.human_spacing * z + spare) / z**2
            gy = k * (road.auto_spacing * z + spare) / z**2
            feasible &= z > 0
    keep = lambda arr: np.where(feasible, arr, 0.0)
    return np.where(feasible, lat, np.nan), keep(gx), keep(gy)


def _bands(lat, gx, gy, xs, ys, a, step):
    """Latency range reachable by moving at most one step of each type.

    Flow of a type may move onto a road only from another road carrying
    that type, and off a road only if it carries some and another road
    carries it too; demand stays conserved and no type changes support.
    """
    has_x, has_y = xs > 1e-12, ys > 1e-12
    other_x = has_x.sum(axis=-1, keepdims=True) - has_x > 0
    other_y = has_y.sum(axis=-1, keepdims=True) - has_y > 0
    down = step * (gx * other_x + gy * other_y)
    up = gx * np.minimum(step, xs) * (other_x & has_x) + gy * np.minimum(step, ys) * (other_y & has_y)
    lo = np.maximum(a, lat - down)
    hi = lat + up
    return lo, hi, np.maximum(lat - lo, up)


def _phi_vec(profile, ratio):
    kappas = np.array(profile.kappas) * (1 + TIE_RTOL)
    phis = np.concatenate([[0.0], [p for _, p in profile.breakpoints]])
    return phis[np.searchsorted(kappas, ratio, side="left")]


def _pick_latencies(lo, hi, used, human, tol, altruistic, high=False):
    """Latencies inside each road's band that could form an equilibrium.

    Used roads ridden by humans (all used roads without a profile) share a
    common value: the smallest one their bands allow, or with ``high`` the
    largest one every used band allows, which eases the altruism test.
    Other used roads sit at the bottom of their band but not below the
    human latency. Returns ``(lat, ok)``.
    """
    shared = human if altruistic else used
    has = shared.any(axis=-1)
    common = np.where(shared, lo, -np.inf).max(axis=-1)
    top = np.where(shared, hi, np.inf).min(axis=-1)
    ok = ~has | (common <= top * (1 + tol))
    if high:
        common = np.maximum(common, np.where(used, hi, np.inf).min(axis=-1))
    floor = np.where(has, common, -np.inf)[..., None]
    lat = np.where(shared, floor, np.maximum(lo, floor))
    ok &= ~(used & (lat > hi * (1 + tol))).any(axis=-1)
    return np.where(used, lat, np.inf), ok


def brute_force_best(net: Network, dem: Demand, profile: Optional[AltruismProfile] = None,
                     grid: GridSpec = GridSpec()) -> OracleResult:
    """Cheapest grid routing that passes the Nash (or altruistic Nash) test.

    A congested road's latency can move a lot over one grid step, so each
    grid point gives every congested road the band of latencies reachable
    by shifting at most one step of flow (see :func:`_bands`). The point is
    judged at band latencies that could make it an equilibrium, and its
    cost uses those latencies.
    Returns ``cost=inf`` and ``routing=None`` when no grid point qualifies.
    """
    n = net.n
    if n > MAX_ROADS:
        raise DomainError(f"brute force supports at most {MAX_ROADS} roads, got {n}")
    step, tol = grid.step, grid.tolerance
    X = _splits(dem.human, n, step)
    Y = _splits(dem.auto, n, step)
    patterns = list(itertools.product((False, True), repeat=n))
    nodes = len(X) * len(Y) * len(patterns)
    if nodes > grid.node_cap:
        raise BudgetExceeded(f"{nodes} grid routings exceed the node cap {grid.node_cap}")

    a = net.free_flow_latencies
    volume_slack = grid.volume_slack * max(1.0, dem.auto)
    xg = X[:, None, :]
    yg = Y[None, :, :]
    shape = (len(X), len(Y))
    z = xg + yg
    used = z > 1e-12
    human = np.broadcast_to(xg > 1e-12, z.shape)
    auto = np.broadcast_to(yg, z.shape)
    tables = [[_road_latency_grid(road, np.broadcast_to(xg[..., i], shape),
                                  np.broadcast_to(yg[..., i], shape), c, grid.slack)
               for c in (False, True)] for i, road in enumerate(net.roads)]
    xs = np.broadcast_to(xg, z.shape)
    found = []
    for pattern in patterns:
        lat = np.empty(z.shape)
        gx = np.empty(z.shape)
        gy = np.empty(z.shape)
        ok = np.ones(shape, dtype=bool)
        for i in range(n):
            li, gxi, gyi = tables[i][pattern[i]]
            if pattern[i]:
                ok &= used[..., i]
            bad = np.isnan(li)
            ok &= ~bad
            lat[..., i] = np.where(bad, a[i], li)
            gx[..., i] = gxi
            gy[..., i] = gyi
        if not ok.any():
            continue
        lo, hi, swing = _bands(lat, gx, gy, xs, auto, a, step)
        for high in (False, True) if profile is not None else (False,):
            pick, fits = _pick_latencies(lo, hi, used, human, tol, profile is not None, high)
            good = ok & fits
            any_used = used.any(axis=2)
            ell0 = np.where(any_used, pick.min(axis=2), a[0])
            # unused roads may not be quicker than the equilibrium latency
            good &= ~(~used & (a < ell0[..., None] * (1 - tol))).any(axis=2)
            if profile is not None:
                for i in range(n):
                    ratio = np.where(used[..., i] & good, pick[..., i] / ell0 / (1 + tol), 1.0)
                    need = _phi_vec(profile, ratio) * dem.auto
                    quicker = np.where(pick < pick[..., i:i + 1] * (1 - tol), auto, 0.0).sum(axis=2)
                    good &= ~used[..., i] | (quicker >= need - volume_slack)
            total = (z * np.where(used, pick, 0.0)).sum(axis=2)
            spread = (z * np.where(used, swing, 0.0)).sum(axis=2)
            ii, jj = np.nonzero(good)
            for p, q in zip(ii, jj):
                found.append((total[p, q], p, q, pattern, np.where(used[p, q], pick[p, q], a),
                              spread[p, q]))

    found.sort(key=lambda t: (t[0], t[1], t[2]))
    for total, p, q, pattern, lat, spread in found:
        r = Routing(X[p], Y[q], np.array(pattern))
        if profile is None:
            verdict = is_nash(net, r, dem, tol=tol, slack=grid.slack, latencies=lat)
        else:
            verdict = is_altruistic_equilibrium(net, r, dem, profile, tol=tol, slack=grid.slack,
                                                volume_slack=volume_slack, latencies=lat)
        if verdict:
            return OracleResult(float(total), r, nodes, len(found), lat, float(spread))
    return OracleResult(float("inf"), None, nodes, len(found))
