"""Best, robust and altruistic equilibria on parallel networks.

Every search here reduces to small LPs over the flows on the first ``m``
roads (variables ``x_1..x_m, y_1..y_m``). A congested road held at a target
latency contributes one affine equality; a free-flow road contributes the
linear capacity constraint ``(h+L)x + (h_a+L)y <= v``.

Road indices in the public API (``m_eq``, ``m_all``) are 1-based, matching
how roads are numbered in tables and plots.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model
from .errors import DomainError, InfeasibleDemand
from .linprog import linprog
from .network import (AltruismProfile, Demand, EquilibriumInfo, Network, Routing,
                      cost, phi_eval, robustness)

LAT_RTOL = 1e-9
VOL_TOL = 1e-9


@dataclass
class SolverResult:
    routing: Routing
    info: EquilibriumInfo
    cost: float
    avg_latency: float
    robustness: Optional[float] = None
    mode: str = ""


def _result(net, dem, routing, info, mode, with_robustness):
    c = cost(net, routing)
    avg = c / dem.total if dem.total > 0 else net.a(1)
    beta = None
    if with_robustness and dem.total > 0:
        beta = robustness(net, routing, dem, info)
    return SolverResult(routing, info, c, avg, beta, mode)


def _road_rows(net, m, ell0, last_free):
    """Constraint rows for roads ``1..m`` all at latency ``ell0``.

    Returns ``(A_eq, b_eq, A_ub, b_ub)`` over the ``2m`` flow variables.
    """
    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for i in range(m):
        road = net.roads[i]
        row = np.zeros(2 * m)
        if i == m - 1 and last_free:
            row[i], row[m + i] = road.human_spacing, road.auto_spacing
            A_ub.append(row)
            b_ub.append(road.free_flow_speed)
        else:
            cx, cy, c0 = model.congested_constraint_coeffs(road, ell0)
            row[i], row[m + i] = cx / -c0, cy / -c0
            A_eq.append(row)
            b_eq.append(1.0)
    return A_eq, b_eq, A_ub, b_ub


def _demand_rows(m, dem, auto_equal=True):
    hx = np.zeros(2 * m)
    hx[:m] = 1.0
    hy = np.zeros(2 * m)
    hy[m:] = 1.0
    eq = [(hx, dem.human)]
    ub = []
    if auto_equal:
        eq.append((hy, dem.auto))
    else:
        ub.append((hy, dem.auto))
    return eq, ub


def _solve(c, A_eq, b_eq, A_ub, b_ub):
    res = linprog(c,
                  A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None)
    return res.x if res.optimal else None


def _pad(net, m, sol, congested):
    x = np.zeros(net.n)
    y = np.zeros(net.n)
    s = np.zeros(net.n, dtype=bool)
    x[:m] = np.maximum(sol[:m], 0.0)
    y[:m] = np.maximum(sol[m:], 0.0)
    s[:m] = congested
    # a congested flag needs positive flow; LP round-off can leave exact zeros
    s &= (x + y) > 0
    return x, y, s


def _equilibrium_lp(net, dem, m_eq, objective):
    if not 1 <= m_eq <= net.n:
        raise DomainError(f"m_eq must lie in 1..{net.n}, got {m_eq}")
    A_eq, b_eq, A_ub, b_ub = _road_rows(net, m_eq, net.a(m_eq), last_free=True)
    eq, _ = _demand_rows(m_eq, dem)
    for row, rhs in eq:
        A_eq.append(row)
        b_eq.append(rhs)
    sol = _solve(objective(m_eq), A_eq, b_eq, A_ub, b_ub)
    if sol is None:
        return None
    congested = np.arange(m_eq) < m_eq - 1
    return Routing(*_pad(net, m_eq, sol, congested))


def ne_feasible(net: Network, dem: Demand, m_eq: int) -> Optional[Routing]:
    """A Nash routing whose longest equilibrium road ``m_eq`` is in free-flow, or None."""
    return _equilibrium_lp(net, dem, m_eq, lambda m: np.zeros(2 * m))


def check_capacity(net: Network, dem: Demand):
    """Raise InfeasibleDemand unless every road at capacity could carry the demand.

    Each road may take its own human/autonomous mix, so this is the exact
    free-flow capacity region of the network rather than a same-mix bound.
    """
    n = net.n
    A_ub, b_ub = [], []
    for i, road in enumerate(net.roads):
        row = np.zeros(2 * n)
        row[i], row[n + i] = road.human_spacing, road.auto_spacing
        A_ub.append(row)
        b_ub.append(road.free_flow_speed)
    eq, _ = _demand_rows(n, dem)
    sol = _solve(np.zeros(2 * n), [r for r, _ in eq], [b for _, b in eq], A_ub, b_ub)
    if sol is None:
        raise InfeasibleDemand(
            f"demand ({dem.human}, {dem.auto}) exceeds the network's total capacity")


def _bne_search(net, dem):
    check_capacity(net, dem)
    for m in range(1, net.n + 1):
        if ne_feasible(net, dem, m) is not None:
            return m
    raise InfeasibleDemand(
        f"no Nash equilibrium carries demand ({dem.human}, {dem.auto})")


def solve_bne(net: Network, dem: Demand) -> SolverResult:
    """Best-case Nash equilibrium: smallest free-flow equilibrium road with a feasible routing."""
    m = _bne_search(net, dem)
    routing = ne_feasible(net, dem, m)
    info = EquilibriumInfo(m, m, net.a(m))
    return _result(net, dem, routing, info, "bne", with_robustness=True)


def solve_rbne(net: Network, dem: Demand) -> SolverResult:
    """Among best-case Nash equilibria, the one with the most spare capacity on the free-flow road.

    Robustness is affine in the free-flow road's flows, so maximizing it
    amounts to minimizing that road's capacity usage.
    """
    m = _bne_search(net, dem)

    def objective(m):
        c = np.zeros(2 * m)
        road = net.roads[m - 1]
        c[m - 1], c[2 * m - 1] = -road.human_spacing, -road.auto_spacing
        return c

    routing = _equilibrium_lp(net, dem, m, objective)
    info = EquilibriumInfo(m, m, net.a(m))
    return _result(net, dem, routing, info, "rbne", with_robustness=True)


def max_autonomy_on_equilibrium_roads(net: Network, dem: Demand, m_eq: int, ell0: float,
                                      congested: Optional[bool] = None):
    """Fit all human flow and as much autonomous flow as possible on roads ``1..m_eq`` at ``ell0``.

    Roads before ``m_eq`` are congested at ``ell0``. Road ``m_eq`` is in
    free-flow when ``ell0`` equals its free-flow latency (unless
    ``congested`` forces the congested branch), and congested otherwise.

    Returns ``(routing, y_total)`` with zero flow beyond ``m_eq``, or None if
    the human demand cannot be placed.
    """
    if not 1 <= m_eq <= net.n:
        raise DomainError(f"m_eq must lie in 1..{net.n}, got {m_eq}")
    a_m = net.a(m_eq)
    upper = net.a(m_eq + 1) if m_eq < net.n else np.inf
    if ell0 < a_m * (1 - LAT_RTOL) or ell0 >= upper * (1 - LAT_RTOL):
        raise DomainError(
            f"ell0={ell0:.6g} outside [{a_m:.6g}, {upper:.6g}) for m_eq={m_eq}")
    at_free = abs(ell0 - a_m) <= LAT_RTOL * a_m
    if congested is None:
        congested = not at_free
    if not congested and not at_free:
        raise DomainError("road m_eq can only be in free-flow at its free-flow latency")
    ell0 = a_m if at_free else ell0
    A_eq, b_eq, A_ub, b_ub = _road_rows(net, m_eq, ell0, last_free=not congested)
    eq, ub = _demand_rows(m_eq, dem, auto_equal=False)
    for row, rhs in eq:
        A_eq.append(row)
        b_eq.append(rhs)
    for row, rhs in ub:
        A_ub.append(row)
        b_ub.append(rhs)
    c = np.zeros(2 * m_eq)
    c[m_eq:] = 1.0
    sol = _solve(c, A_eq, b_eq, A_ub, b_ub)
    if sol is None:
        return None
    flags = np.arange(m_eq) < m_eq - 1
    flags[-1] = congested
    routing = Routing(*_pad(net, m_eq, sol, flags))
    return routing, float(routing.y.sum())


def min_free_flow_roads(net: Network, m_eq: int, remaining_auto: float):
    """Pack leftover autonomous flow onto roads after ``m_eq`` at pure-autonomous capacity.

    Returns ``(m_all, fill)`` where ``fill`` holds the autonomous flow per
    road (length ``n``) and ``m_all`` is the last road that needed filling.
    """
    if remaining_auto < -VOL_TOL:
        raise DomainError("remaining autonomous flow must be nonnegative")
    fill = np.zeros(net.n)
    left = max(remaining_auto, 0.0)
    if left <= VOL_TOL:
        return m_eq, fill
    caps = net.pure_auto_capacity()
    for j in range(m_eq, net.n):
        take = min(caps[j], left)
        fill[j] = take
        left -= take
        if left <= VOL_TOL:
            return j + 1, fill
    raise InfeasibleDemand(
        f"{remaining_auto:.6g} veh/s of autonomous flow does not fit after road {m_eq}")


def candidate_latencies(net: Network, m_eq: int, profile: AltruismProfile):
    """Equilibrium latencies worth trying for a given longest equilibrium road.

    Between consecutive values the feasible set only shrinks as latency
    grows, so the minimum-cost equilibrium sits at ``a_m`` or at a latency
    where some slower road ``i`` just becomes acceptable, ``a_i / kappa``.
    """
    a_m = net.a(m_eq)
    upper = net.a(m_eq + 1) if m_eq < net.n else np.inf
    out = [a_m]
    for i in range(m_eq + 1, net.n + 1):
        for kappa in profile.kappas:
            ell = net.a(i) / kappa
            if a_m * (1 + LAT_RTOL) < ell < upper * (1 - LAT_RTOL):
                out.append(ell)
    out.sort()
    dedup = [out[0]]
    for ell in out[1:]:
        if ell - dedup[-1] > LAT_RTOL * ell:
            dedup.append(ell)
    return dedup


def _altruism_ok(net, dem, profile, m_eq, ell0, y_eq, fill):
    quicker = y_eq
    for j in range(m_eq, net.n):
        if fill[j] <= 0:
            continue
        needed = phi_eval(profile, net.free_flow_latencies[j] / ell0) * dem.auto
        if quicker < needed - VOL_TOL * max(1.0, dem.auto):
            return False
        quicker += fill[j]
    return True


def solve_bane(net: Network, dem: Demand, profile: AltruismProfile,
               m_eq: Optional[int] = None) -> SolverResult:
    """Best-case altruistic Nash equilibrium.

    Enumerates every longest equilibrium road and every candidate latency
    for it, fits humans and as much autonomous flow as possible on the
    equilibrium roads, packs the rest onto the next free-flow roads, and
    keeps the cheapest combination that respects the altruism profile.
    Passing ``m_eq`` restricts the search to that longest equilibrium road.
    """
    check_capacity(net, dem)
    if m_eq is not None and not 1 <= m_eq <= net.n:
        raise DomainError(f"m_eq must lie in 1..{net.n}, got {m_eq}")
    best = None
    for m in range(1, net.n + 1) if m_eq is None else (m_eq,):
        for ell0 in candidate_latencies(net, m, profile):
            regimes = (False, True) if ell0 == net.a(m) else (True,)
            for congested in regimes:
                part = max_autonomy_on_equilibrium_roads(net, dem, m, ell0, congested)
                if part is None:
                    continue
                routing, y_eq = part
                try:
                    m_all, fill = min_free_flow_roads(net, m, dem.auto - y_eq)
                except InfeasibleDemand:
                    continue
                if not _altruism_ok(net, dem, profile, m, ell0, y_eq, fill):
                    continue
                total = ell0 * routing.z.sum() + float(np.dot(net.free_flow_latencies, fill))
                if best is None or total < best[0] * (1 - 1e-12):
                    best = (total, m, m_all, ell0, routing, fill)
    if best is None:
        raise InfeasibleDemand(
            f"no altruistic equilibrium carries demand ({dem.human}, {dem.auto})")
    _, m, m_all, ell0, routing, fill = best
    full = Routing(routing.x, routing.y + fill, routing.s)
    info = EquilibriumInfo(m, max(m, m_all), float(ell0))
    return _result(net, dem, full, info, "bane", with_robustness=False)


def solve_ne_at(net: Network, dem: Demand, m_all: int, ell0: float) -> Optional[SolverResult]:
    """A Nash routing using exactly roads ``1..m_all`` at common latency ``ell0``, or None.

    Roads with free-flow latency below ``ell0`` are congested; road
    ``m_all`` is in free-flow only when ``ell0`` equals its free-flow
    latency. The family is a polytope, so the vertex with the most
    autonomous flow on road ``m_all`` is returned.
    """
    if not 1 <= m_all <= net.n:
        raise DomainError(f"m_all must lie in 1..{net.n}, got {m_all}")
    a_m = net.a(m_all)
    if ell0 < a_m * (1 - LAT_RTOL):
        return None
    at_free = abs(ell0 - a_m) <= LAT_RTOL * a_m
    A_eq, b_eq, A_ub, b_ub = _road_rows(net, m_all, a_m if at_free else ell0, last_free=at_free)
    eq, _ = _demand_rows(m_all, dem)
    for row, rhs in eq:
        A_eq.append(row)
        b_eq.append(rhs)
    c = np.zeros(2 * m_all)
    c[-1] = 1.0
    sol = _solve(c, A_eq, b_eq, A_ub, b_ub)
    if sol is None:
        return None
    flags = np.ones(m_all, dtype=bool)
    flags[-1] = not at_free
    routing = Routing(*_pad(net, m_all, sol, flags))
    info = EquilibriumInfo(m_all, m_all, a_m if at_free else float(ell0))
    return _result(net, dem, routing, info, "ne", with_robustness=True)


def _sweep_cell(args):
    net, xbar, ybar, profile = args
    try:
        return solve_bane(net, Demand(xbar, ybar), profile).avg_latency
    except InfeasibleDemand:
        return np.nan


def sweep(net: Network, xs, ys, profile: AltruismProfile, workers: Optional[int] = None):
    """Average BANE latency over a demand grid.

    Returns an array of shape ``(len(xs), len(ys))``; infeasible cells are
    NaN. ``workers`` defaults to the ``TRAFSEED_THREADS`` environment
    variable; 0 or 1 evaluates cells sequentially.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if workers is None:
        workers = int(os.environ.get("TRAFSEED_THREADS", "0") or 0)
    cells = [(net, float(x), float(y), profile) for x in xs for y in ys]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_sweep_cell, cells, chunksize=16))
    else:
        values = [_sweep_cell(c) for c in cells]
    return np.array(values, dtype=float).reshape(len(xs), len(ys))
