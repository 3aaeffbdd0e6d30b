"""Parallel networks, routings, and equilibrium membership tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import model
from .errors import ConservationError, DomainError
from .model import FlowPair, Road

# relative tie tolerance on free-flow latencies
TIE_RTOL = 1e-9


class Network:
    """Parallel roads ordered by strictly increasing free-flow latency.

    Roads are sorted on construction. Two roads whose free-flow latencies
    agree within ``TIE_RTOL`` are rejected, since the equilibrium search
    relies on a strict ordering.
    """

    def __init__(self, roads: Sequence[Road]):
        roads = list(roads)
        if not roads:
            raise ValueError("a network needs at least one road")
        roads.sort(key=lambda r: r.free_flow_latency)
        lat = [r.free_flow_latency for r in roads]
        for i in range(1, len(lat)):
            if lat[i] - lat[i - 1] <= TIE_RTOL * lat[i]:
                raise ValueError(
                    f"roads {i} and {i + 1} share free-flow latency {lat[i]:.9g} s; "
                    "free-flow latencies must be distinct")
        self.roads = tuple(roads)
        self.free_flow_latencies = np.array(lat)

    def __len__(self):
        return len(self.roads)

    def __iter__(self):
        return iter(self.roads)

    def __getitem__(self, i):
        return self.roads[i]

    def __repr__(self):
        return f"Network({list(self.roads)!r})"

    @property
    def n(self) -> int:
        return len(self.roads)

    def a(self, road_number: int) -> float:
        """Free-flow latency of road ``road_number`` (1-based, like the tables)."""
        return float(self.free_flow_latencies[road_number - 1])

    def pure_auto_capacity(self) -> np.ndarray:
        return np.array([model.max_flow(r, (0.0, 1.0)) for r in self.roads])


@dataclass(frozen=True)
class Demand:
    human: float
    auto: float

    def __post_init__(self):
        if self.human < 0 or self.auto < 0:
            raise ValueError(f"demand must be nonnegative, got ({self.human}, {self.auto})")

    @property
    def total(self) -> float:
        return self.human + self.auto


@dataclass(frozen=True, eq=False)
class Routing:
    """Per-road human flow ``x``, autonomous flow ``y`` and congestion flags ``s``."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        s = np.asarray(self.s, dtype=bool)
        if not (x.shape == y.shape == s.shape) or x.ndim != 1:
            raise ValueError("x, y and s must be 1-d arrays of equal length")
        if (x < -model.FLOW_TOL).any() or (y < -model.FLOW_TOL).any():
            raise ValueError("flows must be nonnegative")
        # LP round-off leaves tiny negatives
        x = np.where(x < 0, 0.0, x)
        y = np.where(y < 0, 0.0, y)
        if (s & (x + y <= 0)).any():
            raise ValueError("a congested road must carry positive flow")
        for name, arr in (("x", x), ("y", y), ("s", s)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n, dtype=bool))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def z(self) -> np.ndarray:
        return self.x + self.y

    def flow(self, i) -> FlowPair:
        """Flow pair on road ``i`` (0-based)."""
        return FlowPair(float(self.x[i]), float(self.y[i]))

    def __repr__(self):
        rows = ", ".join(
            f"({x:.4g}, {y:.4g}{', C' if s else ''})" for x, y, s in zip(self.x, self.y, self.s))
        return f"Routing[{rows}]"


@dataclass(frozen=True)
class EquilibriumInfo:
    """Longest equilibrium road, longest used road (both 1-based) and the equilibrium latency."""

    m_eq: int
    m_all: int
    ell0: float


@dataclass(frozen=True)
class Verdict:
    """Outcome of a membership test; truthy iff the routing is a member."""

    ok: bool
    info: Optional[EquilibriumInfo] = None
    reason: str = ""
    latencies: Optional[np.ndarray] = field(default=None, repr=False)

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class AltruismProfile:
    """Piecewise-constant rejection fraction over delay multiples.

    ``breakpoints`` is a sequence of ``(kappa, phi_after)``: a fraction
    ``phi_after`` of autonomous users rejects any delay strictly above
    ``kappa`` times the minimum available latency. Acceptance at exactly
    ``kappa`` is inclusive.
    """

    breakpoints: tuple

    def __post_init__(self):
        bps = tuple((float(k), float(p)) for k, p in self.breakpoints)
        if not bps:
            raise ValueError("an altruism profile needs at least one breakpoint")
        kappas = [k for k, _ in bps]
        phis = [p for _, p in bps]
        if any(k < 1 for k in kappas):
            raise ValueError("altruism levels kappa must be >= 1")
        if any(b <= a for a, b in zip(kappas, kappas[1:])):
            raise ValueError("altruism levels must be strictly increasing")
        if any(p < 0 or p > 1 for p in phis):
            raise ValueError("phi values must lie in [0, 1]")
        if any(b < a for a, b in zip(phis, phis[1:])):
            raise ValueError("phi must be nondecreasing")
        if phis[-1] != 1.0:
            raise ValueError("the last breakpoint must reach phi = 1")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def uniform(cls, kappa0: float) -> "AltruismProfile":
        return cls(((kappa0, 1.0),))

    @classmethod
    def selfish(cls) -> "AltruismProfile":
        return cls.uniform(1.0)

    @property
    def kappas(self):
        return [k for k, _ in self.breakpoints]

    def __len__(self):
        return len(self.breakpoints)

    def __call__(self, kappa: float) -> float:
        return phi_eval(self, kappa)


def phi_eval(profile: AltruismProfile, kappa: float) -> float:
    phi = 0.0
    for k, p in profile.breakpoints:
        if kappa > k * (1 + TIE_RTOL):
            phi = p
        else:
            break
    return phi


def _check_conservation(r: Routing, dem: Demand, tol):
    if abs(r.x.sum() - dem.human) > tol * max(1.0, dem.human) or \
            abs(r.y.sum() - dem.auto) > tol * max(1.0, dem.auto):
        raise ConservationError(
            f"routed ({r.x.sum():.9g}, {r.y.sum():.9g}) != demand ({dem.human}, {dem.auto})")


def road_latencies(net: Network, r: Routing, slack=model.FLOW_TOL) -> np.ndarray:
    """Latency of every road; empty roads report their free-flow latency."""
    if r.n != net.n:
        raise ValueError(f"routing has {r.n} roads, network has {net.n}")
    out = np.empty(net.n)
    for i, road in enumerate(net.roads):
        f = r.flow(i)
        if f.total <= 0:
            out[i] = road.free_flow_latency
        else:
            out[i] = model.latency(road, f, bool(r.s[i]), slack=slack)
    return out


def cost(net: Network, r: Routing, slack=model.FLOW_TOL) -> float:
    """Total flow-weighted latency ``sum z_i * latency_i`` (vehicles)."""
    lat = road_latencies(net, r, slack=slack)
    return float(np.dot(r.z, lat))


def _latencies_or_reason(net, r, slack):
    try:
        return road_latencies(net, r, slack=slack), ""
    except DomainError as exc:
        return None, f"infeasible: {exc}"


def _given_or_computed(net, r, slack, latencies):
    if latencies is None:
        return _latencies_or_reason(net, r, slack)
    lat = np.asarray(latencies, dtype=float)
    if lat.shape != (net.n,):
        raise ValueError(f"expected {net.n} latencies, got shape {lat.shape}")
    return lat, ""


def _info(lat, used, ell0, tol):
    n = len(lat)
    at_eq = [i for i in range(n) if abs(lat[i] - ell0) <= tol * ell0]
    m_eq = max(at_eq) + 1
    m_all = max(m_eq, (max(np.flatnonzero(used)) + 1) if used.any() else 1)
    return EquilibriumInfo(m_eq=int(m_eq), m_all=int(m_all), ell0=float(ell0))


def is_nash(net: Network, r: Routing, dem: Demand, tol=1e-6, slack=None,
            latencies=None) -> Verdict:
    """Check that every used road shares one latency and no empty road is quicker.

    ``tol`` is a relative slack on latency comparisons and an absolute slack
    (scaled by demand when it exceeds one) on flow conservation. ``slack`` is
    the absolute flow (veh/s) a road may carry above capacity; it defaults
    to ``tol``. ``latencies`` replaces the per-road latencies computed from
    the routing, for callers that judge a routing at perturbed values.
    """
    _check_conservation(r, dem, tol)
    lat, reason = _given_or_computed(net, r, tol if slack is None else slack, latencies)
    if lat is None:
        return Verdict(False, reason=reason)
    used = r.z > model.FLOW_TOL
    if not used.any():
        ell0 = net.a(1)
        return Verdict(True, EquilibriumInfo(1, 1, ell0), latencies=lat)
    ell0 = lat[used].min()
    if lat[used].max() > ell0 * (1 + tol):
        return Verdict(False, reason="unequal latencies on used roads", latencies=lat)
    empty = ~used
    if (net.free_flow_latencies[empty] < ell0 * (1 - tol)).any():
        return Verdict(False, reason="an unused road is quicker", latencies=lat)
    info = _info(lat, used, ell0, tol)
    info = EquilibriumInfo(info.m_all, info.m_all, info.ell0)
    return Verdict(True, info, latencies=lat)


def is_altruistic_equilibrium(net: Network, r: Routing, dem: Demand,
                              profile: AltruismProfile, tol=1e-6, slack=None,
                              volume_slack=None, latencies=None) -> Verdict:
    """Membership test for an altruistic Nash equilibrium.

    Humans are selfish, so every road they use runs at the network-wide
    minimum latency ``ell0``. The ``phi(ell / ell0) * auto_demand``
    autonomous users who reject a delay ``ell`` must all travel on strictly
    quicker roads; checking this at each used road's latency is enough.
    Tolerances and ``latencies`` work as in :func:`is_nash`.
    ``volume_slack`` (veh/s) is the shortfall allowed in the count of
    autonomous users on quicker roads; it defaults to
    ``tol * max(1, auto_demand)``.
    """
    _check_conservation(r, dem, tol)
    lat, reason = _given_or_computed(net, r, tol if slack is None else slack, latencies)
    if lat is None:
        return Verdict(False, reason=reason)
    used = r.z > model.FLOW_TOL
    if not used.any():
        return Verdict(True, EquilibriumInfo(1, 1, net.a(1)), latencies=lat)
    ell0 = lat[used].min()
    human = r.x > model.FLOW_TOL
    if (lat[human] > ell0 * (1 + tol)).any():
        return Verdict(False, reason="human flow on a slower road", latencies=lat)
    if (net.free_flow_latencies[~used] < ell0 * (1 - tol)).any():
        return Verdict(False, reason="an unused road is quicker", latencies=lat)
    vol_tol = tol * max(1.0, dem.auto) if volume_slack is None else volume_slack
    for ell in np.unique(lat[used]):
        quicker = r.y[lat < ell * (1 - tol)].sum()
        needed = phi_eval(profile, ell / ell0 / (1 + tol)) * dem.auto
        if quicker < needed - vol_tol:
            return Verdict(False, reason="altruism-violated", latencies=lat)
    return Verdict(True, _info(lat, used, ell0, tol), latencies=lat)


def robustness(net: Network, r: Routing, dem: Demand, info: EquilibriumInfo) -> float:
    """Extra demand, as a multiple of the current mix, the free-flow equilibrium road absorbs."""
    if dem.total <= 0:
        raise DomainError("robustness is undefined at zero demand")
    i = info.m_eq - 1
    if r.s[i]:
        return 0.0
    road = net.roads[i]
    spare = road.free_flow_speed - model.capacity_usage(road, r.flow(i))
    gamma = spare / (road.human_spacing * dem.human + road.auto_spacing * dem.auto)
    return max(gamma, 0.0)
