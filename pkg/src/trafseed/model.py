"""Mixed-autonomy fundamental diagram and the two-regime road latency.

A road's critical density depends on the share of autonomous vehicles,
since those keep a shorter headway at nominal speed. Free-flow latency is
``length / free_flow_speed``; the congested branch follows the falling side
of the triangular fundamental diagram.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# absolute slack on flows (veh/s) and relative slack on latencies
FLOW_TOL = 1e-9
LATENCY_RTOL = 1e-7


@dataclass(frozen=True)
class Road:
    """One link of a parallel network.

    All lengths are in meters, speeds in m/s.
    """

    length: float
    free_flow_speed: float
    human_headway: float
    auto_headway: float
    vehicle_length: float = 5.0
    min_gap: float = 2.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"road length must be positive, got {self.length}")
        if not self.free_flow_speed > 0:
            raise ValueError(f"free-flow speed must be positive, got {self.free_flow_speed}")
        if not self.vehicle_length > 0:
            raise ValueError(f"vehicle length must be positive, got {self.vehicle_length}")
        if not self.min_gap >= 0:
            raise ValueError(f"min_gap must be nonnegative, got {self.min_gap}")
        if self.auto_headway > self.human_headway:
            raise ValueError("autonomous headway may not exceed human headway")
        if not self.human_headway > self.min_gap:
            # keeps rho_max strictly above the all-human rho_crit
            raise ValueError("human headway must exceed the jam gap min_gap")
        if self.auto_headway < self.min_gap:
            raise ValueError("autonomous headway may not be shorter than min_gap")

    @classmethod
    def from_reaction_times(cls, length, free_flow_speed, human_reaction=2.0,
                            auto_reaction=1.0, vehicle_length=5.0, min_gap=2.0):
        """Build a road whose headways follow ``max(min_gap, tau * v)`` at nominal speed."""
        return cls(
            length=length,
            free_flow_speed=free_flow_speed,
            human_headway=max(min_gap, human_reaction * free_flow_speed),
            auto_headway=max(min_gap, auto_reaction * free_flow_speed),
            vehicle_length=vehicle_length,
            min_gap=min_gap,
        )

    @property
    def free_flow_latency(self) -> float:
        return self.length / self.free_flow_speed

    @property
    def max_density(self) -> float:
        return 1.0 / (self.vehicle_length + self.min_gap)

    @property
    def human_spacing(self) -> float:
        """Rear-bumper to rear-bumper spacing of a human driver at nominal speed."""
        return self.human_headway + self.vehicle_length

    @property
    def auto_spacing(self) -> float:
        return self.auto_headway + self.vehicle_length


class FlowPair(NamedTuple):
    """Human and autonomous flow on one road, in vehicles per second."""

    x: float
    y: float

    @property
    def total(self) -> float:
        return self.x + self.y


def free_flow_latency(road: Road) -> float:
    return road.free_flow_latency


def autonomy_level(flow) -> float:
    """Fraction of ``flow`` that is autonomous; zero flow counts as all-human."""
    x, y = flow
    z = x + y
    if z <= 0:
        return 0.0
    return y / z


def critical_density(road: Road, flow) -> float:
    return critical_density_at(road, autonomy_level(flow))


def critical_density_at(road: Road, alpha: float) -> float:
    # written so that equal headways give a result independent of alpha
    headway = road.auto_headway + (1 - alpha) * (road.human_headway - road.auto_headway)
    return 1.0 / (headway + road.vehicle_length)


def max_flow(road: Road, flow) -> float:
    return road.free_flow_speed * critical_density(road, flow)


def capacity_usage(road: Road, flow) -> float:
    """Left side of the linear capacity test ``(h+L)x + (h_a+L)y <= v``.

    ``x + y <= max_flow`` is equivalent to this quantity being at most the
    free-flow speed, which keeps the constraint linear in the flows.
    """
    x, y = flow
    return road.human_spacing * x + road.auto_spacing * y


def latency(road: Road, flow, congested, slack=FLOW_TOL) -> float:
    """Latency in seconds of a road carrying ``flow`` in the given regime.

    ``slack`` is the absolute flow allowance above capacity before the input
    is rejected as infeasible.
    """
    x, y = flow
    z = x + y
    zmax = max_flow(road, flow)
    if z > zmax + slack:
        raise DomainError(f"flow {z:.6g} exceeds road capacity {zmax:.6g}")
    a = road.free_flow_latency
    if not congested:
        return a
    if z <= 0:
        raise DomainError("congested latency is unbounded at zero flow")
    rho_max = road.max_density
    rho_crit = critical_density(road, flow)
    ell = road.length * (rho_max / z + (rho_crit - rho_max) / zmax)
    # flows inside the capacity slack would dip just under the free-flow floor
    return max(ell, a)


def congested_constraint_coeffs(road: Road, target_latency: float):
    """Affine form ``cx*x + cy*y + c0 = 0`` of ``latency(road, (x, y), 1) == target``.

    On the congested branch ``latency = target`` rearranges to
    ``(target - a)(x + y) + (d*rho_max/v)((h+L)x + (h_a+L)y) - d*rho_max = 0``.
    """
    a = road.free_flow_latency
    if target_latency < a * (1 - LATENCY_RTOL):
        raise DomainError(
            f"target latency {target_latency:.6g} below free-flow latency {a:.6g}")
    excess = max(target_latency - a, 0.0)
    jam = road.length * road.max_density
    k = jam / road.free_flow_speed
    return (excess + k * road.human_spacing,
            excess + k * road.auto_spacing,
            -jam)


def fundamental_diagram(road: Road, alpha: float, n_points: int = 101):
    """Sample the triangular density-flow diagram at autonomy level ``alpha``.

    Returns ``(density, flow)`` arrays. The vertices ``(0, 0)``,
    ``(rho_crit, z_max)`` and ``(rho_max, 0)`` are always included.
    """
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if n_points < 3:
        raise DomainError("need at least 3 points")
    rho_c = critical_density_at(road, alpha)
    rho_m = road.max_density
    zmax = road.free_flow_speed * rho_c
    n_rise = max(2, int(round(n_points * rho_c / rho_m)))
    n_fall = max(2, n_points - n_rise + 1)
    rise = np.linspace(0.0, rho_c, n_rise)
    fall = np.linspace(rho_c, rho_m, n_fall)[1:]
    density = np.concatenate([rise, fall])
    span = rho_m - rho_c
    falling = zmax * (rho_m - fall) / span if span > 0 else np.zeros_like(fall)
    flow = np.concatenate([road.free_flow_speed * rise, falling])
    flow[len(rise) - 1] = zmax
    flow[-1] = 0.0
    return density, flow
