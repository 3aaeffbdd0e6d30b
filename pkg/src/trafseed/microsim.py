"""Single-lane ring-road simulation with the Krauss car-following rule.

Vehicles never overtake, so the leader of vehicle ``i`` is ``i + 1`` around
the ring. Updates are parallel: every speed is computed from the previous
state, then all positions advance. With ``noise_sigma = 0`` a platoon at
speed ``v`` settles at the gap ``min_gap + tau * v``.

A vehicle's reaction time is recovered from its road as
``headway / free_flow_speed``, which gives back the 2 s / 1 s defaults for
roads built with :meth:`Road.from_reaction_times`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model
from .errors import CollisionError, InversionError, PlacementError
from .model import Road
from .network import Network, Routing

HUMAN, AUTO = "human", "autonomous"


@dataclass
class Vehicle:
    kind: str
    position: float
    speed: float
    reaction_time: float


@dataclass(frozen=True)
class SimConfig:
    time_step: float = 0.5
    accel: float = 2.6
    decel: float = 4.5
    noise_sigma: float = 0.0
    warmup: float = 600.0
    measure: float = 3600.0
    seed: int = 0
    placement: str = "interleave"  # or "bernoulli"

    def __post_init__(self):
        if not self.time_step > 0:
            raise ValueError("time_step must be positive")
        if not (self.warmup > 0 and self.measure > 0):
            raise ValueError("warmup and measure must be positive")
        if not (self.accel > 0 and self.decel > 0):
            raise ValueError("accel and decel must be positive")
        if not 0 <= self.noise_sigma <= 1:
            raise ValueError("noise_sigma must lie in [0, 1]")
        if self.placement not in ("interleave", "bernoulli"):
            raise ValueError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class SimResult:
    flow: float        # detector crossings per second
    mean_speed: float  # space-mean speed, m/s
    latency: float     # road length / mean speed, s
    density: float     # vehicles per meter
    n_human: int = 0
    n_auto: int = 0
    min_gap: float = float("inf")  # smallest bumper-to-bumper gap seen

    def as_dict(self):
        return {"flow": self.flow, "mean_speed": self.mean_speed, "latency": self.latency,
                "density": self.density, "n_human": self.n_human, "n_auto": self.n_auto,
                "min_gap": self.min_gap}


def reaction_times(road: Road):
    """(human, autonomous) reaction times implied by the road's headways."""
    return road.human_headway / road.free_flow_speed, road.auto_headway / road.free_flow_speed


def vehicle_kinds(n_human, n_auto, placement="interleave", rng=None):
    """Order of vehicle types around the ring.

    Interleaving spreads autonomous vehicles as evenly as the counts allow;
    ``bernoulli`` shuffles the same counts with ``rng``.
    """
    n = n_human + n_auto
    if placement == "bernoulli":
        kinds = np.array([AUTO] * n_auto + [HUMAN] * n_human, dtype=object)
        rng.shuffle(kinds)
        return list(kinds)
    # vehicle i is autonomous when the running autonomous share crosses an integer
    idx = np.arange(1, n + 1)
    is_auto = np.floor(idx * n_auto / n) > np.floor((idx - 1) * n_auto / n) if n else idx > 0
    return [AUTO if a else HUMAN for a in is_auto]


def place_vehicles(road: Road, n_human: int, n_auto: int, cfg: SimConfig, rng=None):
    """Evenly spaced vehicles starting at the steady speed for their gap."""
    if n_human < 0 or n_auto < 0:
        raise PlacementError("vehicle counts must be nonnegative")
    n = n_human + n_auto
    ring = road.length
    if n * (road.vehicle_length + road.min_gap) > ring:
        raise PlacementError(
            f"{n} vehicles need {n * (road.vehicle_length + road.min_gap):.1f} m, ring is {ring:.1f} m")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    tau_h, tau_a = reaction_times(road)
    spacing = ring / n if n else ring
    gap = spacing - road.vehicle_length
    out = []
    for i, kind in enumerate(vehicle_kinds(n_human, n_auto, cfg.placement, rng)):
        tau = tau_a if kind == AUTO else tau_h
        v0 = min(road.free_flow_speed, max(0.0, (gap - road.min_gap) / tau))
        out.append(Vehicle(kind, i * spacing, v0, tau))
    return out


def krauss_speed(v, v_lead, gap, tau, v_max, cfg: SimConfig, min_gap, u=None):
    """One Krauss speed update (vectorized)."""
    v_safe = v_lead + (gap - min_gap - v_lead * tau) / ((v + v_lead) / (2 * cfg.decel) + tau)
    v_des = np.minimum(np.minimum(v_max, v + cfg.accel * cfg.time_step), v_safe)
    if u is not None and cfg.noise_sigma > 0:
        v_des = v_des - cfg.noise_sigma * cfg.accel * cfg.time_step * u
    return np.maximum(v_des, 0.0)


def simulate_ring(road: Road, n_human: int, n_auto: int, cfg: SimConfig = SimConfig(),
                  trace: Optional[str] = None) -> SimResult:
    """Simulate a ring of circumference ``road.length`` and measure steady state.

    Flow is the count at a loop detector at position 0 over the measurement
    window. ``trace`` is an optional CSV path receiving every vehicle at
    every step. Raises CollisionError if any gap turns negative.
    """
    rng = np.random.default_rng(cfg.seed)
    vehicles = place_vehicles(road, n_human, n_auto, cfg, rng)
    n = len(vehicles)
    ring = road.length
    if n == 0:
        return SimResult(0.0, road.free_flow_speed, road.free_flow_latency, 0.0)

    x = np.array([veh.position for veh in vehicles])  # unwrapped positions
    v = np.array([veh.speed for veh in vehicles])
    tau = np.array([veh.reaction_time for veh in vehicles])
    kinds = [veh.kind for veh in vehicles]
    L, dt, v_max = road.vehicle_length, cfg.time_step, road.free_flow_speed
    lead = np.roll(np.arange(n), -1)
    n_warm = int(round(cfg.warmup / dt))
    n_meas = int(round(cfg.measure / dt))

    writer = None
    fh = None
    if trace is not None:
        fh = open(trace, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["time_s", "vehicle_id", "kind", "position_m", "speed_mps"])

    smallest = np.inf
    speed_sum = 0.0
    x_start = None
    try:
        for step in range(n_warm + n_meas):
            if step == n_warm:
                x_start = x.copy()
            gap = x[lead] - x - L
            gap[-1] += ring
            u = rng.random(n) if cfg.noise_sigma > 0 else None
            v = krauss_speed(v, v[lead], gap, tau, v_max, cfg, road.min_gap, u)
            x = x + v * dt
            gap = x[lead] - x - L
            gap[-1] += ring
            g = gap.min()
            if g < -1e-9:
                i = int(gap.argmin())
                raise CollisionError(f"vehicle {i} hit its leader at t={(step + 1) * dt:.1f} s (gap {g:.3f} m)")
            smallest = min(smallest, g)
            if step >= n_warm:
                speed_sum += v.mean()
            if writer is not None:
                t = (step + 1) * dt
                for i in range(n):
                    writer.writerow([repr(t), i, kinds[i], repr(float(x[i] % ring)), repr(float(v[i]))])
    finally:
        if fh is not None:
            fh.close()

    crossings = np.floor(x / ring) - np.floor(x_start / ring)
    flow = float(crossings.sum()) / cfg.measure
    mean_speed = speed_sum / n_meas
    latency = road.length / mean_speed if mean_speed > 0 else float("inf")
    return SimResult(flow, float(mean_speed), float(latency), n / ring,
                     n_human, n_auto, float(smallest))


def counts_for(road: Road, density: float, alpha: float):
    """Integer (n_human, n_auto) closest to ``density`` at autonomy ``alpha``."""
    n = int(round(density * road.length))
    n_auto = int(round(alpha * n))
    return n - n_auto, n_auto


def fd_scan(road: Road, alpha: float, densities, cfg: SimConfig = SimConfig()):
    """Simulated ``(density, flow, latency)`` at each requested density."""
    out = []
    for rho in densities:
        nh, na = counts_for(road, rho, alpha)
        res = simulate_ring(road, nh, na, cfg)
        out.append((res.density, res.flow, res.latency))
    return out


def density_for_flow(road: Road, flow, congested: bool, slack=1e-6) -> float:
    """Density on the fundamental diagram that carries ``flow`` in the given regime."""
    z = flow[0] + flow[1]
    if z <= 0:
        if congested:
            raise InversionError("a congested road needs positive flow")
        return 0.0
    zmax = model.max_flow(road, flow)
    if z > zmax + slack:
        raise InversionError(f"flow {z:.6g} exceeds the peak {zmax:.6g} of the diagram")
    z = min(z, zmax)
    rho_crit = model.critical_density(road, flow)
    if not congested:
        return z / road.free_flow_speed
    rho_max = road.max_density
    return rho_max - (rho_max - rho_crit) * z / zmax


def simulate_routing(net: Network, routing: Routing, cfg: SimConfig = SimConfig()):
    """Simulate every used road at the density its flow implies.

    Returns ``(results, cost)`` where ``results[i]`` is None for empty roads
    and ``cost`` is the simulated ``sum z_i * latency_i``.
    """
    results = []
    total = 0.0
    for i, road in enumerate(net.roads):
        f = routing.flow(i)
        if f.total <= 0:
            results.append(None)
            continue
        rho = density_for_flow(road, f, bool(routing.s[i]))
        n = max(1, int(round(rho * road.length)))
        n_auto = int(round(model.autonomy_level(f) * n))
        res = simulate_ring(road, n - n_auto, n_auto, cfg)
        results.append(res)
        total += f.total * res.latency
    return results, total
