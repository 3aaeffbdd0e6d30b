"""JSON scenario files: roads, driver parameters, demand and altruism profile.

Example::

    {"roads": [{"length_m": 1256.64, "speed_limit_mps": 13.9}, ...],
     "human_reaction_s": 2.0, "auto_reaction_s": 1.0,
     "vehicle_length_m": 5.0, "min_gap_m": 2.0,
     "demand": {"human_vps": 0.3, "auto_vps": 0.3},
     "altruism": [{"kappa": 2.5, "phi_after": 1.0}]}

Headways are derived from reaction times as ``max(min_gap, tau * v)``.
``altruism`` may be omitted, which means selfish autonomous users.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from numbers import Real

from .errors import TrafficError
from .model import Road
from .network import AltruismProfile, Demand, Network


class ScenarioError(TrafficError, ValueError):
    """A scenario file that cannot be parsed into a network, demand and profile."""


@dataclass(frozen=True)
class Scenario:
    network: Network
    demand: Demand
    profile: AltruismProfile
    source: str = ""


def _number(obj, key, where, default=None):
    if key not in obj:
        if default is not None:
            return float(default)
        raise ScenarioError(f"{where}: missing field '{key}'")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, Real):
        raise ScenarioError(f"{where}.{key}: expected a number, got {val!r}")
    return float(val)


def parse_scenario(doc: dict, source: str = "<scenario>") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    roads_doc = doc.get("roads")
    if not isinstance(roads_doc, list) or not roads_doc:
        raise ScenarioError(f"{source}: 'roads' must be a nonempty list")
    tau_h = _number(doc, "human_reaction_s", source, 2.0)
    tau_a = _number(doc, "auto_reaction_s", source, 1.0)
    length = _number(doc, "vehicle_length_m", source, 5.0)
    gap = _number(doc, "min_gap_m", source, 2.0)
    roads = []
    for k, rd in enumerate(roads_doc):
        where = f"{source}: roads[{k}]"
        if not isinstance(rd, dict):
            raise ScenarioError(f"{where}: expected an object")
        try:
            roads.append(Road.from_reaction_times(
                _number(rd, "length_m", where), _number(rd, "speed_limit_mps", where),
                tau_h, tau_a, length, gap))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: {exc}") from None
    try:
        net = Network(roads)
    except ValueError as exc:
        raise ScenarioError(f"{source}: roads: {exc}") from None

    dem_doc = doc.get("demand")
    if not isinstance(dem_doc, dict):
        raise ScenarioError(f"{source}: missing object 'demand'")
    try:
        dem = Demand(_number(dem_doc, "human_vps", f"{source}: demand"),
                     _number(dem_doc, "auto_vps", f"{source}: demand"))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{source}: demand: {exc}") from None

    alt = doc.get("altruism")
    if alt is None:
        profile = AltruismProfile.selfish()
    else:
        if not isinstance(alt, list):
            raise ScenarioError(f"{source}: 'altruism' must be a list")
        bps = []
        for k, bp in enumerate(alt):
            where = f"{source}: altruism[{k}]"
            if not isinstance(bp, dict):
                raise ScenarioError(f"{where}: expected an object")
            bps.append((_number(bp, "kappa", where), _number(bp, "phi_after", where)))
        try:
            profile = AltruismProfile(tuple(bps))
        except ValueError as exc:
            raise ScenarioError(f"{source}: altruism: {exc}") from None
    return Scenario(net, dem, profile, source)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_scenario(doc, str(path))


def scenario_dict(net: Network, dem: Demand, profile: AltruismProfile,
                  human_reaction=2.0, auto_reaction=1.0) -> dict:
    """Inverse of :func:`parse_scenario` for roads built from reaction times."""
    r0 = net.roads[0]
    return {
        "roads": [{"length_m": r.length, "speed_limit_mps": r.free_flow_speed} for r in net.roads],
        "human_reaction_s": human_reaction,
        "auto_reaction_s": auto_reaction,
        "vehicle_length_m": r0.vehicle_length,
        "min_gap_m": r0.min_gap,
        "demand": {"human_vps": dem.human, "auto_vps": dem.auto},
        "altruism": [{"kappa": k, "phi_after": p} for k, p in profile.breakpoints],
    }
