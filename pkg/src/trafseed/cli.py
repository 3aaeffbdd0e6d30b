"""Command-line entry point: ``trafseed <command> ...``.

Exit codes: 0 success, 2 infeasible demand or routing, 3 unreadable input,
4 numerical failure. Diagnostics go to stderr; results go to ``--out`` or
stdout.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import model, solvers
from .errors import (BudgetExceeded, CollisionError, InfeasibleDemand, InversionError,
                     NumericalError, PlacementError)
from .microsim import SimConfig, simulate_routing
from .network import AltruismProfile, Routing, road_latencies
from .oracle import GridSpec, brute_force_best, resolution
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_INFEASIBLE, EXIT_PARSE, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as infeasible demand
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_range(text):
    """``LO:HI:STEP`` to an inclusive array of values."""
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError(f"range {text!r} is not LO:HI:STEP") from None
    if not step > 0 or hi < lo:
        raise UsageError(f"range {text!r} needs STEP > 0 and HI >= LO")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _open_out(out):
    return open(out, "w", newline="") if out else sys.stdout


def _routing_doc(net, routing, slack=model.FLOW_TOL):
    lat = road_latencies(net, routing, slack=slack)
    return [{"road": i + 1, "length_m": net.roads[i].length, "x": float(routing.x[i]),
             "y": float(routing.y[i]), "s": bool(routing.s[i]), "latency": float(lat[i])}
            for i in range(net.n)]


def _profile(args, sc):
    if getattr(args, "kappa", None) is not None:
        return AltruismProfile.uniform(args.kappa)
    return sc.profile


def cmd_solve(args):
    sc = load_scenario(args.scenario)
    net, dem = sc.network, sc.demand
    if args.mode == "ne":
        if args.m_all is None or args.ell0 is None:
            raise UsageError("solve --mode ne needs --m-all and --ell0")
        res = solvers.solve_ne_at(net, dem, args.m_all, args.ell0)
        if res is None:
            raise InfeasibleDemand(
                f"no Nash routing uses roads 1..{args.m_all} at latency {args.ell0}")
    elif args.mode == "bne":
        res = solvers.solve_bne(net, dem)
    elif args.mode == "rbne":
        res = solvers.solve_rbne(net, dem)
    else:
        res = solvers.solve_bane(net, dem, _profile(args, sc))
    _emit_json({
        "mode": args.mode,
        "m_eq": res.info.m_eq,
        "m_all": res.info.m_all,
        "ell0": res.info.ell0,
        "roads": _routing_doc(net, res.routing),
        "cost": res.cost,
        "avg_latency": res.avg_latency,
        "beta": res.robustness,
    }, args.out)
    return EXIT_OK


def cmd_sweep(args):
    sc = load_scenario(args.scenario)
    xs, ys = parse_range(args.xbar), parse_range(args.ybar)
    grid = solvers.sweep(sc.network, xs, ys, _profile(args, sc))
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["xbar", "ybar", "avg_latency", "status"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                val = grid[i, j]
                ok = np.isfinite(val)
                w.writerow([repr(float(x)), repr(float(y)), repr(float(val)) if ok else "nan",
                            "ok" if ok else "infeasible"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_fd(args):
    sc = load_scenario(args.scenario)
    if not 1 <= args.road <= sc.network.n:
        raise UsageError(f"--road must lie in 1..{sc.network.n}")
    road = sc.network.roads[args.road - 1]
    density, flow = model.fundamental_diagram(road, args.alpha, args.points)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["density_vpm", "flow_vps", "latency_s"])
        for rho, z in zip(density, flow):
            # travel time at the speed z / rho; the empty road runs at the limit
            if rho == 0:
                lat = road.free_flow_latency
            elif z == 0:
                lat = float("inf")
            else:
                lat = road.length * rho / z
            w.writerow([repr(float(rho)), repr(float(z)), repr(float(lat))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def load_routing(path, n):
    """Routing from a ``solve`` output (or any JSON with a ``roads`` list of x, y, s)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        rows = doc["roads"]
        x = [float(r["x"]) for r in rows]
        y = [float(r["y"]) for r in rows]
        s = [bool(r["s"]) for r in rows]
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: bad routing entry ({exc})") from None
    if len(x) != n:
        raise ScenarioError(f"{path}: routing has {len(x)} roads, scenario has {n}")
    try:
        return Routing(x, y, s)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def cmd_sim(args):
    sc = load_scenario(args.scenario)
    routing = load_routing(args.routing, sc.network.n)
    cfg = SimConfig(seed=args.seed, warmup=args.warmup, measure=args.measure)
    results, total = simulate_routing(sc.network, routing, cfg)
    _emit_json({
        "seed": args.seed,
        "roads": [None if r is None else dict(road=i + 1, **r.as_dict())
                  for i, r in enumerate(results)],
        "cost": total,
    }, args.out)
    return EXIT_OK


def cmd_oracle(args):
    sc = load_scenario(args.scenario)
    net = sc.network
    grid = GridSpec(step=args.step, tolerance=args.tolerance)
    profile = _profile(args, sc) if args.altruistic else None
    res = brute_force_best(net, sc.demand, profile, grid)
    doc = {"step": args.step, "altruistic": bool(args.altruistic), "evaluated": res.evaluated,
           "cost": None, "roads": None, "tolerance": args.tolerance, "resolution": None}
    if res.routing is not None:
        doc.update(cost=res.cost, roads=_routing_doc(net, res.routing, slack=grid.slack),
                   resolution=resolution(net, grid, res.cost, res.swing_cost))
    _emit_json(doc, args.out)
    return EXIT_OK if res.routing is not None else EXIT_INFEASIBLE


def cmd_validate(args):
    sc = load_scenario(args.scenario)
    net, dem = sc.network, sc.demand
    out = sys.stdout
    out.write(f"scenario {sc.source}: {net.n} roads, ordered by free-flow latency\n")
    for i, road in enumerate(net.roads):
        out.write(f"  road {i + 1}: length {road.length!r} m, speed {road.free_flow_speed!r} m/s, "
                  f"a = {road.free_flow_latency!r} s, capacity {model.max_flow(road, (1, 0))!r} "
                  f"(human) .. {model.max_flow(road, (0, 1))!r} (autonomous) veh/s\n")
    out.write(f"demand: human {dem.human!r}, autonomous {dem.auto!r} veh/s\n")
    out.write(f"altruism: {list(sc.profile.breakpoints)}\n")
    try:
        solvers.check_capacity(net, dem)
    except InfeasibleDemand as exc:
        out.write(f"demand: infeasible ({exc})\n")
        return EXIT_INFEASIBLE
    out.write("demand: feasible\n")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="trafseed", description="Equilibria for mixed-autonomy traffic on parallel roads.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="compute an equilibrium routing")
    s.add_argument("--mode", choices=("ne", "bne", "rbne", "bane"), required=True)
    s.add_argument("--scenario", required=True)
    s.add_argument("--m-all", type=int, dest="m_all")
    s.add_argument("--ell0", type=float)
    s.add_argument("--kappa", type=float, help="override the scenario with a uniform profile")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="average BANE latency over a demand grid")
    s.add_argument("--xbar", required=True, help="human demand LO:HI:STEP")
    s.add_argument("--ybar", required=True, help="autonomous demand LO:HI:STEP")
    s.add_argument("--scenario", required=True)
    s.add_argument("--kappa", type=float, help="override the scenario with a uniform profile")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fd", help="sample a road's fundamental diagram")
    s.add_argument("--scenario", required=True)
    s.add_argument("--road", type=int, required=True, help="1-based, in free-flow latency order")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--points", type=int, default=101)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fd)

    s = sub.add_parser("sim", help="simulate a routing on ring roads")
    s.add_argument("--scenario", required=True)
    s.add_argument("--routing", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--warmup", type=float, default=600.0)
    s.add_argument("--measure", type=float, default=3600.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("oracle", help="brute-force best equilibrium on a flow grid")
    s.add_argument("--scenario", required=True)
    s.add_argument("--step", type=float, default=0.005)
    s.add_argument("--tolerance", type=float, default=0.01)
    s.add_argument("--altruistic", action="store_true", help="use the altruism profile")
    s.add_argument("--kappa", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("validate", help="parse a scenario and check demand feasibility")
    s.add_argument("--scenario", required=True)
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InfeasibleDemand, InversionError, PlacementError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalError, CollisionError, BudgetExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # bad numeric arguments, e.g. alpha outside [0, 1]
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
