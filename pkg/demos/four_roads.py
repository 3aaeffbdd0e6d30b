"""Four roads, two residential and two highways, demand 0.4 / 1.2 veh/s.

Solves each equilibrium type, then replays the routings in the ring-road
simulator to see whether the ranking survives.
"""
import numpy as np

from trafseed import solvers
from trafseed.microsim import simulate_routing
from trafseed.model import Road
from trafseed.network import AltruismProfile, Demand, Network

net = Network([Road.from_reaction_times(400 * np.pi, 13.9),
               Road.from_reaction_times(800 * np.pi, 25.0),
               Road.from_reaction_times(1000 * np.pi, 25.0),
               Road.from_reaction_times(600 * np.pi, 13.9)])
dem = Demand(0.4, 1.2)

runs = [("NE at 400 s", solvers.solve_ne_at(net, dem, 4, 400.0)),
        ("BNE", solvers.solve_bne(net, dem)),
        ("RBNE", solvers.solve_rbne(net, dem)),
        ("BANE k=1.25", solvers.solve_bane(net, dem, AltruismProfile.uniform(1.25))),
        ("BANE k=1.5", solvers.solve_bane(net, dem, AltruismProfile.uniform(1.5)))]

print(f"{'':12s} {'model':>9s} {'sim':>9s} {'beta':>7s}")
for name, res in runs:
    _, sim = simulate_routing(net, res.routing)
    beta = "" if res.robustness is None else f"{res.robustness:.3f}"
    print(f"{name:12s} {res.cost:9.3f} {sim:9.3f} {beta:>7s}")
    print("   ", res.routing)
