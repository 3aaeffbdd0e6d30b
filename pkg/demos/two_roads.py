"""Two residential roads, 0.3 veh/s of each vehicle type.

Compares the best selfish equilibrium, a congested one, and the best
altruistic one, then cross-checks against the grid oracle.
"""
import numpy as np

from trafseed import solvers
from trafseed.model import Road
from trafseed.network import AltruismProfile, Demand, Network, road_latencies
from trafseed.oracle import GridSpec, brute_force_best, resolution

net = Network([Road.from_reaction_times(400 * np.pi, 13.9),
               Road.from_reaction_times(1000 * np.pi, 13.9)])
dem = Demand(0.3, 0.3)
print("free-flow latencies (s):", np.round(net.free_flow_latencies, 3))

rbne = solvers.solve_rbne(net, dem)
ne = solvers.solve_ne_at(net, dem, 2, 540.0)
bane = solvers.solve_bane(net, dem, AltruismProfile.uniform(2.5))

for name, res in [("RBNE", rbne), ("NE at 540 s", ne), ("BANE k=2.5", bane)]:
    lat = road_latencies(net, res.routing)
    print(f"{name:12s} cost {res.cost:8.3f}  {res.routing}  latencies {np.round(lat, 1)}")

# the grid oracle should land within its resolution of each solver
grid = GridSpec(step=0.005)
for name, prof, res in [("selfish", None, rbne), ("altruistic", AltruismProfile.uniform(2.5), bane)]:
    o = brute_force_best(net, dem, prof, grid)
    print(f"oracle {name:10s} {o.cost:8.3f}  solver {res.cost:8.3f}  "
          f"bound {resolution(net, grid, o.cost, o.swing_cost):.3f}")
