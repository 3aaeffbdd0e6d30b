"""Road 4 of the four-road network: model diagram vs ring-road simulation."""
import numpy as np

from trafseed import model
from trafseed.microsim import fd_scan
from trafseed.model import Road

road = Road.from_reaction_times(600 * np.pi, 13.9)

for alpha in (0.0, 0.5, 1.0):
    rho_c = model.critical_density_at(road, alpha)
    zmax = model.max_flow(road, (1 - alpha, alpha))
    print(f"alpha {alpha}: rho_crit {rho_c:.4f} veh/m, z_max {zmax:.3f} veh/s")
    fd_rho, fd_z = model.fundamental_diagram(road, alpha)
    dens = np.linspace(0.1 * rho_c, 0.95 * road.max_density, 12)
    for rho, flow, lat in fd_scan(road, alpha, dens):
        theory = np.interp(rho, fd_rho, fd_z)
        print(f"  rho {rho:.4f}  sim {flow:.3f}  model {theory:.3f}  latency {lat:8.1f} s")
