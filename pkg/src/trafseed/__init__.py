"""Equilibria for mixed human/autonomous traffic on parallel roads."""
from .model import Road, FlowPair, latency, max_flow, critical_density, fundamental_diagram
from .network import (AltruismProfile, Demand, EquilibriumInfo, Network, Routing, cost,
                      is_altruistic_equilibrium, is_nash, phi_eval, robustness)
from .solvers import (SolverResult, solve_bane, solve_bne, solve_ne_at, solve_rbne, sweep)
from .oracle import GridSpec, brute_force_best
from .microsim import SimConfig, SimResult, fd_scan, simulate_ring, simulate_routing
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
