"""Carnot-Landauer gap of the incoherent protocol as the per-stage collision
budget K grows, next to the ideal-stage value.

    python scripts/incoherent_budget.py
"""

from finite_cooling.geometry import geodesic_scale_factors
from finite_cooling.incoherent import IncoherentConfig, run_incoherent_protocol, scale_stages
from finite_cooling.thermo import HamiltonianSpec

H = HamiltonianSpec.qubit(1.0)
stages = scale_stages(geodesic_scale_factors(5, 3.0, 1.0, 1.0))

print(f"{'K':>6} {'beta*CL':>12} {'dE_C':>10} {'ground':>8} {'|identity|':>11}")
for K in (1, 2, 5, 20, 100, 1000):
    rep = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, H, stages, mode="finite", repeats=K))
    print(f"{K:6d} {rep.beta * rep.carnot_landauer:12.5f} {rep.deltaE_C:10.5f} "
          f"{rep.final_state[0]:8.5f} {abs(rep.identity_residual):11.1e}")
rep = run_incoherent_protocol(IncoherentConfig(1.0, 0.5, H, stages))
print(f"{'ideal':>6} {rep.beta * rep.carnot_landauer:12.5f} {rep.deltaE_C:10.5f} {rep.final_state[0]:8.5f}")
