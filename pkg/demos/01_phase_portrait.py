"""Walk through the mean-field picture: fixed points, the saddle, and two basins.

Run: python3 demos/01_phase_portrait.py
"""
import numpy as np

from capdyn import ode
from capdyn.ode import ModelParams, SystemState

p = ModelParams(k_ai=0.7, scope=1.0)
print(f"Parameters: {p}\n")

print("Boundary fixed points and their linearisation:")
for fp in ode.boundary_fixed_points(p):
    note = " (removed by epsilon > 0)" if fp.regularized_away else ""
    print(f"  {fp.label} at (H={fp.location.h:.3f}, D={fp.location.d:.3f}): "
          f"eigenvalues {np.round(fp.eigenvalues, 4)}, {fp.stability}{note}")

sad = ode.interior_saddle(p)
print(f"\nInterior saddle at H={sad.location.h:.4f}, D={sad.location.d:.4f}.")
print("Its stable manifold separates the autonomous basin from the dependent one.\n")

for start in (SystemState(0.95, 0.05), SystemState(0.85, 0.3), SystemState(0.5, 0.5)):
    tr = ode.integrate(p, start, 400.0)
    print(f"  start (H={start.h:.2f}, D={start.d:.2f}) -> H={tr.h[-1]:.3f}, D={tr.d[-1]:.3f} "
          f"[{ode.classify_basin(p, start)}]")

# Past K = 1 the autonomous corner loses stability and every start collapses.
ks = np.array([0.6, 0.8, 0.95, 1.0, 1.05, 1.1])
eq = ode.equilibrium_vs_k(p, ks)
print("\nEquilibrium capability from the autonomous start:")
for k, h in zip(ks, eq):
    print(f"  K={k:.2f}  H*={h:.3f}")
