"""A reduced Monte Carlo sweep over AI capability K with the agent-based model.

The full sweep uses 50 grid points with 50 replicates each; this demo uses
fewer so that it finishes in well under a minute.  Set CAPDYN_THREADS to
control the worker count.

Run: python3 demos/02_threshold_sweep.py
"""
import numpy as np

from capdyn import sweep
from capdyn.abm import AbmConfig
from capdyn.parallel import default_workers

base = AbmConfig()
k_grid = np.linspace(0.5, 0.99, 15)
rep = sweep.k_sweep(base, k_grid, replicates=10, workers=default_workers())

print("  K      median H   IQR")
for row in rep.rows():
    print(f"  {row['k']:.3f}  {row['h']:.3f}     [{row['iqr_lo']:.3f}, {row['iqr_hi']:.3f}]")
if rep.k_star is None:
    print("\nNo interior maximum of |dH/dK|:", "; ".join(rep.diagnostics))
else:
    print(f"\nSteepest decline at K*={rep.k_star:.3f} (|dH/dK|={rep.max_gradient:.1f}).")

# Periodic crises force manual work and protect capability.
rows = sweep.antifragility_curve(base, k_values=(0.9,), crisis_values=(0.0, 0.12, 0.25), replicates=10)
print("\nCrisis frequency at K=0.9:")
for r in rows:
    print(f"  p={r['p_crisis']:.2f}  median H={r['median_h']:.3f}  ratio to no-crisis={r['ratio']:.2f}")
