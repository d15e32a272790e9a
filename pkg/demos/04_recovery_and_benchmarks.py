"""Two consequences of the model: hysteresis after AI removal, and where current models sit in K.

Run: python3 demos/04_recovery_and_benchmarks.py
"""
from capdyn import estimation as est
from capdyn import ode
from capdyn.experiments import TWO_SKILL_PRIMARY, TWO_SKILL_SECONDARY

r = est.recovery_comparison()
print(f"Delegation removed at t={r.t_removal:g}; saddle capability {r.saddle_h:.3f}.")
for m in r.trajectories:
    print(f"  {m:<12} at removal {r.at_removal(m):.3f}, gain {r.gain(m):+.3f}, "
          f"gap closed {100 * r.gap_closed(m):.0f}%")
print("Curve-fit models relearn along their fitted path; the ODE stays trapped below the saddle.\n")

print("Benchmark-based K (mean of capped AI/human ratios over four domains):")
for kb in est.kbar_table():
    flag = "above" if kb.above_threshold else "below"
    print(f"  {kb.model:<18} {kb.release_date}  K={kb.kbar:.2f} ({flag} {est.K_STAR_REFERENCE})")

print("\nTwo skills sharing one time budget:")
for sc in ode.SCENARIOS:
    t = ode.simulate_two_skill(TWO_SKILL_PRIMARY, TWO_SKILL_SECONDARY, sc, 500.0)
    print(f"  scenario {sc}: H1={t.h1[-1]:.3f} H2={t.h2[-1]:.3f} aggregate={t.aggregate[-1]:.3f}")
