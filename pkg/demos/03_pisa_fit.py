"""Fit the capability equation to the bundled score data and compare it with simpler curves.

Run: python3 demos/03_pisa_fit.py
"""
from capdyn import estimation as est

series = est.oecd_series()
print("OECD average:", dict(zip(series.years.astype(int), series.scores)))

fit = est.fit_ode_single(series)
print(f"\nODE fit with h_max fixed at {est.H_MAX_SINGLE:g}:")
print(f"  alpha={fit.parameters['alpha']:.3g}  beta={fit.parameters['beta']:.3g}  "
      f"R^2={fit.r_squared:.3f}  RMSE={fit.rmse:.2f}")
for w in fit.warnings:
    print("  warning:", w)

fits = [fit] + [est.fit_alt_model(k, series) for k in ("linear", "exponential", "logistic")]
table = est.compare_models(fits, "aic")
print("\nAIC comparison (lower is better):")
for r in table.rows:
    print(f"  {r['model']:<12} AIC={r['aic']:8.2f}  dAIC={r['d_aic']:5.2f}  R^2={r['r_squared']:.3f}")

# Only seven points: the recovery rate alpha is poorly pinned down.
prof = est.profile_likelihood_alpha(series, mle=fit)
print(f"\n95% profile interval for alpha: [{prof.ci[0]:.2g}, {prof.ci[1]:.2g}] "
      f"({prof.ci_decades:.1f} decades)")

panel = est.bundled_panel()
pfit = est.fit_ode_panel(panel)
print(f"\nPanel of {len(panel.countries)} countries ({panel.n_obs} scores): "
      f"alpha={pfit.parameters['alpha']:.3g} beta={pfit.parameters['beta']:.3g} "
      f"h_max={pfit.parameters['h_max']:.0f} R^2={pfit.r_squared:.3f}")
