"""Preset registry: one preset per figure or table, each emitting plot-ready tables."""
from __future__ import annotations

import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__, estimation, io, ode, sweep
from .config import RunConfig
from .parallel import default_workers

# two-skill defaults: the AI covers only a small slice of skill 2
TWO_SKILL_PRIMARY = ode.ModelParams(k_ai=0.95)
TWO_SKILL_SECONDARY = ode.ModelParams(k_ai=0.95, scope=0.1)


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


def _reps(cfg: RunConfig, default: int) -> int:
    return cfg.sweep.replicates or default


def _k_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.sweep.k_min, cfg.sweep.k_max, cfg.sweep.n_k)


def fig1_calibration(cfg: RunConfig, workers: int) -> dict:
    obs = io.ingest_csv("deskill")
    rates, curves = [], []
    for o in obs:
        b = estimation.beta_eff(o)
        rates.append(dict(domain=o.domain, decline=o.decline, duration=o.duration, time_unit=o.time_unit,
                          beta_eff=b))
        for t, h in zip(np.linspace(0, o.duration, 41), estimation.predict_decline_curve(b, 1.0, 1.0,
                                                                                        np.linspace(0, o.duration, 41))):
            curves.append(dict(domain=o.domain, t=t, h=h))
    return {"beta_eff": rates, "decline_curves": curves}


def fig2_pisa_panel(cfg: RunConfig, workers: int) -> dict:
    single = estimation.fit_ode_single(seed=cfg.seed)
    panel_data = estimation.bundled_panel()
    panel = estimation.fit_ode_panel(panel_data, seed=cfg.seed)
    fitted = []
    i = 0
    for s in panel_data.series:
        for y, score in zip(s.years, s.scores):
            fitted.append(dict(country=s.label, year=int(y), score=score, fitted=panel.fitted[i]))
            i += 1
    oecd = estimation.oecd_series()
    single_rows = [dict(year=int(y), score=s, fitted=f) for y, s, f in zip(oecd.years, oecd.scores, single.fitted)]
    prof_s = estimation.profile_likelihood_alpha(oecd, seed=cfg.seed, mle=single)
    prof_p = estimation.profile_likelihood_alpha(panel_data, seed=cfg.seed, mle=panel)
    ci = [dict(data=name, alpha_mle=p.alpha_mle, ci_lo=p.ci[0], ci_hi=p.ci[1], decades=p.ci_decades)
          for name, p in (("oecd", prof_s), ("panel", prof_p))]
    return {"fits": [single.summary(), panel.summary()], "oecd_fit": single_rows, "panel_fit": fitted,
            "profile_oecd": prof_s.rows(), "profile_panel": prof_p.rows(), "profile_ci": ci}


def fig3_model_comparison(cfg: RunConfig, workers: int) -> dict:
    oecd = estimation.oecd_series()
    single = [estimation.fit_ode_single(oecd, seed=cfg.seed)] + [
        estimation.fit_alt_model(k, oecd) for k in ("linear", "exponential", "logistic")]
    panel_data = estimation.bundled_panel()
    panel = [estimation.fit_ode_panel(panel_data, seed=cfg.seed)] + [
        estimation.fit_alt_model(k, panel_data) for k in ("country-linear", "exponential")]
    rec = estimation.recovery_comparison()
    return {"aic_oecd": estimation.compare_models(single, "aic").rows,
            "bic_panel": estimation.compare_models(panel, "bic").rows,
            "recovery": rec.rows()}


def fig4_threshold(cfg: RunConfig, workers: int) -> dict:
    rep = sweep.k_sweep(cfg.abm_config(), _k_grid(cfg), _reps(cfg, 50), cfg.sweep.statistic,
                        cfg.sweep.smoothing, workers)
    summary = [dict(k_star=np.nan if rep.k_star is None else rep.k_star, max_gradient=rep.max_gradient,
                    interior=rep.interior, diagnostics="; ".join(rep.diagnostics))]
    return {"k_sweep": rep.rows(), "k_star": summary}


def fig4b_heatmap(cfg: RunConfig, workers: int) -> dict:
    hm = sweep.k_crisis_heatmap(cfg.abm_config(), _k_grid(cfg),
                                np.linspace(0.0, cfg.sweep.crisis_max, cfg.sweep.n_crisis),
                                _reps(cfg, 10), cfg.sweep.statistic, workers=workers)
    contour = [dict(p_crisis=c, k=k) for c, k in hm.contour] or [dict(p_crisis=np.nan, k=np.nan)]
    return {"heatmap": hm.rows(), "contour": contour}


def fig5_antifragility(cfg: RunConfig, workers: int) -> dict:
    return {"antifragility": sweep.antifragility_curve(cfg.abm_config(), replicates=_reps(cfg, 50),
                                                       workers=workers)}


def fig6_policy(cfg: RunConfig, workers: int) -> dict:
    rows = sweep.policy_curve(cfg.abm_config(), replicates=_reps(cfg, 50), workers=workers)
    return {"policy": [{k: r[k] for k in ("practice_fraction", "median_h", "iqr_lo", "iqr_hi")} for r in rows]}


def tab1_kbar(cfg: RunConfig, workers: int) -> dict:
    rows = [r.row() for r in estimation.kbar_table()]
    variant = estimation.kbar_table(overrides={("GPT-4", "Bar"): 0.70 * 0.90})
    alt = [dict(variant="bar-percentile-reestimate", model=r.model, kbar=r.kbar, above_threshold=r.above_threshold)
           for r in variant if r.model == "GPT-4"]
    return {"kbar": rows, "kbar_sensitivity": alt}


def si_s1_parameter_space(cfg: RunConfig, workers: int) -> dict:
    n, nz = cfg.sweep.grid_n, cfg.sweep.zoom_n
    gd = sweep.gamma_delta_grid(n=n)
    cs = sweep.cost_scope_grid(n=n)
    zoom = sweep.cost_scope_grid(n=nz, cost_range=(0.4, 0.8), scope_range=(0.4, 0.8))
    ic = sweep.initial_condition_grid(params=cfg.params.replace(k_ai=0.7))
    return {"gamma_delta": gd.rows(), "cost_scope": cs.rows(), "cost_scope_zoom": zoom.rows(),
            "initial_condition": ic.rows(), "historical": gd.markers}


def si_s2_epsilon(cfg: RunConfig, workers: int) -> dict:
    res = sweep.epsilon_sweep()
    fine = sweep.epsilon_sweep(np.linspace(0.01, 0.25, 25))
    return {"epsilon_recovery": res["rows"], "epsilon_curve": fine["rows"],
            "epsilon_ratio": [dict(ratio=res["ratio"])]}


def si_s4_twoskill(cfg: RunConfig, workers: int) -> dict:
    traj = []
    for sc in ode.SCENARIOS:
        t = ode.simulate_two_skill(TWO_SKILL_PRIMARY.replace(k_ai=0.9), TWO_SKILL_SECONDARY, sc)
        for i in range(0, len(t.times), 10):
            traj.append(dict(scenario=sc, t=t.times[i], h1=t.h1[i], h2=t.h2[i], aggregate=t.aggregate[i]))
    k_grid = np.round(np.linspace(0.5, 1.0, 26), 4)
    sw = ode.two_skill_k_sweep(TWO_SKILL_PRIMARY, TWO_SKILL_SECONDARY, k_grid)
    ksw = [dict(k=k, A=sw["A"][i], B=sw["B"][i], C=sw["C"][i]) for i, k in enumerate(k_grid)]
    return {"twoskill_time": traj, "twoskill_k": ksw}


def sensitivity_suite(cfg: RunConfig, workers: int) -> dict:
    rows = []
    for name in sweep.SENSITIVITY_RANGES:
        res = sweep.sensitivity_suite(cfg.abm_config(), name, k_grid=_k_grid(cfg),
                                      replicates=_reps(cfg, 10), statistic=cfg.sweep.statistic, workers=workers)
        rows += res.rows()
    return {"sensitivity": rows}


PRESETS: dict[str, Callable[[RunConfig, int], dict]] = {
    "fig1-calibration": fig1_calibration,
    "fig2-pisa-panel": fig2_pisa_panel,
    "fig3-model-comparison": fig3_model_comparison,
    "fig4-threshold": fig4_threshold,
    "fig4b-heatmap": fig4b_heatmap,
    "fig5-antifragility": fig5_antifragility,
    "fig6-policy": fig6_policy,
    "tab1-kbar": tab1_kbar,
    "si-s1-parameter-space": si_s1_parameter_space,
    "si-s2-epsilon": si_s2_epsilon,
    "si-s4-twoskill": si_s4_twoskill,
    "sensitivity-suite": sensitivity_suite,
}


def resolve_preset(name: Optional[str]) -> Callable:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    return PRESETS[name]


def workers_for(cfg: RunConfig) -> int:
    return cfg.threads if cfg.threads is not None else default_workers()


def emit(tables: dict, cfg: RunConfig, name: str, started: float, workers: int) -> dict:
    """Write tables and manifest; any partially written files are removed on failure."""
    out = Path(cfg.output_dir)
    before = set(out.iterdir()) if out.exists() else set()
    manifest = dict(experiment=name, toolkit_version=__version__, seed=cfg.seed, threads=workers,
                    wall_time=round(time.perf_counter() - started, 3), config=cfg.to_dict())
    try:
        return io.emit_results(tables, out, cfg.format, manifest)
    except BaseException as exc:
        for p in set(out.iterdir()) - before:
            p.unlink(missing_ok=True)
        raise ExperimentError("emit", exc) from exc


def run_experiment(cfg: RunConfig) -> dict:
    """Run the configured preset and write its tables plus ``manifest.json``."""
    fn = resolve_preset(cfg.experiment)
    try:
        io.ensure_writable(cfg.output_dir)
    except PermissionError as exc:
        raise ExperimentError("prepare-output", exc) from exc
    workers = workers_for(cfg)
    started = time.perf_counter()
    try:
        tables = fn(cfg, workers)
    except Exception as exc:
        raise ExperimentError(cfg.experiment, exc) from exc
    return emit(tables, cfg, cfg.experiment, started, workers)
