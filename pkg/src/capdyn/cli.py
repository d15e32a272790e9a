"""Command-line entry point: ``capdyn <subcommand> [options]``."""
from __future__ import annotations

import argparse
import sys
import time
from typing import Optional, Sequence


from . import abm, estimation, experiments, io, ode, sweep
from .config import ConfigError, RunConfig, parse_assignments, parse_config
from .datasets import PanelDataset

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON or YAML config file")
    p.add_argument("--seed", type=int, help="base seed (default 42)")
    p.add_argument("--threads", type=int, help="worker processes (default: $CAPDYN_THREADS or all cores)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. params.beta=0.05 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capdyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one agent-based run, or the ODE with --ode")
    _common(p)
    p.add_argument("--ode", action="store_true", help="integrate the mean-field ODE instead")
    p.add_argument("--t-end", type=float, default=200.0, help="ODE horizon")

    p = sub.add_parser("sweep", help="Monte Carlo sweep")
    _common(p)
    p.add_argument("kind", choices=("k", "heatmap", "antifragility", "policy", "sensitivity"))
    p.add_argument("--parameter", choices=sorted(sweep.SENSITIVITY_RANGES), default="beta",
                   help="parameter for the sensitivity sweep")

    p = sub.add_parser("fit", help="fit a model to PISA data")
    _common(p)
    p.add_argument("--model", choices=("ode",) + estimation.ALT_KINDS, default="ode")
    p.add_argument("--data", choices=("oecd", "panel"), default="oecd")
    p.add_argument("--pisa", help="score CSV (default: bundled)")
    p.add_argument("--adoption", help="adoption CSV (default: bundled)")
    p.add_argument("--profile", action="store_true", help="also compute the profile likelihood of alpha")

    p = sub.add_parser("compare", help="AIC/BIC comparison of the ODE and alternative models")
    _common(p)
    p.add_argument("--data", choices=("oecd", "panel"), default="oecd")
    p.add_argument("--pisa")
    p.add_argument("--adoption")

    p = sub.add_parser("calibrate", help="effective decay rates from deskilling observations")
    _common(p)
    p.add_argument("--deskill", help="deskill CSV (default: bundled)")

    p = sub.add_parser("benchmark", help="K-bar table from benchmark scores")
    _common(p)
    p.add_argument("--benchmarks", help="benchmark CSV (default: bundled)")

    p = sub.add_parser("two-skill", help="two-skill scenarios A/B/C")
    _common(p)
    p.add_argument("--k1", type=float, default=0.95)
    p.add_argument("--t-end", type=float, default=500.0)

    p = sub.add_parser("reproduce", help="regenerate one figure/table preset")
    _common(p)
    p.add_argument("preset", help="one of: " + ", ".join(experiments.PRESETS))
    return parser


def _resolve(args, default_out: str) -> RunConfig:
    return parse_config(args.config, parse_assignments(args.set), defaults={"output_dir": default_out},
                        seed=args.seed, threads=args.threads, output_dir=args.out, format=args.format,
                        experiment=getattr(args, "preset", None))


def _panel(args) -> PanelDataset:
    return PanelDataset.from_records(io.ingest_csv("pisa", args.pisa), io.ingest_csv("adoption", args.adoption))


def _series(args):
    return estimation.oecd_series(io.ingest_csv("pisa", args.pisa))


def _simulate(args, cfg: RunConfig, workers: int) -> dict:
    if args.ode:
        traj = ode.integrate(cfg.params, ode.SystemState(cfg.abm.init_h_mean, cfg.abm.init_d_mean), args.t_end)
        return {"ode_trajectory": [dict(t=t, h=h, d=d) for t, h, d in zip(traj.times, traj.h, traj.d)]}
    acfg = cfg.abm_config()
    batch = abm.simulate_batch(acfg, [acfg.seed])
    summ = abm.summarize(batch, acfg)
    series = [dict(step=i, mean_h=batch.mean_h[0, i], mean_d=batch.mean_d[0, i], crisis=bool(batch.crisis[0, i]))
              for i in range(batch.mean_h.shape[1])]
    return {"abm_trajectory": series,
            "abm_summary": [dict(seed=summ.seed, equilibrium_h=summ.equilibrium_h, mean_h=summ.mean_h,
                                 mean_d=summ.mean_d, crisis_steps=summ.crisis_steps,
                                 min_h_during_crisis=summ.min_h_during_crisis)]}


def _sweep(args, cfg: RunConfig, workers: int) -> dict:
    if args.kind == "k":
        return experiments.fig4_threshold(cfg, workers)
    if args.kind == "heatmap":
        return experiments.fig4b_heatmap(cfg, workers)
    if args.kind == "antifragility":
        return experiments.fig5_antifragility(cfg, workers)
    if args.kind == "policy":
        rows = sweep.policy_curve(cfg.abm_config(), replicates=cfg.sweep.replicates or 50, workers=workers)
        return {"policy": rows}
    res = sweep.sensitivity_suite(cfg.abm_config(), args.parameter, replicates=cfg.sweep.replicates or 10,
                                  k_grid=experiments._k_grid(cfg), workers=workers)
    return {"sensitivity": res.rows()}


def _fit(args, cfg: RunConfig, workers: int) -> dict:
    data = _panel(args) if args.data == "panel" else _series(args)
    if args.model == "ode":
        fit = (estimation.fit_ode_panel(data, seed=cfg.seed) if args.data == "panel"
               else estimation.fit_ode_single(data, seed=cfg.seed))
    else:
        fit = estimation.fit_alt_model(args.model, data)
    tables = {"fit": [fit.summary()]}
    if args.profile and args.model == "ode":
        prof = estimation.profile_likelihood_alpha(data, seed=cfg.seed, mle=fit)
        tables["profile"] = prof.rows()
    return tables


def _compare(args, cfg: RunConfig, workers: int) -> dict:
    if args.data == "panel":
        data = _panel(args)
        fits = [estimation.fit_ode_panel(data, seed=cfg.seed)] + [
            estimation.fit_alt_model(k, data) for k in ("country-linear", "exponential")]
        return {"comparison": estimation.compare_models(fits, "bic").rows}
    data = _series(args)
    fits = [estimation.fit_ode_single(data, seed=cfg.seed)] + [
        estimation.fit_alt_model(k, data) for k in ("linear", "exponential", "logistic")]
    return {"comparison": estimation.compare_models(fits, "aic").rows}


def _calibrate(args, cfg: RunConfig, workers: int) -> dict:
    return {"beta_eff": [dict(domain=o.domain, decline=o.decline, duration=o.duration, time_unit=o.time_unit,
                              beta_eff=estimation.beta_eff(o)) for o in io.ingest_csv("deskill", args.deskill)]}


def _benchmark(args, cfg: RunConfig, workers: int) -> dict:
    scores = io.ingest_csv("benchmarks", args.benchmarks)
    return {"kbar": [r.row() for r in estimation.kbar_table(scores)]}


def _two_skill(args, cfg: RunConfig, workers: int) -> dict:
    p1 = experiments.TWO_SKILL_PRIMARY.replace(k_ai=args.k1)
    rows = []
    for sc in ode.SCENARIOS:
        t = ode.simulate_two_skill(p1, experiments.TWO_SKILL_SECONDARY, sc, args.t_end)
        rows.append(dict(scenario=sc, h1=t.h1[-1], h2=t.h2[-1], d1=t.d1[-1], d2=t.d2[-1], aggregate=t.aggregate[-1]))
    return {"twoskill": rows}


HANDLERS = {
    "simulate": _simulate, "sweep": _sweep, "fit": _fit, "compare": _compare, "calibrate": _calibrate,
    "benchmark": _benchmark, "two-skill": _two_skill,
}


def _print_tables(tables: dict, limit: int = 12):
    for name, rows in tables.items():
        print(f"# {name} ({len(rows)} rows)")
        cols = list(rows[0])
        print("\t".join(cols))
        for r in rows[:limit]:
            print("\t".join(io.format_value(r[c]) for c in cols))
        if len(rows) > limit:
            print(f"... {len(rows) - limit} more")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args, f"results/{args.preset if args.command == 'reproduce' else args.command}")
        if args.command == "reproduce":
            experiments.resolve_preset(cfg.experiment)
    except (ConfigError, ValueError) as exc:
        print(f"capdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "reproduce":
            manifest = experiments.run_experiment(cfg)
        else:
            io.ensure_writable(cfg.output_dir)
            workers = experiments.workers_for(cfg)
            started = time.perf_counter()
            try:
                tables = HANDLERS[args.command](args, cfg, workers)
            except Exception as exc:
                raise experiments.ExperimentError(args.command, exc) from exc
            _print_tables(tables)
            manifest = experiments.emit(tables, cfg, args.command, started, workers)
    except (experiments.ExperimentError, PermissionError) as exc:
        print(f"capdyn: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    files = ", ".join(f"{f['file']} ({f['rows']} rows)" for f in manifest["files"])
    print(f"wrote {files} to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
