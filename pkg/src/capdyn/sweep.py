"""Monte Carlo sweeps over the agent-based model and ODE parameter grids.

Stochastic sweeps evaluate ``replicates`` runs at each grid point.  Run ``r``
at grid point ``i`` is seeded with ``rng.grid_seed(base, i, r)``; the grid is
split into one task per point and results are placed by index, so a sweep is
bit-identical for any worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import ode
from .abm import AbmConfig, EnsembleStats, simulate_batch
from .ode import ModelParams
from .parallel import map_ordered
from .rng import grid_seed

STATISTICS = ("median", "mean")
DEFAULT_K_GRID = np.linspace(0.50, 0.99, 50)
DEFAULT_CRISIS_GRID = np.linspace(0.0, 0.25, 35)
ANTIFRAGILITY_K = (0.7, 0.8, 0.9, 0.95)
CRISIS_LEVELS = (0.0, 0.05, 0.12, 0.20, 0.25)
PRACTICE_LEVELS = (0.0, 0.1, 0.2, 0.3, 0.4)

# one-at-a-time ranges; everything else stays at the baseline
SENSITIVITY_RANGES = {
    "beta": (0.01, 0.10),
    "alpha": (0.02, 0.10),
    "delta": (0.0, 2.0),
    "scope": (0.3, 0.9),
    "gamma": (0.01, 0.50),
}

# historical technology regimes on the cost/scope plane
HISTORICAL_PRESETS = {
    "calculator": dict(cost=0.99, scope=0.01),
    "industrial-revolution": dict(cost=0.30, scope=0.05),
    "roman-slave-economy": dict(cost=0.05, scope=0.60),
    "ai-2030": dict(cost=0.01, scope=0.80),
}


def cost_to_gamma(cost: float) -> float:
    """Low adoption cost means fast adoption: ``gamma = clamp(1 - cost, 0.01, 1)``."""
    return float(min(max(1.0 - cost, 0.01), 1.0))


@dataclass
class PointResult:
    equilibria: np.ndarray
    min_crisis_h: np.ndarray


def _evaluate_point(config: AbmConfig, base_seed: int, point_index: int, replicates: int) -> PointResult:
    seeds = [grid_seed(base_seed, point_index, r) for r in range(replicates)]
    batch = simulate_batch(config, seeds)
    return PointResult(batch.equilibrium_h(config.equilibrium_window), batch.min_h_during_crisis())


def evaluate_grid(configs: Sequence[AbmConfig], replicates: int, base_seed: int,
                  point_indices: Optional[Sequence[int]] = None,
                  workers: Optional[int] = 1) -> list[PointResult]:
    """Run ``replicates`` simulations at every configuration.

    Exactly ``len(configs) * replicates`` runs are executed.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if point_indices is None:
        point_indices = range(len(configs))
    tasks = [(cfg, base_seed, int(i), replicates) for cfg, i in zip(configs, point_indices)]
    return map_ordered(_evaluate_point, tasks, workers)


def _stat(values: np.ndarray, statistic: str) -> float:
    if statistic == "median":
        return float(np.median(values))
    if statistic == "mean":
        return float(np.mean(values))
    raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")


def moving_average3(y: np.ndarray) -> np.ndarray:
    out = np.asarray(y, dtype=float).copy()
    out[1:-1] = (y[:-2] + y[1:-1] + y[2:]) / 3.0
    return out


@dataclass
class KStarReport:
    k_star: Optional[float]
    max_gradient: float
    k_grid: np.ndarray
    statistic: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    gradient: np.ndarray
    non_monotone: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def interior(self) -> bool:
        return self.k_star is not None

    def value_at(self, k: float) -> float:
        i = int(np.argmin(np.abs(self.k_grid - k)))
        if abs(self.k_grid[i] - k) > 1e-9:
            raise KeyError(f"K={k} is not on the sweep grid")
        return float(self.statistic[i])

    def rows(self) -> list[dict]:
        return [dict(k=float(k), h=float(h), iqr_lo=float(a), iqr_hi=float(b), gradient=float(g))
                for k, h, a, b, g in zip(self.k_grid, self.statistic, self.q25, self.q75, self.gradient)]


def locate_k_star(k_grid, curve, smoothing: bool = False) -> tuple[Optional[float], float, np.ndarray, list]:
    """K at the steepest point of the equilibrium curve.

    Central differences in the interior, one-sided at the ends.  A maximum at
    either end of the grid is rejected with a diagnostic.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    y = moving_average3(curve) if smoothing else np.asarray(curve, dtype=float)
    if len(k_grid) < 3:
        raise ValueError("need at least three grid points to locate K*")
    grad = np.gradient(y, k_grid)
    i = int(np.argmax(np.abs(grad)))
    diagnostics = []
    if i in (0, len(k_grid) - 1):
        diagnostics.append(f"steepest change at grid endpoint K={k_grid[i]:.4f}; K* not bracketed")
        return None, float(abs(grad[i])), grad, diagnostics
    return float(k_grid[i]), float(abs(grad[i])), grad, diagnostics


def k_sweep(base: AbmConfig, k_grid=DEFAULT_K_GRID, replicates: int = 50, statistic: str = "median",
            smoothing: bool = False, workers: Optional[int] = 1,
            base_seed: Optional[int] = None) -> KStarReport:
    """Equilibrium capability across AI capability and the critical threshold K*."""
    k_grid = np.asarray(k_grid, dtype=float)
    if len(k_grid) < 2:
        raise ValueError("grid counts must be >= 2")
    seed = base.seed if base_seed is None else base_seed
    configs = [base.with_params(k_ai=float(k)) for k in k_grid]
    points = evaluate_grid(configs, replicates, seed, workers=workers)
    stat = np.array([_stat(p.equilibria, statistic) for p in points])
    q25 = np.array([np.percentile(p.equilibria, 25) for p in points])
    q75 = np.array([np.percentile(p.equilibria, 75) for p in points])
    k_star, gmax, grad, diagnostics = locate_k_star(k_grid, stat, smoothing)
    non_monotone = [int(i) for i in np.flatnonzero(np.diff(stat) > 0)]
    if non_monotone:
        diagnostics.append(f"{len(non_monotone)} non-monotone segment(s) from stochastic scatter")
    return KStarReport(k_star, gmax, k_grid, stat, q25, q75, grad, non_monotone, diagnostics)


@dataclass
class Heatmap:
    k_grid: np.ndarray
    crisis_grid: np.ndarray
    statistic: np.ndarray       # (n_crisis, n_k)
    min_crisis_h: np.ndarray    # (n_crisis, n_k), NaN where no crisis fired
    contour: list               # (p_crisis, K) points on the H = level line

    def rows(self) -> list[dict]:
        out = []
        for i, c in enumerate(self.crisis_grid):
            for j, k in enumerate(self.k_grid):
                out.append(dict(p_crisis=float(c), k=float(k), h=float(self.statistic[i, j]),
                                min_crisis_h=float(self.min_crisis_h[i, j])))
        return out


def contour_crossings(x_grid, y_grid, z, level: float = 0.5) -> list[tuple[float, float]]:
    """Downward crossings of ``level`` along x for each row, linearly interpolated.

    Returns ``(y, x)`` pairs, one per row that crosses, at the first crossing.
    """
    pts = []
    for i, y in enumerate(y_grid):
        row = z[i]
        for j in range(len(x_grid) - 1):
            a, b = row[j], row[j + 1]
            if a >= level > b:
                x = x_grid[j] + (a - level) / (a - b) * (x_grid[j + 1] - x_grid[j])
                pts.append((float(y), float(x)))
                break
    return pts


def k_crisis_heatmap(base: AbmConfig, k_grid=DEFAULT_K_GRID, crisis_grid=DEFAULT_CRISIS_GRID,
                     replicates: int = 10, statistic: str = "median", level: float = 0.5,
                     workers: Optional[int] = 1, base_seed: Optional[int] = None) -> Heatmap:
    """Equilibrium capability over the (K, crisis probability) plane.

    Point ``(i_crisis, i_k)`` has index ``i_crisis * len(k_grid) + i_k``, so the
    zero-crisis row reuses the seeds of a K sweep with the same base seed.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    crisis_grid = np.asarray(crisis_grid, dtype=float)
    if len(k_grid) < 2 or len(crisis_grid) < 2:
        raise ValueError("grid counts must be >= 2")
    seed = base.seed if base_seed is None else base_seed
    configs, idx = [], []
    for i, c in enumerate(crisis_grid):
        for j, k in enumerate(k_grid):
            configs.append(base.replace(p_crisis=float(c), params=base.params.replace(k_ai=float(k))))
            idx.append(i * len(k_grid) + j)
    points = evaluate_grid(configs, replicates, seed, idx, workers)
    shape = (len(crisis_grid), len(k_grid))
    stat = np.array([_stat(p.equilibria, statistic) for p in points]).reshape(shape)
    with np.errstate(all="ignore"):
        lows = np.array([np.nanmedian(p.min_crisis_h) if np.any(~np.isnan(p.min_crisis_h)) else np.nan
                         for p in points]).reshape(shape)
    return Heatmap(k_grid, crisis_grid, stat, lows, contour_crossings(k_grid, crisis_grid, stat, level))


def _table(base: AbmConfig, settings: list[dict], replicates: int, workers, base_seed) -> list[EnsembleStats]:
    seed = base.seed if base_seed is None else base_seed
    configs = []
    for s in settings:
        s = dict(s)
        k = s.pop("k_ai", None)
        cfg = base.replace(**s)
        if k is not None:
            cfg = cfg.with_params(k_ai=k)
        configs.append(cfg)
    points = evaluate_grid(configs, replicates, seed, workers=workers)
    return [EnsembleStats.from_values(p.equilibria) for p in points]


def antifragility_curve(base: AbmConfig, k_values=ANTIFRAGILITY_K, crisis_values=CRISIS_LEVELS,
                        replicates: int = 50, workers: Optional[int] = 1,
                        base_seed: Optional[int] = None) -> list[dict]:
    """Equilibrium capability against crisis frequency at several K.

    ``ratio`` is the statistic relative to the zero-crisis value at the same K
    (the first entry of ``crisis_values``).
    """
    settings = [dict(k_ai=float(k), p_crisis=float(c)) for k in k_values for c in crisis_values]
    stats = _table(base, settings, replicates, workers, base_seed)
    rows = []
    for (s, st) in zip(settings, stats):
        rows.append(dict(k=s["k_ai"], p_crisis=s["p_crisis"], median_h=st.median, mean_h=st.mean,
                         iqr_lo=st.q25, iqr_hi=st.q75))
    n_c = len(crisis_values)
    for i in range(0, len(rows), n_c):
        ref = rows[i]["median_h"]
        for row in rows[i:i + n_c]:
            row["ratio"] = row["median_h"] / ref if ref > 0 else math.inf
    return rows


def policy_curve(base: AbmConfig, fractions=PRACTICE_LEVELS, k_ai: float = 0.9, p_crisis: float = 0.05,
                 replicates: int = 50, workers: Optional[int] = 1,
                 base_seed: Optional[int] = None) -> list[dict]:
    """Equilibrium capability under mandatory AI-free practice.

    ``improvement_pct`` is relative to the first fraction (normally 0).
    """
    settings = [dict(k_ai=k_ai, p_crisis=p_crisis, practice_fraction=float(f)) for f in fractions]
    stats = _table(base, settings, replicates, workers, base_seed)
    ref = stats[0].median
    return [dict(practice_fraction=float(f), median_h=st.median, iqr_lo=st.q25, iqr_hi=st.q75,
                 improvement_pct=100.0 * (st.median / ref - 1.0) if ref > 0 else math.inf)
            for f, st in zip(fractions, stats)]


@dataclass
class SensitivityResult:
    parameter: str
    values: np.ndarray
    k_stars: list
    max_gradients: list

    @property
    def all_interior(self) -> bool:
        return all(k is not None for k in self.k_stars)

    @property
    def k_star_range(self) -> tuple[float, float]:
        found = [k for k in self.k_stars if k is not None]
        if not found:
            return (math.nan, math.nan)
        return (min(found), max(found))

    def rows(self) -> list[dict]:
        return [dict(parameter=self.parameter, value=float(v),
                     k_star=math.nan if k is None else k, max_gradient=g)
                for v, k, g in zip(self.values, self.k_stars, self.max_gradients)]


def sensitivity_suite(base: AbmConfig, parameter: str, values=None, k_grid=DEFAULT_K_GRID,
                      replicates: int = 10, n_values: int = 5, statistic: str = "median",
                      workers: Optional[int] = 1, base_seed: Optional[int] = None) -> SensitivityResult:
    """K* while one parameter varies over its tested range."""
    if parameter not in SENSITIVITY_RANGES:
        raise ValueError(f"parameter must be one of {sorted(SENSITIVITY_RANGES)}, got {parameter!r}")
    if values is None:
        values = np.linspace(*SENSITIVITY_RANGES[parameter], n_values)
    values = np.asarray(values, dtype=float)
    k_stars, grads = [], []
    for v in values:
        rep = k_sweep(base.with_params(**{parameter: float(v)}), k_grid, replicates, statistic,
                      workers=workers, base_seed=base_seed)
        k_stars.append(rep.k_star)
        grads.append(rep.max_gradient)
    return SensitivityResult(parameter, values, k_stars, grads)


# -- deterministic (ODE) sweeps ------------------------------------------------

RECOVERY_EPSILONS = (0.01, 0.05, 0.10, 0.25)


def epsilon_sweep(eps_grid=RECOVERY_EPSILONS, alpha: float = 1.0, beta: float = 0.5,
                  h_start: float = 0.0, h_target: float = 0.5, d_fixed: float = 0.0) -> dict:
    """Recovery time from near-total capability loss across residual relearning capacity."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    times = np.array([
        ode.recovery_time(ModelParams(alpha=alpha, beta=beta, epsilon=float(e)), h_start, h_target, d_fixed)
        for e in eps_grid
    ])
    ratio = times[0] / times[-1]
    return dict(epsilon=eps_grid, time=times, ratio=float(ratio),
                rows=[dict(epsilon=float(e), recovery_time=float(t)) for e, t in zip(eps_grid, times)])


def _ode_equilibrium(h0, d0, t_end, dt, **coeffs):
    return ode.integrate_final(h0, d0, t_end, dt, **coeffs)


@dataclass
class OdeGrid:
    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    h: np.ndarray       # (len(y), len(x))
    d: np.ndarray
    markers: list = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return np.vectorize(ode.basin_label)(self.h, self.d)

    def rows(self) -> list[dict]:
        return [{self.y_name: float(yv), self.x_name: float(xv), "h": float(self.h[i, j]),
                 "d": float(self.d[i, j]), "label": ode.basin_label(self.h[i, j], self.d[i, j])}
                for i, yv in enumerate(self.y) for j, xv in enumerate(self.x)]


def historical_markers(k_ai: float = 1.0, alpha: float = 1.0, beta: float = 0.5, delta: float = 0.5,
                       epsilon: float = 0.01, initial: ode.SystemState = ode.AUTONOMOUS_START,
                       t_end: float = 2000.0, dt: float = 0.1) -> list[dict]:
    """ODE equilibria of the historical technology regimes.

    Cost maps to adoption sensitivity through :func:`cost_to_gamma`.
    """
    out = []
    for name, spec in HISTORICAL_PRESETS.items():
        gamma = cost_to_gamma(spec["cost"])
        h, d = _ode_equilibrium(initial.h, initial.d, t_end, dt, alpha=alpha, beta=beta, gamma=gamma,
                                delta=delta, epsilon=epsilon, k_ai=k_ai, scope=spec["scope"])
        out.append(dict(name=name, cost=spec["cost"], scope=spec["scope"], gamma=gamma, k=k_ai,
                        equilibrium_h=float(h), equilibrium_d=float(d), label=ode.basin_label(float(h), float(d))))
    return out


def gamma_delta_grid(n: int = 100, gamma_range=(0.01, 1.0), delta_range=(0.01, 1.0), k_ai: float = 0.7,
                     alpha: float = 1.0, beta: float = 0.5, epsilon: float = 0.01, scope: float = 0.7,
                     initial: ode.SystemState = ode.AUTONOMOUS_START, t_end: float = 2000.0,
                     dt: float = 0.1, marker_k: float = 1.0) -> OdeGrid:
    """ODE equilibria over adoption sensitivity x social pressure, plus historical markers."""
    if n < 2:
        raise ValueError("grid counts must be >= 2")
    g = np.linspace(*gamma_range, n)
    dl = np.linspace(*delta_range, n)
    G, DL = np.meshgrid(g, dl)
    h, d = _ode_equilibrium(np.full(G.shape, initial.h), initial.d, t_end, dt, alpha=alpha, beta=beta,
                            gamma=G, delta=DL, epsilon=epsilon, k_ai=k_ai, scope=scope)
    markers = historical_markers(marker_k, alpha, beta, 0.5, epsilon, initial, t_end, dt)
    return OdeGrid("gamma", "delta", g, dl, h, d, markers)


def cost_scope_grid(n: int = 100, cost_range=(0.0, 1.0), scope_range=(0.01, 1.0), k_ai: float = 1.0,
                    alpha: float = 1.0, beta: float = 0.5, delta: float = 0.5, epsilon: float = 0.01,
                    initial: ode.SystemState = ode.AUTONOMOUS_START, t_end: float = 2000.0,
                    dt: float = 0.1) -> OdeGrid:
    """ODE equilibria on the cost/scope plane where the historical regimes sit.

    Narrow windows (e.g. ``cost_range=scope_range=(0.4, 0.8)`` with ``n=120``)
    give a zoom onto the tipping boundary.
    """
    if n < 2:
        raise ValueError("grid counts must be >= 2")
    c = np.linspace(*cost_range, n)
    s = np.linspace(*scope_range, n)
    C, S = np.meshgrid(c, s)
    gamma = np.clip(1.0 - C, 0.01, 1.0)
    h, d = _ode_equilibrium(np.full(C.shape, initial.h), initial.d, t_end, dt, alpha=alpha, beta=beta,
                            gamma=gamma, delta=delta, epsilon=epsilon, k_ai=k_ai, scope=S)
    markers = historical_markers(k_ai, alpha, beta, delta, epsilon, initial, t_end, dt)
    return OdeGrid("cost", "scope", c, s, h, d, markers)


def initial_condition_grid(h0_grid=None, scope_grid=None, params: Optional[ModelParams] = None,
                           d0: float = 0.1, t_end: float = 2000.0, dt: float = 0.1) -> OdeGrid:
    """ODE equilibria over initial capability x scope at fixed parameters."""
    params = params if params is not None else ModelParams(k_ai=0.7)
    h0 = np.linspace(0.0, 1.0, 21) if h0_grid is None else np.asarray(h0_grid, dtype=float)
    sc = np.linspace(0.05, 1.0, 20) if scope_grid is None else np.asarray(scope_grid, dtype=float)
    S, H0 = np.meshgrid(sc, h0)
    c = ode._coeffs(params)
    c["scope"] = S
    h, d = _ode_equilibrium(H0, d0, t_end, dt, **c)
    return OdeGrid("scope", "h0", sc, h0, h, d)


def monotone_columns(grid: OdeGrid, tol: float = 1e-9) -> np.ndarray:
    """Per column (fixed x), whether the final H never decreases as the row variable grows."""
    return np.all(np.diff(grid.h, axis=0) >= -tol, axis=0)
