"""Parameter estimation: decay-rate calibration, PISA fits, model comparison, K from benchmarks.

Score trajectories are modelled as ``score = h_max * H(t)`` where H follows the
capability equation with delegation replaced by an exposure driver ``a(t)``::

    dH/dt = alpha (H + eps)(1 - H)(1 - a) - beta H a

Information criteria use residuals divided by 500 (the PISA scale mean):
``AIC = n ln(RSS/n) + 2k`` and ``BIC = n ln(RSS/n) + k ln n``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.stats import qmc

from . import io, ode
from .datasets import (DOMAINS, OECD, BenchmarkScore, DeskillObservation, PanelDataset,
                       ScoreSeries)
from .ode import ModelParams

SCORE_SCALE = 500.0
H_MAX_SINGLE = 787.0
H_MAX_BOUNDS = (500.0, 1200.0)
RATE_BOUNDS = (1e-5, 1.0)
FIT_EPSILON = 0.01
FIT_DT = 0.25
N_STARTS = 16
CHI2_95 = 3.841458820694124
K_STAR_REFERENCE = 0.85
PARAM_COUNTS = {"linear": 2, "exponential": 2, "logistic": 2}


# -- decay-rate calibration -------------------------------------------------------

def beta_eff(obs: DeskillObservation) -> float:
    """Exponential decay rate that reproduces an observed fractional decline."""
    if not 0.0 <= obs.decline < 1.0:
        raise ValueError(f"decline must lie in [0, 1), got {obs.decline}")
    return -math.log1p(-obs.decline) / obs.duration


def predict_decline_curve(beta: float, d: float, h0: float, t_grid) -> np.ndarray:
    """``H(t) = h0 exp(-beta d t)``."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return h0 * np.exp(-beta * d * np.asarray(t_grid, dtype=float))


# -- data helpers -------------------------------------------------------------------

def oecd_series(records=None) -> ScoreSeries:
    records = io.ingest_csv("pisa") if records is None else records
    pts = sorted((r.year, r.score) for r in records if r.country == OECD)
    if not pts:
        raise ValueError("no OECD-average rows in the score data")
    return ScoreSeries(OECD, [p[0] for p in pts], [p[1] for p in pts])


def bundled_panel() -> PanelDataset:
    return PanelDataset.from_records(io.ingest_csv("pisa"), io.ingest_csv("adoption"))


def logistic_driver(a_start: float = 0.05, a_end: float = 0.90, t_start: float = 2003.0,
                    t_end: float = 2022.0, midpoint: float = 2012.0) -> Callable:
    """Logistic adoption ``L / (1 + exp(-r (t - midpoint)))`` through two anchor values."""
    if not 0 < a_start < a_end < 1:
        raise ValueError("need 0 < a_start < a_end < 1")

    def gap(r):
        level = a_start * (1 + math.exp(r * (midpoint - t_start)))
        return level / (1 + math.exp(-r * (t_end - midpoint))) - a_end

    rate = brentq(gap, 1e-6, 10.0)
    level = a_start * (1 + math.exp(rate * (midpoint - t_start)))
    return lambda t: level / (1.0 + np.exp(-rate * (np.asarray(t, dtype=float) - midpoint)))


def constant_driver(value: float) -> Callable:
    return lambda t: np.full(np.shape(t), float(value))


# -- fit results ------------------------------------------------------------------------

def _obs_key(labels, years, scores) -> str:
    h = hashlib.sha1()
    for lab, y, s in zip(labels, years, scores):
        h.update(f"{lab}|{y:g}|{s:.6g};".encode())
    return h.hexdigest()[:16]


@dataclass
class FitResult:
    model_kind: str
    parameters: dict
    fitted: np.ndarray
    observed: np.ndarray
    n_params: int
    obs_key: str
    data_kind: str = "single"
    warnings: list = field(default_factory=list)
    converged: bool = True

    @property
    def residuals(self) -> np.ndarray:
        return self.observed - self.fitted

    @property
    def n_obs(self) -> int:
        return len(self.observed)

    @property
    def rss(self) -> float:
        return float(np.sum(self.residuals ** 2))

    @property
    def rss_normalized(self) -> float:
        return self.rss / SCORE_SCALE ** 2

    @property
    def rmse(self) -> float:
        return math.sqrt(self.rss / self.n_obs)

    @property
    def r_squared(self) -> float:
        tss = float(np.sum((self.observed - self.observed.mean()) ** 2))
        if tss == 0.0:
            return 0.0
        return 1.0 - self.rss / tss

    @property
    def log_likelihood(self) -> float:
        return gaussian_loglik(self.rss_normalized, self.n_obs)

    @property
    def aic(self) -> float:
        return information_criteria(self.rss_normalized, self.n_obs, self.n_params)[0]

    @property
    def bic(self) -> float:
        return information_criteria(self.rss_normalized, self.n_obs, self.n_params)[1]

    def summary(self) -> dict:
        out = dict(model=self.model_kind, data=self.data_kind, n_obs=self.n_obs, n_params=self.n_params)
        out.update({k: float(v) for k, v in self.parameters.items() if np.ndim(v) == 0})
        out.update(r_squared=self.r_squared, rmse=self.rmse, aic=self.aic, bic=self.bic,
                   warnings="; ".join(self.warnings))
        return out


def information_criteria(rss: float, n: int, k: int) -> tuple[float, float]:
    if rss <= 0:
        rss = np.finfo(float).tiny
    base = n * math.log(rss / n)
    return base + 2 * k, base + k * math.log(n)


def gaussian_loglik(rss: float, n: int) -> float:
    """Maximised Gaussian log-likelihood with the variance profiled out."""
    rss = max(rss, np.finfo(float).tiny)
    return -0.5 * n * (math.log(2 * math.pi * rss / n) + 1.0)


# -- ODE integration on observation grids ---------------------------------------------------

@dataclass
class _Design:
    """Observation layout of one or more score series on a common time grid."""

    labels: list
    starts: np.ndarray          # first observation year per series
    first_scores: np.ndarray
    drive: np.ndarray           # (n_series, 2 * n_steps + 1) driver at half steps
    obs_series: np.ndarray      # series index per observation
    obs_step: np.ndarray        # grid index per observation
    observed: np.ndarray
    obs_years: np.ndarray
    t0: float
    dt: float
    n_steps: int

    @classmethod
    def build(cls, series: Sequence[ScoreSeries], drivers: Sequence[Callable], dt: float = FIT_DT):
        t0 = min(s.years[0] for s in series)
        t1 = max(s.years[-1] for s in series)
        n_steps = int(round((t1 - t0) / dt))
        half = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
        drive = np.array([np.clip(np.broadcast_to(f(half), half.shape), 0.0, 1.0) for f in drivers])
        obs_series, obs_step, observed, years = [], [], [], []
        for i, s in enumerate(series):
            steps = (s.years - t0) / dt
            if not np.allclose(steps, np.round(steps)):
                raise ValueError(f"{s.label}: observation years must lie on the {dt} grid")
            obs_series += [i] * len(s)
            obs_step += list(np.round(steps).astype(int))
            observed += list(s.scores)
            years += list(s.years)
        return cls([s.label for s in series], np.array([s.years[0] for s in series]),
                   np.array([s.scores[0] for s in series]), drive, np.array(obs_series),
                   np.array(obs_step), np.array(observed, float), np.array(years), t0, dt, n_steps)

    @property
    def key(self) -> str:
        return _obs_key([self.labels[i] for i in self.obs_series], self.obs_years, self.observed)

    def simulate(self, alpha: float, beta: float, h_max: float, epsilon: float = FIT_EPSILON) -> np.ndarray:
        """Predicted scores at the observations."""
        h = np.clip(self.first_scores / h_max, 0.0, 1.0)
        path = np.empty((self.n_steps + 1, len(h)))
        path[0] = h
        dt = self.dt

        def f(h, a):
            return alpha * (h + epsilon) * (1.0 - h) * (1.0 - a) - beta * h * a

        for i in range(self.n_steps):
            t = self.t0 + i * dt
            active = t >= self.starts - 1e-9
            a0, am, a1 = self.drive[:, 2 * i], self.drive[:, 2 * i + 1], self.drive[:, 2 * i + 2]
            k1 = f(h, a0)
            k2 = f(h + 0.5 * dt * k1, am)
            k3 = f(h + 0.5 * dt * k2, am)
            k4 = f(h + dt * k3, a1)
            h = np.where(active, np.clip(h + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0), h)
            path[i + 1] = h
        return h_max * path[self.obs_step, self.obs_series]


# -- bounded multi-start least squares ----------------------------------------------------------

def _multistart(residual_fn, lower, upper, n_starts: int, seed: int, alpha_index: Optional[int] = 0,
                extra_starts=()):
    """Best of ``n_starts`` Latin-hypercube starts (in the transformed space).

    Returns ``(x, cost, any_converged)``; ties in cost are broken by the lowest
    value of coordinate ``alpha_index``.
    """
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    starts = []
    if n_starts > 0:
        sample = qmc.LatinHypercube(d=len(lower), seed=seed).random(n_starts)
        starts = list(qmc.scale(sample, lower, upper))
    starts = [np.clip(np.asarray(s, float), lower, upper) for s in extra_starts] + starts
    best = None
    any_ok = False
    for x0 in starts:
        sol = least_squares(residual_fn, x0, bounds=(lower, upper), method="trf", x_scale="jac")
        any_ok |= sol.status > 0
        cand = (sol.cost, sol.x[alpha_index] if alpha_index is not None else 0.0)
        if best is None or cand[0] < best[1] * (1 - 1e-10) or (
                abs(cand[0] - best[1]) <= 1e-10 * max(best[1], 1e-300) and cand[1] < best[2]):
            best = (sol.x, sol.cost, cand[1])
    return best[0], 2.0 * best[1], any_ok


def _pinned(name, value, lo, hi, log_scale=False, rel=1e-4) -> Optional[str]:
    v, a, b = (math.log(value), math.log(lo), math.log(hi)) if log_scale else (value, lo, hi)
    span = b - a
    if abs(v - a) <= rel * span or abs(b - v) <= rel * span:
        return f"{name}={value:.6g} pinned at bound [{lo:g}, {hi:g}]"
    return None


def _ode_fit(design: _Design, kind: str, fixed_h_max: Optional[float], n_starts: int, seed: int,
             epsilon: float, h_max_bounds=H_MAX_BOUNDS, rate_bounds=RATE_BOUNDS,
             fixed_alpha: Optional[float] = None, extra_starts=()):
    """Least-squares ODE fit in (log alpha, log beta[, h_max]) coordinates."""
    log_lo, log_hi = math.log(rate_bounds[0]), math.log(rate_bounds[1])
    free_h = fixed_h_max is None

    def unpack(x):
        j = 0
        if fixed_alpha is None:
            alpha = math.exp(x[0])
            j = 1
        else:
            alpha = fixed_alpha
        beta = math.exp(x[j])
        h_max = x[j + 1] if free_h else fixed_h_max
        return alpha, beta, h_max

    def resid(x):
        return (design.observed - design.simulate(*unpack(x), epsilon)) / SCORE_SCALE

    lower = ([] if fixed_alpha is not None else [log_lo]) + [log_lo] + ([h_max_bounds[0]] if free_h else [])
    upper = ([] if fixed_alpha is not None else [log_hi]) + [log_hi] + ([h_max_bounds[1]] if free_h else [])
    x, rss, ok = _multistart(resid, lower, upper, n_starts, seed,
                             alpha_index=0 if fixed_alpha is None else None, extra_starts=extra_starts)
    alpha, beta, h_max = unpack(x)
    fitted = design.simulate(alpha, beta, h_max, epsilon)
    return alpha, beta, h_max, fitted, ok, x


def fit_ode_single(series: Optional[ScoreSeries] = None, driver: Optional[Callable] = None,
                   h_max: float = H_MAX_SINGLE, epsilon: float = FIT_EPSILON, n_starts: int = N_STARTS,
                   seed: int = 0, dt: float = FIT_DT) -> FitResult:
    """Fit (alpha, beta) to one score series with h_max held fixed."""
    series = oecd_series() if series is None else series
    if len(series) < 4:
        raise ValueError("need at least 4 observations")
    driver = logistic_driver() if driver is None else driver
    design = _Design.build([series], [driver], dt)
    alpha, beta, _, fitted, ok, _ = _ode_fit(design, "ode", h_max, n_starts, seed, epsilon)
    res = FitResult("ode", dict(alpha=alpha, beta=beta, h_max=h_max), fitted, design.observed, 2,
                    design.key, "single", converged=ok)
    _annotate(res, dict(alpha=(alpha, *RATE_BOUNDS), beta=(beta, *RATE_BOUNDS)))
    return res


def fit_ode_panel(panel: Optional[PanelDataset] = None, fixed_h_max: Optional[float] = None,
                  h_max_bounds=H_MAX_BOUNDS, epsilon: float = FIT_EPSILON, n_starts: int = N_STARTS,
                  seed: int = 0, dt: float = FIT_DT) -> FitResult:
    """Shared (alpha, beta, h_max) across countries, each driven by its own adoption series."""
    panel = bundled_panel() if panel is None else panel
    if fixed_h_max is None and len(panel.series) < 2:
        raise ValueError("a panel fit with free h_max needs at least 2 countries")
    if fixed_h_max is not None and not h_max_bounds[0] <= fixed_h_max <= h_max_bounds[1]:
        raise ValueError(f"h_max must lie in {list(h_max_bounds)}, got {fixed_h_max}")
    design = _Design.build(panel.series, [panel.driver(c) for c in panel.countries], dt)
    alpha, beta, h_max, fitted, ok, _ = _ode_fit(design, "ode", fixed_h_max, n_starts, seed, epsilon,
                                                 h_max_bounds)
    k = 3 if fixed_h_max is None else 2
    res = FitResult("ode", dict(alpha=alpha, beta=beta, h_max=h_max), fitted, design.observed, k,
                    design.key, "panel", converged=ok)
    bounds = dict(alpha=(alpha, *RATE_BOUNDS), beta=(beta, *RATE_BOUNDS))
    if fixed_h_max is None:
        bounds["h_max"] = (h_max, *h_max_bounds)
    _annotate(res, bounds)
    return res


def _annotate(res: FitResult, bounds: dict):
    if not res.converged:
        res.warnings.append("no start converged; best point reported")
    for name, (v, lo, hi) in bounds.items():
        msg = _pinned(name, v, lo, hi, log_scale=name != "h_max")
        if msg:
            res.warnings.append(msg)
    if res.r_squared < 0.5:
        res.warnings.append(f"poor fit (R^2 = {res.r_squared:.3f})")


# -- profile likelihood -----------------------------------------------------------------------------

@dataclass
class ProfileLikelihood:
    alpha: np.ndarray
    loglik: np.ndarray
    alpha_mle: float
    loglik_max: float
    ci: tuple[float, float]
    ci_open: tuple[bool, bool]   # CI reaches the lower/upper end of the grid

    @property
    def ci_decades(self) -> float:
        return math.log10(self.ci[1] / self.ci[0])

    def contains(self, alpha: float) -> bool:
        return self.ci[0] <= alpha <= self.ci[1]

    def rows(self) -> list[dict]:
        return [dict(alpha=float(a), loglik=float(l), deviance=float(2 * (self.loglik_max - l)))
                for a, l in zip(self.alpha, self.loglik)]


def profile_likelihood_alpha(data=None, alpha_grid=None, panel: bool = False, n_starts: int = 4,
                             seed: int = 0, epsilon: float = FIT_EPSILON, driver: Optional[Callable] = None,
                             h_max: float = H_MAX_SINGLE, dt: float = FIT_DT,
                             mle: Optional[FitResult] = None) -> ProfileLikelihood:
    """Profile log-likelihood of alpha with the other parameters re-optimised at each grid value.

    ``data`` is a :class:`ScoreSeries` (h_max fixed) or a :class:`PanelDataset`
    (h_max free).  The MLE is inserted into the grid.
    """
    if data is None:
        data = bundled_panel() if panel else oecd_series()
    is_panel = isinstance(data, PanelDataset)
    if alpha_grid is None:
        alpha_grid = np.logspace(-4, -1, 31)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if is_panel:
        design = _Design.build(data.series, [data.driver(c) for c in data.countries], dt)
        fixed_h = None
        mle = mle or fit_ode_panel(data, epsilon=epsilon, seed=seed, dt=dt)
    else:
        driver = logistic_driver() if driver is None else driver
        design = _Design.build([data], [driver], dt)
        fixed_h = h_max
        mle = mle or fit_ode_single(data, driver, h_max, epsilon, seed=seed, dt=dt)
    n = len(design.observed)
    a_hat = mle.parameters["alpha"]
    grid = np.unique(np.append(alpha_grid, a_hat))
    warm = [math.log(mle.parameters["beta"])] + ([mle.parameters["h_max"]] if is_panel else [])
    ll = np.empty(len(grid))
    for i, a in enumerate(grid):
        *_, fitted, _, x = _ode_fit(design, "ode", fixed_h, n_starts, seed, epsilon, fixed_alpha=float(a),
                                    extra_starts=[warm])
        ll[i] = gaussian_loglik(float(np.sum(((design.observed - fitted) / SCORE_SCALE) ** 2)), n)
        warm = list(x)
    ll_max = max(float(ll.max()), mle.log_likelihood)
    inside = 2 * (ll_max - ll) <= CHI2_95
    idx = np.flatnonzero(inside)
    ci = (float(grid[idx[0]]), float(grid[idx[-1]]))
    return ProfileLikelihood(grid, ll, a_hat, ll_max, ci, (bool(inside[0]), bool(inside[-1])))


# -- alternative models -----------------------------------------------------------------------------

ALT_KINDS = ("linear", "exponential", "logistic", "country-linear")


def _series_t(years):
    return np.asarray(years, float) - 2003.0


def _linear_lstsq(t, y):
    X = np.column_stack([np.ones_like(t), -t])
    if np.linalg.matrix_rank(X) < 2:
        raise ValueError("singular design: need at least two distinct years")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def fit_alt_model(kind: str, data=None, logistic_t0: float = 2012.0) -> FitResult:
    """Fit a phenomenological decline model to a single series or a panel.

    Single series: ``linear`` a - b t, ``exponential`` a exp(-r t), ``logistic``
    a / (1 + exp(r (t - t0))) with t0 fixed.  Panel: ``linear`` (pooled),
    ``exponential`` (per-country a_c, shared r) and ``country-linear``
    (per-country a_c, b_c).  Time t is in years since 2003.
    """
    if kind not in ALT_KINDS:
        raise ValueError(f"kind must be one of {ALT_KINDS}, got {kind!r}")
    data = oecd_series() if data is None else data
    if isinstance(data, PanelDataset):
        return _fit_alt_panel(kind, data)
    if kind == "country-linear":
        raise ValueError("country-linear needs a panel")
    t, y = _series_t(data.years), data.scores
    key = _obs_key([data.label] * len(t), data.years, y)
    if kind == "linear":
        a, b = _linear_lstsq(t, y)
        return FitResult("linear", dict(a=a, b=b), a - b * t, y, 2, key)
    if kind == "exponential":
        a0, b0 = _linear_lstsq(t, np.log(y))
        sol = least_squares(lambda p: (y - p[0] * np.exp(-p[1] * t)) / SCORE_SCALE, [math.exp(a0), b0])
        a, r = sol.x
        return FitResult("exponential", dict(a=a, r=r), a * np.exp(-r * t), y, 2, key)
    tc = logistic_t0 - 2003.0
    sol = least_squares(lambda p: (y - p[0] / (1 + np.exp(p[1] * (t - tc)))) / SCORE_SCALE,
                        [2 * y.mean(), 0.001], x_scale=[100.0, 0.01])
    a, r = sol.x
    return FitResult("logistic", dict(a=a, r=r, t0=logistic_t0), a / (1 + np.exp(r * (t - tc))), y, 2, key)


def _panel_arrays(panel: PanelDataset):
    labels, years, scores, idx = [], [], [], []
    for i, s in enumerate(panel.series):
        labels += [s.label] * len(s)
        years += list(s.years)
        scores += list(s.scores)
        idx += [i] * len(s)
    return labels, np.array(years), np.array(scores, float), np.array(idx)


def _fit_alt_panel(kind: str, panel: PanelDataset) -> FitResult:
    labels, years, y, idx = _panel_arrays(panel)
    t = _series_t(years)
    key = _obs_key(labels, years, y)
    n_c = len(panel.series)
    if kind == "linear":
        a, b = _linear_lstsq(t, y)
        return FitResult("linear", dict(a=a, b=b), a - b * t, y, 2, key, "panel")
    if kind == "country-linear":
        fitted = np.empty_like(y)
        params = {}
        for i, c in enumerate(panel.countries):
            m = idx == i
            a, b = _linear_lstsq(t[m], y[m])
            fitted[m] = a - b * t[m]
            params[f"a[{c}]"], params[f"b[{c}]"] = a, b
        return FitResult("country-linear", params, fitted, y, 2 * n_c, key, "panel")
    if kind == "exponential":
        def resid(p):
            return (y - p[idx] * np.exp(-p[-1] * t)) / SCORE_SCALE

        x0 = np.append([panel.series[i].scores.mean() for i in range(n_c)], 0.0)
        sol = least_squares(resid, x0)
        params = {f"a[{c}]": sol.x[i] for i, c in enumerate(panel.countries)}
        params["r"] = sol.x[-1]
        return FitResult("exponential", params, sol.x[idx] * np.exp(-sol.x[-1] * t), y, n_c + 1, key, "panel")
    raise ValueError(f"{kind} has no panel variant")


# -- comparison ----------------------------------------------------------------------------------------

@dataclass
class ComparisonTable:
    criterion: str
    rows: list

    @property
    def best(self) -> str:
        return self.rows[0]["model"]

    def order(self) -> list[str]:
        return [r["model"] for r in self.rows]

    def delta(self, model: str, criterion: Optional[str] = None) -> float:
        col = f"d_{criterion or self.criterion}"
        for r in self.rows:
            if r["model"] == model:
                return r[col]
        raise KeyError(model)


def compare_models(fits: Sequence[FitResult], criterion: str = "aic") -> ComparisonTable:
    """Rank fits by AIC or BIC with differences to the best model."""
    if criterion not in ("aic", "bic"):
        raise ValueError(f"criterion must be aic or bic, got {criterion!r}")
    if not fits:
        raise ValueError("no fits to compare")
    keys = {f.obs_key for f in fits}
    if len(keys) != 1:
        raise ValueError("fits were made on different observation sets")
    best_aic = min(f.aic for f in fits)
    best_bic = min(f.bic for f in fits)
    rows = [dict(model=f.model_kind, n_params=f.n_params, n_obs=f.n_obs, rss=f.rss, r_squared=f.r_squared,
                 aic=f.aic, bic=f.bic, d_aic=f.aic - best_aic, d_bic=f.bic - best_bic) for f in fits]
    rows.sort(key=lambda r: (r[criterion], r["n_params"]))
    return ComparisonTable(criterion, rows)


# -- recovery after removal -----------------------------------------------------------------------------

RECOVERY_SCENARIO = ModelParams(alpha=0.013, beta=0.1, k_ai=0.95, scope=1.0)


@dataclass
class RecoveryComparison:
    times: np.ndarray                 # shared grid starting at 0
    t_removal: float
    trajectories: dict                # model -> capability path
    baseline: dict                    # model -> pre-exposure value
    saddle_h: Optional[float]

    def at_removal(self, model: str) -> float:
        return float(np.interp(self.t_removal, self.times, self.trajectories[model]))

    def gain(self, model: str) -> float:
        return float(self.trajectories[model][-1] - self.at_removal(model))

    def gap_closed(self, model: str) -> float:
        gap = self.baseline[model] - self.at_removal(model)
        if abs(gap) < 1e-12:
            return 1.0
        return self.gain(model) / gap

    def rows(self) -> list[dict]:
        return [dict(t=float(t), **{m: float(v[i]) for m, v in self.trajectories.items()})
                for i, t in enumerate(self.times)]


def recovery_comparison(params: ModelParams = RECOVERY_SCENARIO,
                        initial: ode.SystemState = ode.SystemState(0.8, 0.1),
                        t_removal: float = 50.0, horizon: float = 50.0, dt: float = 0.1) -> RecoveryComparison:
    """Post-removal trajectories of the ODE and the three phenomenological models.

    Before removal the ODE (both equations) generates capability and delegation.
    Linear, exponential and logistic models are fitted to that capability as
    functions of cumulative exposure ``E(t) = int D dt``.  After removal D is 0:
    the ODE integrates with D held at 0, while the other models relearn along
    their fitted curves with E falling at unit rate to 0.
    """
    if t_removal < 0 or horizon <= 0:
        raise ValueError("need t_removal >= 0 and horizon > 0")
    n_pre = int(round(t_removal / dt))
    n_post = int(round(horizon / dt))
    times = dt * np.arange(n_pre + n_post + 1)
    if n_pre > 0:
        pre = ode.integrate(params, initial, n_pre * dt, dt)
        h_pre, d_pre = pre.h, pre.d
    else:
        h_pre, d_pre = np.array([initial.h]), np.array([initial.d])
    exposure = np.concatenate([[0.0], np.cumsum(0.5 * (d_pre[1:] + d_pre[:-1]) * dt)])

    # ODE after removal: D fixed at 0
    c = ode._coeffs(params)
    h = h_pre[-1]
    h_post = [h]
    for _ in range(n_post):
        h = float(ode.integrate_final(h, 0.0, dt, dt, **dict(c, gamma=0.0, delta=0.0))[0])
        h_post.append(h)
    traj = {"ode": np.concatenate([h_pre, h_post[1:]])}
    baseline = {"ode": float(initial.h)}

    e_post = np.maximum(exposure[-1] - dt * np.arange(1, n_post + 1), 0.0)
    e_all = np.concatenate([exposure, e_post])
    for kind, curve in _exposure_models(exposure, h_pre, initial.h).items():
        traj[kind] = curve(e_all)
        baseline[kind] = float(curve(np.array([0.0]))[0])
    saddle = ode.interior_saddle(params) if params.coupling == "scaled" else None
    return RecoveryComparison(times, n_pre * dt, traj, baseline,
                              None if saddle is None else saddle.location.h)


def _exposure_models(e, h, h0) -> dict:
    """Linear, exponential and logistic capability-vs-exposure curves fitted to (e, h)."""
    if len(e) < 3 or e[-1] <= 0:
        flat = lambda x: np.full(np.shape(x), float(h0))
        return {"linear": flat, "exponential": flat, "logistic": flat}
    a, b = _linear_lstsq(e, h)
    lin = lambda x, a=a, b=b: a - b * x
    sol = least_squares(lambda p: h - p[0] * np.exp(-p[1] * e), [h0, 1.0 / e[-1]])
    ea, er = sol.x
    expo = lambda x: ea * np.exp(-er * x)
    e_mid = 0.5 * e[-1]
    sol = least_squares(lambda p: h - p[0] / (1 + np.exp(p[1] * (e - e_mid))), [2 * h0, 1.0 / e[-1]])
    la, lr = sol.x
    logi = lambda x: la / (1 + np.exp(lr * (x - e_mid)))
    return {"linear": lin, "exponential": expo, "logistic": logi}


# -- benchmark-based K ----------------------------------------------------------------------------------

def k_ratio(score: BenchmarkScore) -> float:
    """Capped capability ratio ``min(ai / human, 1)``."""
    if score.human_baseline <= 0:
        raise ValueError("human_baseline must be > 0")
    return min(score.ai_score / score.human_baseline, 1.0)


def _round2(x) -> Decimal:
    return Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


@dataclass
class KBar:
    model: str
    release_date: object
    k_values: dict            # domain -> displayed (2-decimal) K_d
    kbar: float
    above_threshold: bool

    def row(self) -> dict:
        out = dict(model=self.model, release_date=str(self.release_date))
        out.update({d: self.k_values[d] for d in DOMAINS})
        out.update(kbar=self.kbar, above_threshold=self.above_threshold)
        return out


def kbar(scores: Sequence[BenchmarkScore], threshold: float = K_STAR_REFERENCE) -> KBar:
    """Unweighted mean of the four displayed domain ratios, shown to 2 decimals."""
    models = {s.model for s in scores}
    if len(models) != 1:
        raise ValueError(f"expected scores for one model, got {sorted(models)}")
    by_domain = {}
    for s in scores:
        if s.domain in by_domain:
            raise ValueError(f"duplicate domain {s.domain} for {s.model}")
        by_domain[s.domain] = s
    missing = [d for d in DOMAINS if d not in by_domain]
    if missing:
        raise ValueError(f"{scores[0].model}: missing domain(s) {', '.join(missing)}")
    shown = {d: _round2(k_ratio(by_domain[d])) for d in DOMAINS}
    mean = (sum(shown.values()) / 4).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)
    return KBar(scores[0].model, scores[0].release_date, {d: float(v) for d, v in shown.items()},
                float(mean), float(mean) >= threshold)


def kbar_table(scores: Optional[Sequence[BenchmarkScore]] = None,
               overrides: Optional[dict] = None) -> list[KBar]:
    """K-bar per model, ordered by release date.

    ``overrides`` maps ``(model, domain)`` to a replacement ``ai_score``.
    """
    scores = io.ingest_csv("benchmarks") if scores is None else list(scores)
    if overrides:
        scores = [BenchmarkScore(s.model, s.release_date, s.domain,
                                 overrides.get((s.model, s.domain), s.ai_score), s.human_baseline)
                  for s in scores]
    groups: dict[str, list] = {}
    for s in scores:
        groups.setdefault(s.model, []).append(s)
    out = [kbar(g) for g in groups.values()]
    out.sort(key=lambda r: (r.release_date, r.model))
    return out
