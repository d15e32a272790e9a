"""Mean-field capability/delegation dynamics.

The state is a pair ``(h, d)`` in the unit square: ``h`` is human capability
and ``d`` the fraction of tasks delegated to the AI.  The right-hand side is

    dh/dt = alpha (h + eps)(1 - h)(1 - u) - beta h u
    dd/dt = gamma (K - h)(1 - d) d + delta d (1 - d) d_mean

where ``u = scope * d`` is the effective (displaceable) delegation.  With
``coupling="ceiling"`` the scope instead caps delegation: ``u = d`` and the
logistic factor ``(1 - d)`` of the delegation equation becomes ``(1 - d/scope)``.

Everything here is deterministic and side-effect free.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

COUPLINGS = ("scaled", "ceiling")
MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Rates and couplings of the capability/delegation model.

    Defaults are the baseline used throughout the sweeps.
    """

    alpha: float = 0.05
    beta: float = 0.03
    gamma: float = 0.5
    delta: float = 0.5
    epsilon: float = 0.01
    k_ai: float = 0.9
    scope: float = 0.7
    coupling: str = "scaled"

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "epsilon", "k_ai", "scope"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        # delta = 0 switches social pressure off (sensitivity sweeps go down to 0)
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5], got {self.epsilon}")
        if not 0.0 <= self.k_ai <= 1.2:
            raise ValueError(f"k_ai must lie in [0, 1.2], got {self.k_ai}")
        if not 0.0 < self.scope <= 1.0:
            raise ValueError(f"scope must lie in (0, 1], got {self.scope}")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}, got {self.coupling!r}")

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SystemState:
    h: float
    d: float

    def __post_init__(self):
        for name in ("h", "d"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"state.{name} must be finite, got {value}")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"state.{name} must lie in [0, 1], got {value}")


AUTONOMOUS_START = SystemState(0.95, 0.02)
DEPENDENT_START = SystemState(0.05, 0.95)


@dataclass
class Trajectory:
    times: np.ndarray
    h: np.ndarray
    d: np.ndarray

    @property
    def states(self) -> list[SystemState]:
        return [SystemState(float(a), float(b)) for a, b in zip(self.h, self.d)]

    @property
    def final(self) -> SystemState:
        return SystemState(float(self.h[-1]), float(self.d[-1]))

    def __len__(self):
        return len(self.times)


@dataclass
class FixedPointReport:
    location: SystemState
    eigenvalues: tuple[float, float]
    stability: str
    label: str
    # FP1 is only a fixed point when epsilon == 0; its eigenvalues are quoted under that convention
    regularized_away: bool = False


def _derivs(h, d, d_mean, alpha, beta, gamma, delta, epsilon, k_ai, scope, ceiling=False):
    """Vectorised right-hand side; every argument may be an array."""
    if ceiling:
        u = d
        room = 1.0 - d / scope
    else:
        u = scope * d
        room = 1.0 - d
    dh = alpha * (h + epsilon) * (1.0 - h) * (1.0 - u) - beta * h * u
    dd = gamma * (k_ai - h) * room * d + delta * d * room * d_mean
    return dh, dd


def _coeffs(params: ModelParams) -> dict:
    return dict(alpha=params.alpha, beta=params.beta, gamma=params.gamma,
                delta=params.delta, epsilon=params.epsilon, k_ai=params.k_ai,
                scope=params.scope, ceiling=params.coupling == "ceiling")


def rhs(params: ModelParams, state: SystemState, d_mean: float) -> tuple[float, float]:
    """Time derivatives ``(dh/dt, dd/dt)`` at ``state``.

    ``d_mean`` is the population-average delegation felt through social
    pressure; mean-field callers pass ``state.d``.  Derivatives are not clamped.
    """
    if not math.isfinite(d_mean):
        raise ValueError(f"d_mean must be finite, got {d_mean}")
    if not 0.0 <= d_mean <= 1.0:
        raise ValueError(f"d_mean must lie in [0, 1], got {d_mean}")
    dh, dd = _derivs(state.h, state.d, d_mean, **_coeffs(params))
    return float(dh), float(dd)


def _rk4_step(h, d, dt, c):
    k1h, k1d = _derivs(h, d, d, **c)
    h2, d2 = h + 0.5 * dt * k1h, d + 0.5 * dt * k1d
    k2h, k2d = _derivs(h2, d2, d2, **c)
    h3, d3 = h + 0.5 * dt * k2h, d + 0.5 * dt * k2d
    k3h, k3d = _derivs(h3, d3, d3, **c)
    h4, d4 = h + dt * k3h, d + dt * k3d
    k4h, k4d = _derivs(h4, d4, d4, **c)
    h = h + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
    d = d + dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
    return np.clip(h, 0.0, 1.0), np.clip(d, 0.0, 1.0)


def _n_steps(t_end: float, dt: float) -> int:
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if not (t_end >= dt and math.isfinite(t_end)):
        raise ValueError(f"t_end must be finite and >= dt, got t_end={t_end}, dt={dt}")
    return int(math.floor(t_end / dt + 1e-9))


def integrate(params: ModelParams, initial: SystemState, t_end: float,
              dt: float = 0.1) -> Trajectory:
    """Fixed-step RK4 with the mean-field closure ``d_mean = d``.

    States are clamped to the unit square after every full step.  The
    trajectory holds ``floor(t_end/dt) + 1`` samples including the start.
    """
    n = _n_steps(t_end, dt)
    c = _coeffs(params)
    hs = np.empty(n + 1)
    ds = np.empty(n + 1)
    hs[0], ds[0] = initial.h, initial.d
    h, d = np.float64(initial.h), np.float64(initial.d)
    for i in range(n):
        h, d = _rk4_step(h, d, dt, c)
        if not (math.isfinite(h) and math.isfinite(d)):
            raise FloatingPointError(f"non-finite state at step {i + 1} (t={(i + 1) * dt:g}): h={h}, d={d}")
        hs[i + 1], ds[i + 1] = h, d
    return Trajectory(np.arange(n + 1) * dt, hs, ds)


def integrate_final(h0, d0, t_end: float, dt: float = 0.1, **coeffs):
    """Vectorised RK4 returning only the final states.

    ``h0``, ``d0`` and any coefficient (alpha, beta, gamma, delta, epsilon,
    k_ai, scope) may be arrays that broadcast together, which is how the
    parameter grids evaluate thousands of ODE equilibria at once.
    """
    n = _n_steps(t_end, dt)
    c = dict(coeffs)
    c.setdefault("ceiling", False)
    h = np.asarray(h0, dtype=float)
    d = np.asarray(d0, dtype=float)
    h, d = np.broadcast_arrays(h, d, *[np.asarray(v) for k, v in c.items() if k != "ceiling"])[:2]
    h, d = h.copy(), d.copy()
    for i in range(n):
        h, d = _rk4_step(h, d, dt, c)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(d))):
        raise FloatingPointError("non-finite state in vectorised integration")
    return h, d


def jacobian(params: ModelParams, state: SystemState) -> np.ndarray:
    """Analytic 2x2 Jacobian of the mean-field system at ``state``."""
    a, b, g, dl = params.alpha, params.beta, params.gamma, params.delta
    e, k, s = params.epsilon, params.k_ai, params.scope
    h, d = state.h, state.d
    if params.coupling == "ceiling":
        j11 = a * (1 - 2 * h - e) * (1 - d) - b * d
        j12 = -a * (h + e) * (1 - h) - b * h
        j21 = -g * d * (1 - d / s)
        j22 = g * (k - h) * (1 - 2 * d / s) + dl * (2 * d - 3 * d * d / s)
    else:
        j11 = a * (1 - 2 * h - e) * (1 - s * d) - b * s * d
        j12 = -s * (a * (h + e) * (1 - h) + b * h)
        j21 = -g * d * (1 - d)
        j22 = (1 - 2 * d) * (g * (k - h) + dl * d) + dl * d * (1 - d)
    return np.array([[j11, j12], [j21, j22]])


def classify_eigenvalues(eigenvalues: Sequence[float]) -> str:
    ev = [float(np.real(x)) for x in eigenvalues]
    if any(abs(x) < MARGINAL_TOL for x in ev):
        return "marginal"
    if all(x < 0 for x in ev):
        return "stable-node"
    if all(x > 0 for x in ev):
        return "unstable-node"
    return "saddle"


def _require_scaled(params: ModelParams, what: str):
    if params.coupling != "scaled":
        raise ValueError(f"{what} has closed forms only for coupling='scaled'")


def boundary_fixed_points(params: ModelParams) -> list[FixedPointReport]:
    """FP1 = (0, 0), FP2 = (1, 0), FP3 = (0, 1) with closed-form eigenvalues.

    The Jacobian is triangular at all three corners, so the eigenvalues are
    its diagonal.  FP1 is reported under epsilon = 0.  At FP3 the first
    eigenvalue is ``alpha (1 - eps)(1 - scope) - beta scope``, which is
    ``-beta`` for full scope.
    """
    _require_scaled(params, "boundary_fixed_points")
    a, b, g, dl = params.alpha, params.beta, params.gamma, params.delta
    e, k, s = params.epsilon, params.k_ai, params.scope
    spectra = [
        ("FP1", SystemState(0.0, 0.0), (a, g * k)),
        ("FP2", SystemState(1.0, 0.0), (-a * (1 + e), g * (k - 1))),
        ("FP3", SystemState(0.0, 1.0), (a * (1 - e) * (1 - s) - b * s, -(g * k + dl))),
    ]
    return [
        FixedPointReport(loc, ev, classify_eigenvalues(ev), label,
                         regularized_away=(label == "FP1" and e > 0))
        for label, loc, ev in spectra
    ]


def h_nullcline(params: ModelParams, h) -> np.ndarray:
    """Delegation level at which dh/dt = 0; NaN where it leaves [0, 1]."""
    _require_scaled(params, "h_nullcline")
    h = np.asarray(h, dtype=float)
    a, b, e, s = params.alpha, params.beta, params.epsilon, params.scope
    learn = a * (h + e) * (1 - h)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = learn / (s * (learn + b * h))
    return np.where((d >= 0) & (d <= 1), d, np.nan)


def d_nullcline(params: ModelParams, h) -> np.ndarray:
    """Interior branch of dd/dt = 0, ``gamma (h - K) / delta``; NaN where negative."""
    h = np.asarray(h, dtype=float)
    if params.delta == 0:
        return np.full_like(h, np.nan)
    d = params.gamma * (h - params.k_ai) / params.delta
    return np.where((d >= 0) & (d <= 1), d, np.nan)


def nullclines(params: ModelParams, h_grid) -> tuple[np.ndarray, np.ndarray]:
    h_grid = np.asarray(h_grid, dtype=float)
    if np.any((h_grid < 0) | (h_grid > 1)):
        raise ValueError("h_grid must lie within [0, 1]")
    return h_nullcline(params, h_grid), d_nullcline(params, h_grid)


def _nullcline_gap(params: ModelParams, h: float) -> float:
    a, b, e, s = params.alpha, params.beta, params.epsilon, params.scope
    learn = a * (h + e) * (1 - h)
    return learn / (s * (learn + b * h)) - params.gamma * (h - params.k_ai) / params.delta


def interior_saddle(params: ModelParams, tol: float = 1e-10) -> Optional[FixedPointReport]:
    """Crossing of the two nullclines inside the unit square, if any.

    Found by bisection on ``h`` in ``(K, 1)``; at most one crossing exists there.
    """
    _require_scaled(params, "interior_saddle")
    if params.k_ai >= 1 or params.delta == 0:
        return None
    lo, hi = max(params.k_ai, 0.0) + 1e-6, 1.0 - 1e-6
    if lo >= hi:
        return None
    f_lo, f_hi = _nullcline_gap(params, lo), _nullcline_gap(params, hi)
    if f_lo * f_hi > 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = _nullcline_gap(params, mid)
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    h = 0.5 * (lo + hi)
    d = params.gamma * (h - params.k_ai) / params.delta
    if not (0 < h < 1 and 0 < d < 1):
        return None
    loc = SystemState(h, d)
    ev = np.linalg.eigvals(jacobian(params, loc))
    ev = tuple(sorted(float(np.real(x)) for x in ev))
    return FixedPointReport(loc, ev, classify_eigenvalues(ev), "interior")


def basin_label(h: float, d: float) -> str:
    if h > 0.9 and d < 0.1:
        return "autonomous"
    if h < 0.1 and d > 0.9:
        return "dependent"
    return "undecided"


def classify_basin(params: ModelParams, initial: SystemState,
                   t_end: float = 2000.0, dt: float = 0.1) -> str:
    """Label the attractor reached from ``initial``: autonomous, dependent or undecided."""
    h, d = integrate_final(initial.h, initial.d, t_end, dt, **_coeffs(params))
    return basin_label(float(h), float(d))


def equilibrium_vs_k(params: ModelParams, k_grid, initial: SystemState = AUTONOMOUS_START,
                     t_end: float = 2000.0, dt: float = 0.1) -> np.ndarray:
    """Long-run capability for each AI capability in ``k_grid`` (one branch)."""
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any((k_grid < 0) | (k_grid > 1.2)):
        raise ValueError("k_grid must lie within [0, 1.2]")
    c = _coeffs(params)
    c["k_ai"] = k_grid
    h, _ = integrate_final(np.full_like(k_grid, initial.h), initial.d, t_end, dt, **c)
    return h


class UnreachableTargetError(ValueError):
    """The capability target cannot be reached because dh/dt <= 0 on the way."""


RECOVERY_PRESET = dict(alpha=1.0, beta=0.5, h_start=0.0, h_target=0.5, d_fixed=0.0)


def recovery_time(params: ModelParams, h_start: float, h_target: float, d_fixed: float = 0.0,
                  dt: float = 1e-3, horizon: float = 1e5) -> float:
    """Time for capability to climb from ``h_start`` to ``h_target`` at fixed delegation.

    Integrates ``dh/dt = alpha (h + eps)(1 - h)(1 - d) - beta h d`` with RK4 and
    interpolates the crossing linearly.  Returns ``math.inf`` when the target
    lies beyond ``horizon``; raises :class:`UnreachableTargetError` when the
    drift is non-positive somewhere on the path.
    """
    if not 0.0 <= h_start <= h_target <= 1.0:
        raise ValueError(f"need 0 <= h_start <= h_target <= 1, got {h_start}, {h_target}")
    if not 0.0 <= d_fixed < 1.0:
        raise ValueError(f"d_fixed must lie in [0, 1), got {d_fixed}")
    if h_start == h_target:
        return 0.0
    a, b, e = params.alpha, params.beta, params.epsilon

    def drift(h):
        return a * (h + e) * (1 - h) * (1 - d_fixed) - b * h * d_fixed

    path = np.linspace(h_start, h_target, 4001)
    rates = drift(path)
    if np.any(rates[:-1] <= 0) or (h_target < 1 and rates[-1] <= 0):
        raise UnreachableTargetError(
            f"dh/dt <= 0 between h={h_start} and h={h_target} (d={d_fixed}); target unreachable")
    # h = 1 is approached only asymptotically
    if h_target == 1.0 or (h_target - h_start) / rates.max() > horizon:
        return math.inf

    t, h = 0.0, float(h_start)
    max_steps = int(math.ceil(horizon / dt))
    for _ in range(max_steps):
        k1 = drift(h)
        k2 = drift(h + 0.5 * dt * k1)
        k3 = drift(h + 0.5 * dt * k2)
        k4 = drift(h + dt * k3)
        h_next = h + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if h_next >= h_target:
            return t + dt * (h_target - h) / (h_next - h)
        t, h = t + dt, h_next
    return math.inf


# -- two-skill extension -------------------------------------------------------

SCENARIOS = ("A", "B", "C")


@dataclass(frozen=True)
class TwoSkillState:
    h1: float = 0.8
    h2: float = 0.8
    d1: float = 0.1
    d2: float = 0.1
    tau1: float = 0.5
    tau2: float = 0.5

    def __post_init__(self):
        for name in ("h1", "h2", "d1", "d2", "tau1", "tau2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.tau1 + self.tau2 - 1.0) > 1e-12:
            raise ValueError("tau1 + tau2 must equal 1")


@dataclass
class TwoSkillTrajectory:
    scenario: str
    times: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray

    @property
    def aggregate(self) -> np.ndarray:
        return 0.5 * (self.h1 + self.h2)


def _two_skill_derivs(y, p1, p2, realloc):
    h1, h2, d1, d2 = y
    u1, u2 = p1.scope * d1, p2.scope * d2
    # skill 2 receives the budget freed by delegating skill 1 when reallocating
    tau2 = 0.5 + 0.5 * u1 if realloc else 0.5
    learn1 = p1.alpha * (h1 + p1.epsilon) * (1 - h1) * (1 - u1)
    learn2 = p2.alpha * (tau2 / 0.5) * (h2 + p2.epsilon) * (1 - h2) * (1 - u2)
    dh1 = learn1 - p1.beta * h1 * u1
    dh2 = learn2 - p2.beta * h2 * u2
    dd1 = p1.gamma * (p1.k_ai - h1) * (1 - d1) * d1 + p1.delta * d1 * (1 - d1) * d1
    dd2 = p2.gamma * (p2.k_ai - h2) * (1 - d2) * d2 + p2.delta * d2 * (1 - d2) * d2
    return np.array([dh1, dh2, dd1, dd2])


def simulate_two_skill(params1: ModelParams, params2: ModelParams, scenario: str,
                       t_end: float = 500.0, dt: float = 0.1,
                       initial: TwoSkillState = TwoSkillState()) -> TwoSkillTrajectory:
    """Two skills sharing one unit time budget.

    Each skill follows the capability equation with its learning rate scaled by
    ``tau_i / 0.5``.  Scenario A keeps the budget split evenly; B moves the
    time freed by delegating skill 1 onto skill 2 (``tau2 = 0.5 + 0.5 u1``);
    C is B with the AI equally capable at both skills (skill 2 takes skill 1's
    K and scope).
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if scenario == "C":
        params2 = params2.replace(k_ai=params1.k_ai, scope=params1.scope)
    realloc = scenario in ("B", "C")
    n = _n_steps(t_end, dt)
    out = np.empty((n + 1, 4))
    y = np.array([initial.h1, initial.h2, initial.d1, initial.d2], dtype=float)
    out[0] = y
    f = lambda z: _two_skill_derivs(z, params1, params2, realloc)
    for i in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = np.clip(y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0)
        out[i + 1] = y
    h1, h2, d1, d2 = out.T
    tau2 = 0.5 + 0.5 * params1.scope * d1 if realloc else np.full(n + 1, 0.5)
    return TwoSkillTrajectory(scenario, np.arange(n + 1) * dt, h1, h2, d1, d2, 1.0 - tau2, tau2)


def two_skill_k_sweep(params1: ModelParams, params2: ModelParams, k_grid,
                      t_end: float = 500.0, dt: float = 0.1) -> dict[str, np.ndarray]:
    """Equilibrium aggregate capability per scenario as skill-1 AI capability varies."""
    result = {}
    for scenario in SCENARIOS:
        result[scenario] = np.array([
            simulate_two_skill(params1.replace(k_ai=float(k)), params2, scenario, t_end, dt).aggregate[-1]
            for k in k_grid
        ])
    return result
