"""Agent-based version of the capability/delegation dynamics.

A population of agents on a complete graph.  Each step, in order:

1. AI availability: a crisis fires with probability ``p_crisis``; mandatory
   practice removes the AI deterministically on a periodic schedule.  Either
   makes the step AI-free (effective delegation 0 for everyone).
2. Practice: each agent delegates with probability ``scope * D_eff``.  A
   practising agent gains ``alpha (H + eps)(1 - H) dt``, a delegating agent
   loses ``beta H dt``; both then receive ``sigma_h`` Gaussian noise and H is
   clamped to [0, 1].
3. Adoption: ``D += [gamma (K - H)(1 - D) D + delta D (1 - D) D_avg] dt`` plus
   ``sigma_d`` noise, clamped, where ``D_avg`` is the mean delegation of the
   other agents and ``H`` is the capability at the start of the step.
4. Turnover: each agent is replaced with probability ``turnover_rate``; the
   entrant's capability is the population mean (or a fixed value) and its
   delegation the population-mean delegation.

Runs are vectorised over replicates: a batch of R runs is advanced as (R, N)
arrays, with every run reading only from its own seeded stream, so a run's
output does not depend on which batch it was computed in.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import rng as rng_mod
from .ode import ModelParams

ENTRY_MODES = ("population-mean", "fixed")


@dataclass(frozen=True)
class AbmConfig:
    params: ModelParams = field(default_factory=ModelParams)
    n_agents: int = 100
    t_steps: int = 200
    dt: float = 1.0
    sigma_h: float = 0.01
    sigma_d: float = 0.005
    p_crisis: float = 0.05
    practice_fraction: float = 0.0
    turnover_rate: float = 0.02
    entry_mode: str = "population-mean"
    h_entry: float = 0.5
    seed: int = 42
    init_h_mean: float = 0.8
    init_h_sd: float = 0.05
    init_d_mean: float = 0.1
    init_d_sd: float = 0.02
    equilibrium_window: int = 20
    persistent_crisis: bool = False
    # test hook: replace the Bernoulli delegation draw by its expectation
    expected_delegation: bool = False

    def __post_init__(self):
        if not isinstance(self.params, ModelParams):
            raise TypeError("params must be a ModelParams")
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.t_steps < 1:
            raise ValueError(f"t_steps must be >= 1, got {self.t_steps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        for name in ("sigma_h", "sigma_d", "init_h_sd", "init_d_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("p_crisis", "turnover_rate", "h_entry", "init_h_mean", "init_d_mean"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if not 0.0 <= self.practice_fraction <= 0.5:
            raise ValueError(f"practice_fraction must lie in [0, 0.5], got {self.practice_fraction}")
        if self.entry_mode not in ENTRY_MODES:
            raise ValueError(f"entry_mode must be one of {ENTRY_MODES}, got {self.entry_mode!r}")
        if not 1 <= self.equilibrium_window <= self.t_steps:
            raise ValueError("equilibrium_window must lie in [1, t_steps]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "AbmConfig":
        return replace(self, **changes)

    def with_params(self, **changes) -> "AbmConfig":
        return replace(self, params=self.params.replace(**changes))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AgentPopulation:
    h: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.h.shape != self.d.shape:
            raise ValueError("h and d must have the same shape")


@dataclass
class RunSummary:
    equilibrium_h: float
    min_h_during_crisis: Optional[float]
    mean_h: np.ndarray
    mean_d: np.ndarray
    crisis_steps: np.ndarray
    seed: int


@dataclass
class EnsembleStats:
    median: float
    mean: float
    q25: float
    q75: float
    values: np.ndarray

    @property
    def iqr(self) -> float:
        return self.q75 - self.q25

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "EnsembleStats":
        v = np.sort(np.asarray(values, dtype=float))
        q25, med, q75 = np.percentile(v, [25, 50, 75])
        return cls(float(med), float(np.mean(v)), float(q25), float(q75), v)


def _normals_width(n: int) -> int:
    return n + (n % 2)


def _step_width(n: int) -> int:
    # crisis draw, delegation draws, H noise, D noise, turnover draws
    return 1 + 2 * n + 2 * _normals_width(n)


def practice_step(step_index: int, fraction: float) -> bool:
    """True when the mandatory-practice schedule makes this step AI-free.

    A fraction ``f`` triggers on steps where ``floor((i + 1) f) > floor(i f)``,
    e.g. every fifth step for ``f = 0.2``.
    """
    if fraction <= 0:
        return False
    return math.floor((step_index + 1) * fraction + 1e-12) > math.floor(step_index * fraction + 1e-12)


def _init_from_uniforms(u: np.ndarray, config: AbmConfig):
    n = config.n_agents
    z = rng_mod.box_muller(u)
    h = np.clip(config.init_h_mean + config.init_h_sd * z[..., 0:2 * n:2], 0.0, 1.0)
    d = np.clip(config.init_d_mean + config.init_d_sd * z[..., 1:2 * n:2], 0.0, 1.0)
    return h, d


def init_population(config: AbmConfig, generator: Optional[np.random.Generator] = None) -> AgentPopulation:
    """Initial capabilities and delegation rates, one Box-Muller pair per agent."""
    generator = generator if generator is not None else rng_mod.stream(config.seed)
    h, d = _init_from_uniforms(generator.random(2 * config.n_agents), config)
    return AgentPopulation(h, d)


def _advance(h, d, block, config: AbmConfig, step_index: int):
    """One synchronous step for a batch; ``h``, ``d`` are (R, N), ``block`` is (R, S)."""
    p = config.params
    n = config.n_agents
    m = _normals_width(n)
    dt = config.dt
    u_crisis = block[:, 0]
    u_deleg = block[:, 1:1 + n]
    z_h = rng_mod.box_muller(block[:, 1 + n:1 + n + m])[:, :n]
    z_d = rng_mod.box_muller(block[:, 1 + n + m:1 + n + 2 * m])[:, :n]
    u_turn = block[:, 1 + n + 2 * m:1 + 2 * n + 2 * m]

    crisis = u_crisis < config.p_crisis
    ai_free = crisis | practice_step(step_index, config.practice_fraction)
    d_eff = np.where(ai_free[:, None], 0.0, d)
    ceiling = p.coupling == "ceiling"
    p_deleg = d_eff if ceiling else p.scope * d_eff

    gain = p.alpha * (h + p.epsilon) * (1.0 - h) * dt
    loss = p.beta * h * dt
    if config.expected_delegation:
        dh = (1.0 - p_deleg) * gain - p_deleg * loss
    else:
        dh = np.where(u_deleg < p_deleg, -loss, gain)
    h_new = np.clip(h + dh + config.sigma_h * z_h, 0.0, 1.0)

    if n > 1:
        d_avg = (d.sum(axis=1, keepdims=True) - d) / (n - 1)
    else:
        d_avg = d
    room = 1.0 - d / p.scope if ceiling else 1.0 - d
    dd = p.gamma * (p.k_ai - h) * room * d + p.delta * d * room * d_avg
    d_new = np.clip(d + dd * dt + config.sigma_d * z_d, 0.0, 1.0)
    if config.persistent_crisis:
        d_new = np.where(crisis[:, None], 0.0, d_new)

    if config.turnover_rate > 0:
        replaced = u_turn < config.turnover_rate
        if config.entry_mode == "fixed":
            entry_h = np.full((h.shape[0], 1), config.h_entry)
        else:
            entry_h = h_new.mean(axis=1, keepdims=True)
        entry_d = d_new.mean(axis=1, keepdims=True)
        h_new = np.where(replaced, entry_h, h_new)
        d_new = np.where(replaced, entry_d, d_new)
    return h_new, d_new, crisis


def step(pop: AgentPopulation, config: AbmConfig, step_index: int,
         generator: np.random.Generator) -> AgentPopulation:
    """Advance a single population by one step, drawing from ``generator``."""
    block = generator.random((1, _step_width(config.n_agents)))
    h, d, _ = _advance(pop.h[None, :], pop.d[None, :], block, config, step_index)
    return AgentPopulation(h[0], d[0])


@dataclass
class BatchResult:
    seeds: list
    mean_h: np.ndarray      # (R, T)
    mean_d: np.ndarray      # (R, T)
    crisis: np.ndarray      # (R, T) bool
    final_h: np.ndarray     # (R, N)
    final_d: np.ndarray     # (R, N)

    def equilibrium_h(self, window: int) -> np.ndarray:
        return self.mean_h[:, -window:].mean(axis=1)

    def min_h_during_crisis(self) -> np.ndarray:
        masked = np.where(self.crisis, self.mean_h, np.inf)
        lowest = masked.min(axis=1)
        return np.where(np.isfinite(lowest), lowest, np.nan)


def simulate_batch(config: AbmConfig, seeds: Sequence[int]) -> BatchResult:
    """Run one simulation per seed with identical configuration."""
    seeds = [int(s) for s in seeds]
    r, n, t = len(seeds), config.n_agents, config.t_steps
    width = _step_width(n)
    gens = [rng_mod.stream(s) for s in seeds]
    init_u = np.stack([g.random(2 * n) for g in gens])
    blocks = np.stack([g.random((t, width)) for g in gens])
    h, d = _init_from_uniforms(init_u, config)
    mean_h = np.empty((r, t))
    mean_d = np.empty((r, t))
    crisis = np.empty((r, t), dtype=bool)
    for i in range(t):
        h, d, crisis[:, i] = _advance(h, d, blocks[:, i, :], config, i)
        mean_h[:, i] = h.mean(axis=1)
        mean_d[:, i] = d.mean(axis=1)
    return BatchResult(seeds, mean_h, mean_d, crisis, h, d)


def summarize(batch: BatchResult, config: AbmConfig, index: int = 0) -> RunSummary:
    low = batch.min_h_during_crisis()[index]
    return RunSummary(
        equilibrium_h=float(batch.mean_h[index, -config.equilibrium_window:].mean()),
        min_h_during_crisis=None if math.isnan(low) else float(low),
        mean_h=batch.mean_h[index].copy(),
        mean_d=batch.mean_d[index].copy(),
        crisis_steps=np.flatnonzero(batch.crisis[index]),
        seed=batch.seeds[index],
    )


def run(config: AbmConfig) -> RunSummary:
    """One simulation seeded directly by ``config.seed``."""
    return summarize(simulate_batch(config, [config.seed]), config)


def replicate_seeds(base_seed: int, n_replicates: int) -> list[int]:
    return [rng_mod.mix(base_seed, r) for r in range(n_replicates)]


def ensemble_equilibria(config: AbmConfig, seeds: Sequence[int], batch_size: int = 50) -> np.ndarray:
    out = []
    for start in range(0, len(seeds), batch_size):
        batch = simulate_batch(config, seeds[start:start + batch_size])
        out.append(batch.equilibrium_h(config.equilibrium_window))
    return np.concatenate(out) if out else np.empty(0)


def run_ensemble(config: AbmConfig, n_replicates: int = 50, workers: int = 1) -> EnsembleStats:
    """Replicate ``r`` is seeded with ``mix(config.seed, r)``."""
    if n_replicates < 1:
        raise ValueError("n_replicates must be >= 1")
    seeds = replicate_seeds(config.seed, n_replicates)
    if workers > 1:
        from .parallel import map_ordered
        chunks = [seeds[i:i + 10] for i in range(0, len(seeds), 10)]
        parts = map_ordered(ensemble_equilibria, [(config, c) for c in chunks], workers)
        values = np.concatenate(parts)
    else:
        values = ensemble_equilibria(config, seeds)
    return EnsembleStats.from_values(values)
