"""Coupled human-capability / AI-delegation dynamics.

Modules:

- ``ode``: deterministic model, fixed points, nullclines, basins, recovery, two-skill variant
- ``abm``: stochastic agent-based model with crises, mandatory practice and turnover
- ``sweep``: Monte Carlo and ODE parameter sweeps, K* detection
- ``estimation``: decay-rate calibration, PISA fits, model comparison, K from benchmarks
- ``io`` / ``config`` / ``experiments`` / ``cli``: data, configuration and reproduction harness
"""
from .abm import AbmConfig
from .ode import ModelParams, SystemState

__version__ = "0.1.0"

__all__ = ["AbmConfig", "ModelParams", "SystemState", "__version__"]
