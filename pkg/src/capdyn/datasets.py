"""Typed records for the observational data the estimation stack consumes."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

TIME_UNITS = ("session", "week", "month", "year")
DOMAINS = ("MMLU", "HumanEval", "USMLE", "Bar")
SCORE_RANGE = (200.0, 700.0)
OECD = "OECD"


@dataclass(frozen=True)
class DeskillObservation:
    domain: str
    decline: float
    duration: float
    time_unit: str = "session"

    def __post_init__(self):
        # a zero decline is accepted (it maps to a zero rate)
        if not 0.0 <= self.decline < 1.0:
            raise ValueError(f"decline must lie in [0, 1), got {self.decline}")
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.time_unit not in TIME_UNITS:
            raise ValueError(f"time_unit must be one of {TIME_UNITS}, got {self.time_unit!r}")


@dataclass(frozen=True)
class BenchmarkScore:
    model: str
    release_date: dt.date
    domain: str
    ai_score: float
    human_baseline: float

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        if not 0.0 <= self.ai_score <= 1.2:
            raise ValueError(f"ai_score must lie in [0, 1.2], got {self.ai_score}")
        if not 0.0 < self.human_baseline <= 1.2:
            raise ValueError(f"human_baseline must lie in (0, 1.2], got {self.human_baseline}")


@dataclass(frozen=True)
class ScoreRecord:
    country: str
    year: int
    score: float

    def __post_init__(self):
        lo, hi = SCORE_RANGE
        if not lo <= self.score <= hi:
            raise ValueError(f"score must lie in [{lo:g}, {hi:g}], got {self.score}")


@dataclass(frozen=True)
class AdoptionRecord:
    country: str
    year: int
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")


@dataclass
class ScoreSeries:
    """One country's (or the OECD average's) score trajectory."""

    label: str
    years: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.years = np.asarray(self.years, dtype=float)
        self.scores = np.asarray(self.scores, dtype=float)
        if self.years.shape != self.scores.shape or self.years.ndim != 1:
            raise ValueError("years and scores must be 1-D arrays of equal length")
        if np.any(np.diff(self.years) <= 0):
            raise ValueError(f"{self.label}: years must be strictly increasing")

    def __len__(self):
        return len(self.years)


def interpolated_driver(years, values) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear in year, held constant beyond the first and last points."""
    years = np.asarray(years, dtype=float)
    values = np.asarray(values, dtype=float)
    return lambda t: np.interp(t, years, values)


@dataclass
class PanelDataset:
    series: list[ScoreSeries]
    drivers: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        labels = [s.label for s in self.series]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate country in panel")
        missing = [c for c in labels if c not in self.drivers]
        if missing:
            raise ValueError(f"no adoption driver for: {', '.join(missing)}")

    @classmethod
    def from_records(cls, scores: Iterable[ScoreRecord], adoption: Iterable[AdoptionRecord],
                     countries: Optional[Iterable[str]] = None, exclude=(OECD,)) -> "PanelDataset":
        by_country: dict[str, list] = {}
        for r in scores:
            by_country.setdefault(r.country, []).append((r.year, r.score))
        drv: dict[str, list] = {}
        for r in adoption:
            drv.setdefault(r.country, []).append((r.year, r.fraction))
        keep = list(countries) if countries is not None else [c for c in by_country if c not in exclude]
        series = []
        for c in keep:
            if c not in by_country:
                raise ValueError(f"country {c!r} has no score observations")
            pts = sorted(by_country[c])
            series.append(ScoreSeries(c, [p[0] for p in pts], [p[1] for p in pts]))
        drivers = {}
        for c in keep:
            if c in drv:
                pts = sorted(drv[c])
                drivers[c] = (np.array([p[0] for p in pts], float), np.array([p[1] for p in pts], float))
        return cls(series, drivers)

    @property
    def countries(self) -> list[str]:
        return [s.label for s in self.series]

    @property
    def n_obs(self) -> int:
        return sum(len(s) for s in self.series)

    def driver(self, country: str):
        return interpolated_driver(*self.drivers[country])

    def subset(self, countries: Iterable[str]) -> "PanelDataset":
        keep = list(countries)
        return PanelDataset([s for s in self.series if s.label in keep],
                            {c: self.drivers[c] for c in keep})
