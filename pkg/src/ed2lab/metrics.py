"""Evaluation statistics: test-return mean/std, RMSD, seed summaries, bootstrap CIs, EMA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass
class EvalPhase:
    env_step: int
    returns: list

    def __post_init__(self):
        self.returns = [float(r) for r in self.returns]
        if not all(math.isfinite(r) for r in self.returns):
            raise ValueError(f"non-finite test return at step {self.env_step}")


@dataclass
class RunSeries:
    seed: int
    phases: list = field(default_factory=list)
    config_hash: str = ""

    def __post_init__(self):
        steps = [p.env_step for p in self.phases]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("evaluation steps must be strictly increasing")

    def averages(self) -> np.ndarray:
        return np.array([np.mean(p.returns) for p in self.phases])


def mean_std_return(phase: EvalPhase) -> tuple[float, float]:
    """Sample mean and (N - 1)-denominator std of the test returns."""
    r = np.asarray(phase.returns, dtype=np.float64)
    if r.size < 2:
        raise ValueError("need at least two test returns for a standard deviation")
    return float(r.mean()), float(r.std(ddof=1))


def rmsd(averages, lag: int = 20) -> float:
    """Root mean squared deterioration between phase averages `lag` phases apart.

    Only the len - lag valid pairs enter the mean.
    """
    x = np.asarray(averages.averages() if isinstance(averages, RunSeries) else averages, dtype=np.float64)
    if lag < 1:
        raise ValueError("lag must be positive")
    if x.size <= lag:
        raise ValueError(f"series of length {x.size} is too short for lag {lag}")
    drop = np.maximum(x[:-lag] - x[lag:], 0.0)
    return float(np.sqrt(np.mean(drop * drop)))


@dataclass
class SeedSummary:
    finals: list
    median: float
    q1: float
    q3: float
    whiskers: tuple

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def seed_summary(runs) -> SeedSummary:
    """Final-phase average per seed with median, linear-interpolation quartiles and min/max whiskers.

    Accepts RunSeries objects or plain final values.
    """
    finals = [float(r.averages()[-1]) if isinstance(r, RunSeries) else float(r) for r in runs]
    if not finals:
        raise ValueError("need at least one run")
    q1, med, q3 = np.percentile(finals, [25, 50, 75], method="linear")
    return SeedSummary(finals, float(med), float(q1), float(q3), (min(finals), max(finals)))


def bootstrap_ci(values, level: float = 0.95, resamples: int = 10_000, rng=None) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two values")
    if np.all(x == x[0]):
        return float(x[0]), float(x[0])
    res = stats.bootstrap(
        (x,), np.mean, confidence_level=level, n_resamples=resamples,
        method="percentile", random_state=rng if rng is not None else np.random.default_rng(0),
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def ema_smooth(series, alpha: float = 0.4) -> np.ndarray:
    """s_1 = x_1, s_t = alpha x_t + (1 - alpha) s_{t-1}."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot smooth an empty series")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    out = np.empty_like(x)
    out[0] = x[0]
    for t in range(1, x.size):
        out[t] = alpha * x[t] + (1.0 - alpha) * out[t - 1]
    return out


def solve_step(steps, solved_fractions, threshold: float = 0.5):
    """First evaluation step at which at least `threshold` of test episodes solved the task, else None."""
    for s, f in zip(steps, solved_fractions):
        if f >= threshold:
            return int(s)
    return None
