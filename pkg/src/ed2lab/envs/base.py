from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    state_dim: int
    action_dim: int
    max_action: float
    episode_length: int
    init_noise_scale: float = 1.0

    def __post_init__(self):
        if self.max_action <= 0:
            raise ValueError("max_action must be positive")
        if self.episode_length < 1 or self.state_dim < 1 or self.action_dim < 1:
            raise ValueError("episode length and dimensions must be >= 1")
        if self.init_noise_scale < 0:
            raise ValueError("init_noise_scale must be non-negative")


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool
    truncated: bool
    info: dict = field(default_factory=dict)


class Env:
    """Analytic continuous-control task.

    Subclasses provide the nominal internal state, the per-coordinate half
    width of the uniform reset perturbation, `_advance(u)` and `_observe()`.
    Randomness enters only through `reset`.
    """

    spec: EnvSpec
    nominal_state: np.ndarray
    init_half_width: np.ndarray

    def __init__(self, spec: EnvSpec, seed: int | None = None):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.state = self.nominal_state.copy()
        self.t = 0

    @property
    def unwrapped(self) -> "Env":
        return self

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        noise = self.rng.uniform(-1.0, 1.0, size=self.nominal_state.shape)
        self.state = self.nominal_state + noise * self.init_half_width * self.spec.init_noise_scale
        self.t = 0
        self._on_reset()
        return self._observe()

    def step(self, action) -> StepResult:
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        if a.shape != (self.spec.action_dim,):
            raise ValueError(f"expected action of size {self.spec.action_dim}, got shape {np.shape(action)}")
        if np.isnan(a).any():
            raise ValueError("action contains NaN")
        u = np.clip(a, -self.spec.max_action, self.spec.max_action)
        reward, done, info = self._advance(u)
        self.t += 1
        truncated = not done and self.t >= self.spec.episode_length
        return StepResult(self._observe(), float(reward), bool(done), truncated, info)

    def _on_reset(self):
        pass

    def _advance(self, u: np.ndarray) -> tuple[float, bool, dict]:
        raise NotImplementedError

    def _observe(self) -> np.ndarray:
        raise NotImplementedError
