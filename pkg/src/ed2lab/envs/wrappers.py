from __future__ import annotations

import numpy as np

from .base import Env, StepResult


class RunningNormalizer:
    """Streaming per-coordinate mean and sample variance (Welford)."""

    def __init__(self, dim: int, eps_std: float = 1e-8):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)
        self.eps_std = eps_std

    @property
    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.count - 1))

    def update(self, x) -> None:
        x = np.asarray(x, dtype=np.float64).reshape(self.mean.shape)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / np.maximum(self.std, self.eps_std)


def normalizer_update(n: RunningNormalizer, x) -> None:
    n.update(x)


def normalizer_apply(n: RunningNormalizer, x) -> np.ndarray:
    return n.apply(x)


class Wrapper:
    def __init__(self, env):
        self.env = env

    def __getattr__(self, name):
        return getattr(self.env, name)

    @property
    def unwrapped(self) -> Env:
        return self.env.unwrapped

    def reset(self, seed=None):
        return self.env.reset(seed)

    def step(self, action) -> StepResult:
        return self.env.step(action)


class DelayedReward(Wrapper):
    """Accumulate rewards and release the sum every `k` steps and at episode end."""

    def __init__(self, env, k: int = 10):
        if k < 1:
            raise ValueError("delay k must be >= 1")
        super().__init__(env)
        self.k = k
        self._acc = 0.0
        self._t = 0

    def reset(self, seed=None):
        self._acc = 0.0
        self._t = 0
        return self.env.reset(seed)

    def step(self, action):
        res = self.env.step(action)
        self._t += 1
        self._acc += res.reward
        if self._t % self.k == 0 or res.done or res.truncated:
            emitted, self._acc = self._acc, 0.0
        else:
            emitted = 0.0
        res.info = dict(res.info, raw_reward=res.reward)
        res.reward = emitted
        return res


class SparseReward(Wrapper):
    """Withhold forward-motion reward until the agent's x exceeds `threshold`.

    Once crossed the gate stays open for the rest of the episode. Only the
    positive part of the forward term is withheld, so gating never raises a
    reward; control cost always passes through.
    """

    def __init__(self, env, threshold: float = 1.0):
        if not hasattr(env.unwrapped, "progress"):
            raise ValueError(f"{type(env.unwrapped).__name__} has no x-progress coordinate to gate on")
        super().__init__(env)
        self.threshold = threshold
        self.crossed = False

    def reset(self, seed=None):
        obs = self.env.reset(seed)
        self.crossed = self.unwrapped.progress > self.threshold
        return obs

    def step(self, action):
        res = self.env.step(action)
        self.crossed = self.crossed or self.unwrapped.progress > self.threshold
        if not self.crossed:
            forward = res.info["forward"]
            res.reward = res.reward - forward + min(forward, 0.0)
        res.info = dict(res.info, solved=self.crossed)
        return res


class NormalizeObservation(Wrapper):
    def __init__(self, env, normalizer: RunningNormalizer | None = None, update: bool = True):
        super().__init__(env)
        self.normalizer = normalizer or RunningNormalizer(env.spec.state_dim)
        self.update = update

    def _process(self, obs):
        if self.update:
            self.normalizer.update(obs)
        return self.normalizer.apply(obs)

    def reset(self, seed=None):
        return self._process(self.env.reset(seed))

    def step(self, action):
        res = self.env.step(action)
        res.next_state = self._process(res.next_state)
        return res


class NormalizeReward(Wrapper):
    def __init__(self, env, normalizer: RunningNormalizer | None = None, update: bool = True):
        super().__init__(env)
        self.normalizer = normalizer or RunningNormalizer(1)
        self.update = update

    def step(self, action):
        res = self.env.step(action)
        if self.update:
            self.normalizer.update([res.reward])
        res.info = dict(res.info, raw_reward=res.info.get("raw_reward", res.reward))
        res.reward = float(self.normalizer.apply([res.reward])[0])
        return res
