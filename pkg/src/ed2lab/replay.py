"""Ring-buffer replay with Emphasizing-Recent-Experience (ERE) sampling.

Within an update burst of B mini-batches, batch b is drawn uniformly from the
newest c_b transitions, c_b = |D| * eta ** (b * 1000 / B), so late batches in
the burst concentrate on fresh data. `eta` itself relaxes towards 1 while
training returns stop improving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    obs: np.ndarray
    act: np.ndarray
    rew: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray
    mask: np.ndarray | None  # (ensemble, batch) booleans when bootstrapping
    index: np.ndarray


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int, ensemble_size: int | None = None,
                 mask_prob: float = 0.5, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.masks = None if ensemble_size is None else np.zeros((capacity, ensemble_size), dtype=bool)
        self.mask_prob = mask_prob
        self.rng = rng if rng is not None else np.random.default_rng()
        self.ptr = 0
        self.size = 0
        self.inserted = 0

    def __len__(self):
        return self.size

    def store(self, obs, act, rew, next_obs, done) -> None:
        obs = np.asarray(obs, dtype=np.float64)
        act = np.asarray(act, dtype=np.float64)
        next_obs = np.asarray(next_obs, dtype=np.float64)
        if not (np.isfinite(obs).all() and np.isfinite(act).all() and np.isfinite(next_obs).all()
                and math.isfinite(rew)):
            raise ValueError("transition contains non-finite values")
        i = self.ptr
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        if self.masks is not None:
            self.masks[i] = self.rng.random(self.masks.shape[1]) < self.mask_prob
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def recent_indices(self, offsets: np.ndarray) -> np.ndarray:
        """Storage slots of the transitions `offsets` steps before the newest (0 = newest)."""
        return (self.ptr - 1 - offsets) % self.capacity

    def gather(self, idx: np.ndarray) -> Batch:
        mask = None if self.masks is None else self.masks[idx].T
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx], mask, idx)


def ere_window(size: int, eta: float, b: int, updates: int, c_min: int = 1) -> int:
    """Number of most recent transitions eligible for the b-th of `updates` batches."""
    if not 1 <= b <= updates:
        raise ValueError(f"b must lie in [1, {updates}], got {b}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    c = round(size * eta ** (b * 1000.0 / updates))
    return int(min(max(c, min(c_min, size)), size))


def ere_sample(buf: ReplayBuffer, c_b: int, batch_size: int, rng: np.random.Generator) -> Batch:
    """Uniform sample, with replacement, from the newest min(c_b, size) transitions."""
    if buf.size == 0:
        raise ValueError("cannot sample from an empty buffer")
    if c_b < 1:
        raise ValueError("window must hold at least one transition")
    window = min(c_b, buf.size)
    return buf.gather(buf.recent_indices(rng.integers(0, window, size=batch_size)))


def ere_min_window(batch_size: int, capacity: int) -> int:
    return max(batch_size, int(round(5000 * capacity / 1e6)))


def adapted_eta(eta0: float, i_recent: float, i_max: float) -> float:
    """eta = eta0 * r + 1 - r with r = I_recent / I_max clipped to [0, 1].

    Before any positive improvement has been seen the schedule keeps eta0.
    """
    if i_max <= 0.0:
        return eta0
    ratio = min(max(i_recent / i_max, 0.0), 1.0)
    # same value as eta0 * ratio + 1 - ratio, arranged to hit both endpoints exactly
    return min(eta0 + (1.0 - ratio) * (1.0 - eta0), 1.0)


@dataclass
class EreState:
    eta0: float = 0.995
    eta: float = 0.995
    r_recent: float = 0.0
    r_prev: float = 0.0
    i_max: float = 0.0
    lambda_prev: float = 0.0
    lambda_recent: float = 0.0
    episodes: int = 0

    @classmethod
    def initial(cls, eta0: float = 0.995) -> "EreState":
        return cls(eta0=eta0, eta=eta0)


def ere_eta_update(state: EreState, episode_return: float, max_episode_len: int, capacity: int) -> EreState:
    """Fold one training-episode return into the improvement trackers and re-derive eta."""
    state.lambda_prev = min(max_episode_len / max(capacity // 2, 1), 1.0)
    state.lambda_recent = min(10.0 * state.lambda_prev, 1.0)
    if state.episodes == 0:
        # both averages start at the first return so the first improvement is zero
        state.r_recent = state.r_prev = float(episode_return)
    else:
        state.r_recent = state.lambda_recent * episode_return + (1 - state.lambda_recent) * state.r_recent
        state.r_prev = state.lambda_prev * episode_return + (1 - state.lambda_prev) * state.r_prev
    state.episodes += 1
    i_recent = state.r_recent - state.r_prev
    state.i_max = max(state.i_max, i_recent)
    state.eta = adapted_eta(state.eta0, i_recent, state.i_max)
    return state
