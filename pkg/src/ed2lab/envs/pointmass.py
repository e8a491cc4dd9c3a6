from __future__ import annotations

import numpy as np

from .base import Env, EnvSpec


class _PointMass(Env):
    """Unit mass on a plane under a bounded 2D force, semi-implicit Euler.

    State and observation are (x, y, vx, vy).
    """

    dt = 0.05

    def __init__(self, seed, init_noise_scale, episode_length, max_force, init_half_width):
        self.nominal_state = np.zeros(4)
        self.init_half_width = np.asarray(init_half_width, dtype=np.float64)
        super().__init__(EnvSpec(4, 2, max_force, episode_length, init_noise_scale), seed)

    def _integrate(self, u):
        pos, vel = self.state[:2], self.state[2:]
        vel = vel + u * self.dt
        pos = pos + vel * self.dt
        self.state = np.concatenate([pos, vel])

    def _observe(self):
        return self.state.copy()


class PointMassRunner(_PointMass):
    """Reward = forward displacement per unit time minus 0.001 * |u|^2."""

    def __init__(self, seed=None, init_noise_scale: float = 1.0, episode_length: int = 300,
                 max_force: float = 1.0):
        super().__init__(seed, init_noise_scale, episode_length, max_force, [0.1, 0.1, 0.1, 0.1])

    @property
    def progress(self) -> float:
        """Position along the x-axis."""
        return float(self.state[0])

    def _advance(self, u):
        x_before = self.state[0]
        self._integrate(u)
        forward = (self.state[0] - x_before) / self.dt
        ctrl = -0.001 * float(u @ u)
        return forward + ctrl, False, {"forward": forward, "ctrl": ctrl, "x": float(self.state[0])}


DEFAULT_RINGS = (((4.0, 0.0), (3.0, 2.0, 1.0)), ((-4.0, 0.0), (3.0, 2.0, 1.0)))


class Rings(_PointMass):
    """Reward per step = number of target circles containing the agent.

    Several stacks of concentric circles; entering the innermost circle of
    any stack marks the episode solved (the episode continues).
    """

    def __init__(self, seed=None, init_noise_scale: float = 1.0, episode_length: int = 300,
                 max_force: float = 1.0, stacks=DEFAULT_RINGS):
        self.stacks = [(np.asarray(c, dtype=np.float64), tuple(sorted(r, reverse=True))) for c, r in stacks]
        self.solved = False
        super().__init__(seed, init_noise_scale, episode_length, max_force, [0.1, 0.1, 0.1, 0.1])

    def circles_containing(self, position) -> int:
        count = 0
        for center, radii in self.stacks:
            d = float(np.linalg.norm(np.asarray(position, dtype=np.float64) - center))
            count += sum(1 for r in radii if d <= r)
        return count

    def in_innermost(self, position) -> bool:
        return any(np.linalg.norm(np.asarray(position) - c) <= radii[-1] for c, radii in self.stacks)

    def _on_reset(self):
        self.solved = self.in_innermost(self.state[:2])

    def _advance(self, u):
        self._integrate(u)
        pos = self.state[:2]
        self.solved = self.solved or self.in_innermost(pos)
        return float(self.circles_containing(pos)), False, {"solved": self.solved, "x": float(pos[0])}
