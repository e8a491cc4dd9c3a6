import numpy as np

from .base import Env, EnvSpec


def angle_normalize(theta):
    return ((theta + np.pi) % (2 * np.pi)) - np.pi


class Pendulum(Env):
    """Torque-limited swing-up; theta = 0 is upright.

    Observation (cos theta, sin theta, omega). Never terminal.
    """

    g = 10.0
    mass = 1.0
    length = 1.0
    dt = 0.05
    max_speed = 8.0

    def __init__(self, seed=None, init_noise_scale: float = 1.0, episode_length: int = 200,
                 max_torque: float = 2.0):
        # hanging down at rest; full-circle angle and unit-speed perturbations at scale 1
        self.nominal_state = np.array([np.pi, 0.0])
        self.init_half_width = np.array([np.pi, 1.0])
        super().__init__(EnvSpec(3, 1, max_torque, episode_length, init_noise_scale), seed)

    def _advance(self, u):
        theta, omega = self.state
        torque = u[0]
        cost = angle_normalize(theta) ** 2 + 0.1 * omega ** 2 + 0.001 * torque ** 2
        accel = 3 * self.g / (2 * self.length) * np.sin(theta) + 3.0 / (self.mass * self.length ** 2) * torque
        omega = np.clip(omega + accel * self.dt, -self.max_speed, self.max_speed)
        theta = theta + omega * self.dt
        self.state = np.array([theta, omega])
        return -cost, False, {"ctrl": -0.001 * torque ** 2}

    def _observe(self):
        theta, omega = self.state
        return np.array([np.cos(theta), np.sin(theta), omega])
