"""Desk-scale environments and reward/observation wrappers, selected by name."""

from __future__ import annotations

from .base import Env, EnvSpec, StepResult
from .pendulum import Pendulum
from .pointmass import PointMassRunner, Rings
from .wrappers import (
    DelayedReward,
    NormalizeObservation,
    NormalizeReward,
    RunningNormalizer,
    SparseReward,
    Wrapper,
    normalizer_apply,
    normalizer_update,
)

ENVIRONMENTS = {
    "pendulum": Pendulum,
    "pointmass": PointMassRunner,
    "rings": Rings,
}


def wrap_delayed(env, k: int = 10):
    return DelayedReward(env, k)


def wrap_sparse(env, threshold: float = 1.0):
    return SparseReward(env, threshold)


def _find(env, cls):
    while isinstance(env, Wrapper):
        if isinstance(env, cls):
            return env
        env = env.env
    return None


def make_env(name: str, wrappers=(), seed: int | None = None, init_noise_scale: float = 1.0,
             evaluation_of=None):
    """Build an environment from its name and a wrapper list such as ``["delayed:10", "obs_norm"]``.

    With `evaluation_of` set to a training env, observation statistics are
    shared read-only with it and reward normalization is left out, so test
    returns are reported in task units.
    """
    try:
        env = ENVIRONMENTS[name](seed=seed, init_noise_scale=init_noise_scale)
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    for item in wrappers:
        kind, _, arg = item.partition(":")
        if kind == "delayed":
            env = DelayedReward(env, int(arg) if arg else 10)
        elif kind == "sparse":
            env = SparseReward(env, float(arg) if arg else 1.0)
        elif kind == "obs_norm":
            if evaluation_of is not None:
                source = _find(evaluation_of, NormalizeObservation)
                env = NormalizeObservation(env, source.normalizer, update=False)
            else:
                env = NormalizeObservation(env)
        elif kind == "rew_norm":
            if evaluation_of is None:
                env = NormalizeReward(env)
        else:
            raise ValueError(f"unknown wrapper {item!r}")
    return env


__all__ = [
    "Env", "EnvSpec", "StepResult", "Pendulum", "PointMassRunner", "Rings",
    "DelayedReward", "SparseReward", "NormalizeObservation", "NormalizeReward",
    "RunningNormalizer", "normalizer_update", "normalizer_apply",
    "wrap_delayed", "wrap_sparse", "make_env", "ENVIRONMENTS",
]
