"""Adam and Polyak averaging over flat lists of arrays (updated in place)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_init(params: Sequence[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(lr, beta1, beta2, eps, 0,
                     [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray | None]):
    """One bias-corrected Adam update. A `None` gradient counts as zero."""
    if len(params) != len(state.m):
        raise ValueError(f"optimizer tracks {len(state.m)} arrays, got {len(params)}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    step_size = state.lr / (1.0 - b1 ** state.step)
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = 0.0
        elif g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step_size * m / (np.sqrt(v / bc2) + state.eps)
    return params, state


def polyak_update(target: Sequence[np.ndarray], main: Sequence[np.ndarray], rho: float):
    """target <- rho * target + (1 - rho) * main."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    for t, m in zip(target, main):
        if t.shape != m.shape:
            raise ValueError(f"shape mismatch {t.shape} vs {m.shape}")
        t *= rho
        t += (1.0 - rho) * m
    return target
