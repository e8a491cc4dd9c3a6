"""Experiment configuration and its flat ``key = value`` file format.

Each non-blank, non-comment line holds one field; values are JSON literals.
Variant flags are flattened under a ``flag.`` prefix so the file stays flat.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from ..agent import PAPER_VARIANTS, VariantFlags
from ..envs import ENVIRONMENTS

# fields that label or schedule a run without changing what any single run computes
NON_SEMANTIC = ("seeds", "workers", "variant")

PAPER_SCALE = {
    "lr": 1e-4,
    "buffer_size": 1_000_000,
    "hidden_width": 256,
    "total_steps": 3_000_000,
    "eval_every": 10_000,
    "eval_episodes": 30,
}


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "pendulum"
    wrappers: tuple = ()
    variant: str = "ed2"
    k: int = 5
    gamma: float = 0.99
    lr: float = 1e-3  # the full-size preset uses 1e-4; see README
    rho: float = 0.995
    target_noise: float = 0.2
    buffer_size: int = 100_000
    batch_size: int = 256
    update_every: int = 50
    updates_per_burst: int = 50
    eta0: float = 0.995
    hidden_width: int = 64
    hidden_layers: int = 2
    total_steps: int = 50_000
    eval_every: int = 2_000
    eval_episodes: int = 30
    eval_members: bool = False
    warmup_steps: int = 1_000
    init_noise_scale: float = 1.0
    seeds: tuple = (0,)
    workers: int = 1
    flags: VariantFlags = field(default_factory=VariantFlags)

    def __post_init__(self):
        if self.env not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.env!r}")
        positive = ("k", "buffer_size", "batch_size", "update_every", "hidden_width", "hidden_layers",
                    "total_steps", "eval_every", "workers")
        for name in positive:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.eval_episodes < 2:
            raise ValueError("eval_episodes must be >= 2 for a test-return std")
        if self.updates_per_burst < 0 or self.warmup_steps < 0:
            raise ValueError("updates_per_burst and warmup_steps must be >= 0")
        if not 0.0 < self.eta0 <= 1.0:
            raise ValueError("eta0 must lie in (0, 1]")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        object.__setattr__(self, "wrappers", tuple(self.wrappers))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if isinstance(self.flags, dict):
            object.__setattr__(self, "flags", VariantFlags.from_dict(self.flags))

    @property
    def hidden(self) -> tuple:
        return (self.hidden_width,) * self.hidden_layers

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wrappers"], d["seeds"] = list(self.wrappers), list(self.seeds)
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        for name in NON_SEMANTIC:
            d.pop(name)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "flags":
                continue
            lines.append(f"{f.name} = {json.dumps(self.to_dict()[f.name])}")
        for name, value in self.flags.to_dict().items():
            lines.append(f"flag.{name} = {json.dumps(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} - {"flags"}
        top, flags = {}, {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ValueError(f"line {n}: expected 'key = value'")
            try:
                parsed = json.loads(value.strip())
            except json.JSONDecodeError as e:
                raise ValueError(f"line {n}: bad value for {key}: {e.msg}") from None
            if key.startswith("flag."):
                flags[key[5:]] = parsed
            elif key in known:
                top[key] = parsed
            else:
                raise ValueError(f"line {n}: unknown field {key!r}")
        variant = top.get("variant", "ed2")
        base = dict(PAPER_VARIANTS.get(variant, {}))
        base.update(flags)
        return cls(**top, flags=VariantFlags.from_dict(base))


def preset(variant: str = "ed2", paper_scale: bool = False, **overrides) -> ExperimentConfig:
    """Desk-scale defaults (or the full-size preset) for a named variant."""
    if variant not in PAPER_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(PAPER_VARIANTS)}")
    cfg = ExperimentConfig(variant=variant, flags=VariantFlags(**PAPER_VARIANTS[variant]))
    if paper_scale:
        cfg = replace(cfg, **PAPER_SCALE)
    return replace(cfg, **overrides)
