from __future__ import annotations

from dataclasses import asdict, dataclass, fields

VOTE_MODES = ("off", "arbitrary_critic", "ensemble_critic")


@dataclass(frozen=True)
class VariantFlags:
    """Switches for every ablation and alternative design choice.

    Defaults give plain ED2: deterministic per-episode actor, clipped double
    Q-learning, action normalization and ERE sampling.
    """

    gaussian_noise_std: float = 0.0
    ucb_enabled: bool = False
    ucb_lambda: float = 1.0
    weighted_backup: bool = False
    weighted_backup_eps: float = 0.5
    weighted_backup_temp: float = 10.0
    clipped_double_q: bool = True
    vote_policy_mode: str = "off"  # exploration-time vote policy
    vote_eval: bool = False  # vote policy (ensemble critic) for evaluation
    prior_nets: bool = False
    prior_beta: float = 1.0
    data_bootstrap: bool = False
    bootstrap_prob: float = 0.5
    single_critic: bool = False
    shared_actor_init: bool = False
    single_actor_explore: bool = False
    single_actor_eval: bool = False
    action_normalization: bool = True
    ere: bool = True
    huber_loss: bool = False
    huber_delta: float = 1.0

    def __post_init__(self):
        if self.vote_policy_mode not in VOTE_MODES:
            raise ValueError(f"vote_policy_mode must be one of {VOTE_MODES}")
        if self.ucb_enabled and self.vote_policy_mode != "off":
            raise ValueError("UCB and vote-policy exploration are mutually exclusive")
        if self.vote_eval and self.single_actor_eval:
            raise ValueError("vote_eval and single_actor_eval are mutually exclusive")
        if self.gaussian_noise_std < 0 or self.ucb_lambda < 0 or self.prior_beta < 0:
            raise ValueError("noise std, UCB lambda and prior beta must be non-negative")
        if not 0.0 <= self.weighted_backup_eps < 1.0:
            raise ValueError("weighted_backup_eps must lie in [0, 1)")
        if not 0.0 < self.bootstrap_prob <= 1.0:
            raise ValueError("bootstrap_prob must lie in (0, 1]")
        if self.huber_delta <= 0:
            raise ValueError("huber_delta must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VariantFlags":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown variant flags: {sorted(unknown)}")
        return cls(**data)


# Named variants exercised in the ablation study; values override the defaults.
PAPER_VARIANTS: dict[str, dict] = {
    "ed2": {},
    "gaussian_noise": {"gaussian_noise_std": 0.29},
    "ucb": {"ucb_enabled": True},
    "weighted_backup": {"weighted_backup": True},
    "no_clip": {"clipped_double_q": False},
    "no_clip_weighted": {"clipped_double_q": False, "weighted_backup": True},
    "vote_arbitrary": {"vote_policy_mode": "arbitrary_critic"},
    "vote_ensemble": {"vote_policy_mode": "ensemble_critic"},
    "vote_eval": {"vote_eval": True},
    "prior_nets": {"prior_nets": True},
    "data_bootstrap": {"data_bootstrap": True},
    "single_critic": {"single_critic": True},
    "shared_actor_init": {"shared_actor_init": True},
    "single_actor_explore": {"single_actor_explore": True, "gaussian_noise_std": 0.29},
    "single_actor_eval": {"single_actor_eval": True},
    "no_action_norm": {"action_normalization": False},
    "no_ere": {"ere": False},
    "huber": {"huber_loss": True},
}
