"""The ED2 ensemble: K deterministic actors, K clipped-double-Q critic pairs.

All actors live in one member-stacked network and all critics in another, so
every per-agent computation of an update is a single batched matmul. Critic
member j < P is Q_{j,1}; member P + j is Q_{j,2}, where P is the number of
critic pairs (K, or 1 with `single_critic`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..numcore import (
    MlpParams,
    Tensor,
    adam_init,
    adam_step,
    backward,
    concat,
    huber_loss,
    init_mlp,
    load_arrays,
    mlp_forward,
    mse_loss,
    polyak_update,
    save_arrays,
)
from ..replay import Batch
from .flags import VariantFlags


def normalize_action(mu: np.ndarray) -> np.ndarray:
    """Divide each raw action vector by G = mean |mu_i| whenever G > 1."""
    g = np.mean(np.abs(mu), axis=-1, keepdims=True)
    return mu / np.maximum(g, 1.0)


def prior_q(trainable_out, prior_out, beta: float):
    """Value with an additive, fixed, scaled prior network output."""
    if beta < 0:
        raise ValueError("prior weight must be non-negative")
    return trainable_out + beta * prior_out


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class TrainTargets:
    y: np.ndarray  # (K, B) per-agent Bellman targets
    weights: np.ndarray  # (K, B) backup weights, 1 unless weighted backup


class Ensemble:
    def __init__(
        self,
        obs_dim: int,
        act_dim: int,
        max_action: float,
        k: int = 5,
        hidden: tuple = (256, 256),
        lr: float = 1e-4,
        gamma: float = 0.99,
        rho: float = 0.995,
        target_noise: float = 0.2,
        flags: VariantFlags | None = None,
        rng: np.random.Generator | None = None,
    ):
        if k < 1:
            raise ValueError("ensemble size must be >= 1")
        if not 0.0 <= gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        rng = rng if rng is not None else np.random.default_rng()
        self.flags = flags or VariantFlags()
        self.obs_dim, self.act_dim, self.max_action = obs_dim, act_dim, float(max_action)
        self.k = k
        self.pairs = 1 if self.flags.single_critic else k
        self.hidden = tuple(hidden)
        self.gamma, self.rho, self.target_noise = gamma, rho, target_noise

        self.actor = init_mlp([obs_dim, *hidden, act_dim], rng, members=k, shared=self.flags.shared_actor_init)
        critic_sizes = [obs_dim + act_dim, *hidden, 1]
        self.critic = init_mlp(critic_sizes, rng, members=2 * self.pairs)
        self.critic_target = self.critic.copy(requires_grad=False)
        self.prior = None
        if self.flags.prior_nets:
            self.prior = init_mlp(critic_sizes, rng, members=2 * self.pairs).copy(requires_grad=False)

        self.actor_opt = adam_init([p.values for p in self.actor.parameters()], lr=lr)
        self.critic_opt = adam_init([p.values for p in self.critic.parameters()], lr=lr)
        self.current = 0
        self.updates = 0

    # -- forward helpers ---------------------------------------------------

    def _squash(self, mu: np.ndarray) -> np.ndarray:
        if self.flags.action_normalization:
            mu = normalize_action(mu)
        return self.max_action * np.tanh(mu)

    def actor_actions(self, obs) -> np.ndarray:
        """Final action of every actor: (K, N, A) for obs (N, S)."""
        return self._squash(mlp_forward(self.actor, np.atleast_2d(obs), track=False))

    def _q(self, critic: MlpParams, prior: MlpParams | None, x: np.ndarray) -> np.ndarray:
        q = mlp_forward(critic, x, track=False)
        if prior is not None:
            q = prior_q(q, mlp_forward(prior, x, track=False), self.flags.prior_beta)
        return q[..., 0]

    def first_critic_values(self, obs, actions) -> np.ndarray:
        """Q_{i,1}(s_n, a_{k,n}) for every first critic i: (P, K, N)."""
        obs = np.atleast_2d(obs)
        k, n, _ = actions.shape
        x = np.concatenate([np.broadcast_to(obs, (k, n, self.obs_dim)), actions], axis=-1).reshape(1, k * n, -1)
        prior = None if self.prior is None else self.prior.select(slice(0, self.pairs))
        return self._q(self.critic.select(slice(0, self.pairs)), prior, x).reshape(self.pairs, k, n)

    # -- policies ------------------------------------------------------------

    def select_episode_actor(self, rng: np.random.Generator) -> int:
        self.current = 0 if self.flags.single_actor_explore else int(rng.integers(self.k))
        return self.current

    def explore_action(self, obs, rng: np.random.Generator) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if self.flags.ucb_enabled:
            a = self.ucb_action(obs, self.flags.ucb_lambda)
        elif self.flags.vote_policy_mode != "off":
            a = self.vote_action(obs, self.flags.vote_policy_mode, self.current)
        else:
            member = self.actor.select(slice(self.current, self.current + 1))
            a = self._squash(mlp_forward(member, obs[None], track=False))[0, 0]
        if self.flags.gaussian_noise_std > 0:
            noise = rng.normal(0.0, self.flags.gaussian_noise_std * self.max_action, size=a.shape)
            a = np.clip(a + noise, -self.max_action, self.max_action)
        return a

    def evaluate_action(self, obs) -> np.ndarray:
        """Exploitation policy; returns (A,) for a single state or (N, A) for a batch."""
        single = np.ndim(obs) == 1
        if self.flags.vote_eval:
            a = self.vote_action(obs, "ensemble_critic")
        else:
            acts = self.actor_actions(obs)
            a = acts[0] if self.flags.single_actor_eval else acts.mean(axis=0)
        return a[0] if single and a.ndim == 2 else a

    def member_action(self, obs, k: int) -> np.ndarray:
        acts = self.actor_actions(obs)[k]
        return acts[0] if np.ndim(obs) == 1 else acts

    def vote_action(self, obs, mode: str, critic_index: int | None = None) -> np.ndarray:
        """Candidate action of the actor whose action scores highest; ties go to the lowest index."""
        if mode not in ("arbitrary_critic", "ensemble_critic"):
            raise ValueError(f"unknown vote mode {mode!r}")
        single = np.ndim(obs) == 1
        acts = self.actor_actions(obs)
        q = self.first_critic_values(obs, acts)
        if mode == "arbitrary_critic":
            c = self.current if critic_index is None else critic_index
            scores = q[min(c, self.pairs - 1)]
        else:
            scores = q.mean(axis=0)
        chosen = np.argmax(scores, axis=0)
        out = acts[chosen, np.arange(acts.shape[1])]
        return out[0] if single else out

    def ucb_action(self, obs, lam: float) -> np.ndarray:
        """argmax_k mean_i Q_{i,1}(s, a_k) + lam * std_i Q_{i,1}(s, a_k)."""
        if lam < 0:
            raise ValueError("UCB coefficient must be non-negative")
        single = np.ndim(obs) == 1
        acts = self.actor_actions(obs)
        q = self.first_critic_values(obs, acts)
        scores = q.mean(axis=0) + lam * q.std(axis=0)
        chosen = np.argmax(scores, axis=0)
        out = acts[chosen, np.arange(acts.shape[1])]
        return out[0] if single else out

    # -- learning ------------------------------------------------------------

    def compute_targets(self, batch: Batch, rng: np.random.Generator) -> TrainTargets:
        """y_k = r + gamma (1 - d) min_i Qbar_{k,i}(s', a'_k), a'_k = M tanh(mu_k(s') + eps)."""
        k, p, b = self.k, self.pairs, len(batch.rew)
        mu = mlp_forward(self.actor, batch.next_obs, track=False)
        if self.flags.action_normalization:
            mu = normalize_action(mu)
        if self.target_noise > 0:
            mu = mu + rng.normal(0.0, self.target_noise, size=mu.shape)
        a_next = self.max_action * np.tanh(mu)
        x = np.concatenate([np.broadcast_to(batch.next_obs, (k, b, self.obs_dim)), a_next], axis=-1)

        weights = np.ones((k, b))
        if p == k and not self.flags.weighted_backup:
            # member j and member K + j both read agent j's action
            qbar = self._q(self.critic_target, self.prior, np.concatenate([x, x]))
            q1, q2 = qbar[:k], qbar[k:]
        else:
            # every target critic on every agent's action: (2P, K, B)
            qall = self._q(self.critic_target, self.prior, x.reshape(1, k * b, -1)).reshape(2 * p, k, b)
            own = np.arange(k) if p == k else np.zeros(k, dtype=int)
            q1, q2 = qall[own, np.arange(k)], qall[p + own, np.arange(k)]
            if self.flags.weighted_backup:
                eps, temp = self.flags.weighted_backup_eps, self.flags.weighted_backup_temp
                weights = eps + (1.0 - eps) * _sigmoid(-qall.std(axis=0) * temp)
        q_next = np.minimum(q1, q2) if self.flags.clipped_double_q else q1
        y = batch.rew + self.gamma * (1.0 - batch.done) * q_next
        return TrainTargets(y, weights)

    def _member_coefficients(self, targets: TrainTargets, mask) -> tuple[np.ndarray, np.ndarray]:
        """Per-pair regression targets and per-element loss coefficients, shapes (P, B)."""
        k, p = self.k, self.pairs
        b = targets.y.shape[1]
        if p == k:
            y, w = targets.y, targets.weights
            m = np.ones((k, b)) if mask is None else mask.astype(np.float64)
        else:
            # the single pair regresses onto the average agent target
            y, w = targets.y.mean(axis=0, keepdims=True), targets.weights.mean(axis=0, keepdims=True)
            m = np.ones((1, b))
        coef = w * m / (np.maximum(m.sum(axis=1, keepdims=True), 1.0) * p)
        return y, coef

    def critic_objective(self, batch: Batch, targets: TrainTargets) -> Tensor:
        y, coef = self._member_coefficients(targets, batch.mask if self.flags.data_bootstrap else None)
        x = np.concatenate([batch.obs, batch.act], axis=-1)
        q = mlp_forward(self.critic, x)
        if self.prior is not None:
            q = q + self.flags.prior_beta * mlp_forward(self.prior, x, track=False)
        q = q.reshape(q.shape[0], q.shape[1])
        y2, coef2 = np.concatenate([y, y]), np.concatenate([coef, coef])
        if self.flags.huber_loss:
            return huber_loss(q, Tensor(y2), self.flags.huber_delta, weights=coef2)
        return mse_loss(q, Tensor(y2), weights=coef2)

    def actor_objective(self, batch: Batch) -> Tensor:
        """-(1 / (|B| K)) sum_k sum_s Q_{k,1}(s, M tanh(norm(mu_k(s)))), masked per agent under bootstrap."""
        k, b = self.k, len(batch.rew)
        mu = mlp_forward(self.actor, batch.obs)
        if self.flags.action_normalization:
            mu = mu / mu.abs().mean(axis=-1, keepdims=True).maximum(1.0)
        act = mu.tanh() * self.max_action
        x = concat([Tensor(batch.obs), act])
        critic1 = self.critic.select(slice(0, self.pairs))
        q = mlp_forward(critic1, x)
        if self.prior is not None:
            q = q + self.flags.prior_beta * mlp_forward(self.prior.select(slice(0, self.pairs)), x)
        q = q.reshape(k, b)
        if self.flags.data_bootstrap and batch.mask is not None:
            m = batch.mask.astype(np.float64)
        else:
            m = np.ones((k, b))
        coef = m / (np.maximum(m.sum(axis=1, keepdims=True), 1.0) * k)
        return -(q * coef).sum()

    def update_step(self, batch: Batch, rng: np.random.Generator) -> dict:
        """One gradient step for every critic and actor, then Polyak-average the targets."""
        targets = self.compute_targets(batch, rng)

        critic_params = self.critic.parameters()
        critic_loss = self.critic_objective(batch, targets)
        backward(critic_loss)
        adam_step(self.critic_opt, [p.values for p in critic_params], [p.grad for p in critic_params])
        self.critic.zero_grad()

        actor_params = self.actor.parameters()
        actor_loss = self.actor_objective(batch)
        backward(actor_loss)
        adam_step(self.actor_opt, [p.values for p in actor_params], [p.grad for p in actor_params])
        self.actor.zero_grad()

        polyak_update([p.values for p in self.critic_target.parameters()],
                      [p.values for p in critic_params], self.rho)
        self.updates += 1
        # reported critic loss is the mean per-critic error, i.e. the objective without the 1/2 pair sum
        return {"critic_loss": critic_loss.item() / 2.0, "actor_loss": actor_loss.item()}

    # -- persistence ---------------------------------------------------------

    def named_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        out.update(self.actor.named_arrays("actor"))
        out.update(self.critic.named_arrays("critic"))
        out.update(self.critic_target.named_arrays("critic_target"))
        if self.prior is not None:
            out.update(self.prior.named_arrays("prior"))
        return out

    def save(self, directory, step: int = 0) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_arrays(directory / "params.bin", self.named_arrays())
        manifest = {
            "k": self.k,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "max_action": self.max_action,
            "hidden": list(self.hidden),
            "gamma": self.gamma,
            "rho": self.rho,
            "target_noise": self.target_noise,
            "flags": self.flags.to_dict(),
            "step": step,
            "updates": self.updates,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory) -> "Ensemble":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        ens = cls(
            manifest["obs_dim"], manifest["act_dim"], manifest["max_action"], manifest["k"],
            tuple(manifest["hidden"]), gamma=manifest["gamma"], rho=manifest["rho"],
            target_noise=manifest["target_noise"], flags=VariantFlags.from_dict(manifest["flags"]),
            rng=np.random.default_rng(0),
        )
        arrays = load_arrays(directory / "params.bin")
        for name, arr in ens.named_arrays().items():
            arr[...] = arrays[name]
        ens.updates = manifest["updates"]
        return ens
