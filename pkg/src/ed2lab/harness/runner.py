"""Single-seed training loop, batched evaluation and the JSON-lines run log."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..agent import Ensemble
from ..envs import make_env
from ..metrics import EvalPhase, RunSeries, mean_std_return, rmsd
from ..numcore import keep_large_blocks
from ..replay import EreState, ReplayBuffer, ere_eta_update, ere_min_window, ere_sample, ere_window
from .config import ExperimentConfig

RMSD_LAG = 20


class RunLog:
    """Append-only list of records, serialized one JSON object per line."""

    def __init__(self, records=None):
        self.records = list(records or [])
        self.env_step = 0  # progress marker for error records, not serialized

    def add(self, kind: str, **fields) -> dict:
        rec = {"type": kind, **fields}
        self.records.append(rec)
        return rec

    def of(self, kind: str) -> list:
        return [r for r in self.records if r["type"] == kind]

    @property
    def header(self) -> dict:
        return self.records[0]

    @property
    def ok(self) -> bool:
        return not self.of("error")

    def series(self) -> RunSeries:
        phases = [EvalPhase(r["env_step"], r["returns"]) for r in self.of("eval")]
        return RunSeries(self.header["seed"], phases, self.header["config_hash"])

    def to_text(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path) -> "RunLog":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        log = cls(json.loads(line) for line in lines if line.strip())
        if not log.records or log.header["type"] != "header":
            raise ValueError(f"{path}: not a run log")
        return log


def _streams(seed: int) -> dict:
    names = ("init", "explore", "replay", "target", "env", "eval")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def evaluate(ens: Ensemble, envs: list, reset_seeds, members: bool) -> dict:
    """Run the exploitation policy, and optionally every single actor, on common start states.

    `envs` holds (1 + K) * N evaluation environments when `members` is set,
    else N. All episodes advance in lockstep so each step is one batched
    forward pass per policy.
    """
    n = len(reset_seeds)
    groups = 1 + (ens.k if members else 0)
    envs = envs[: groups * n]
    obs = np.stack([env.reset(seed=int(reset_seeds[i % n])) for i, env in enumerate(envs)])
    returns = np.zeros(len(envs))
    solved = np.zeros(len(envs), dtype=bool)
    has_solved = False
    active = np.ones(len(envs), dtype=bool)
    while active.any():
        actions = np.empty((len(envs), ens.act_dim))
        actions[:n] = ens.evaluate_action(obs[:n])
        if members:
            per_member = ens.actor_actions(obs[n:])
            for j in range(ens.k):
                actions[n * (j + 1): n * (j + 2)] = per_member[j, n * j: n * (j + 1)]
        for i in np.flatnonzero(active):
            res = envs[i].step(actions[i])
            returns[i] += res.reward
            obs[i] = res.next_state
            if "solved" in res.info:
                has_solved = True
                solved[i] = res.info["solved"]
            if res.done or res.truncated:
                active[i] = False
    out = {"returns": returns[:n].tolist()}
    if has_solved:
        out["solved_fraction"] = float(solved[:n].mean())
    if members:
        out["member_returns"] = [returns[n * (j + 1): n * (j + 2)].tolist() for j in range(ens.k)]
    return out


def train_run(config: ExperimentConfig, seed: int, checkpoint_dir=None) -> RunLog:
    """Train one agent and return its log; failures end the log with an error record."""
    keep_large_blocks()
    log = RunLog()
    log.add("header", config_hash=config.config_hash(), seed=int(seed), variant=config.variant,
            env=config.env, wrappers=list(config.wrappers), config=config.to_dict())
    try:
        _train(config, seed, log, checkpoint_dir)
    except (ValueError, FloatingPointError) as e:
        log.add("error", env_step=log.env_step, message=f"{type(e).__name__}: {e}")
    return log


def _train(config: ExperimentConfig, seed: int, log: RunLog, checkpoint_dir) -> None:
    rng = _streams(seed)
    env = make_env(config.env, config.wrappers, seed=int(rng["env"].integers(2**31)),
                   init_noise_scale=config.init_noise_scale)
    obs = env.reset()
    groups = 1 + (config.k if config.eval_members else 0)
    eval_envs = [make_env(config.env, config.wrappers, init_noise_scale=config.init_noise_scale,
                          evaluation_of=env) for _ in range(groups * config.eval_episodes)]
    obs_dim = obs.shape[0]
    spec = env.unwrapped.spec
    ens = Ensemble(obs_dim, spec.action_dim, spec.max_action, k=config.k, hidden=config.hidden,
                   lr=config.lr, gamma=config.gamma, rho=config.rho, target_noise=config.target_noise,
                   flags=config.flags, rng=rng["init"])
    buf = ReplayBuffer(config.buffer_size, obs_dim, spec.action_dim,
                       ensemble_size=config.k if config.flags.data_bootstrap else None,
                       mask_prob=config.flags.bootstrap_prob, rng=rng["replay"])
    ere = EreState.initial(config.eta0)
    c_min = ere_min_window(config.batch_size, config.buffer_size)
    explore = rng["explore"]

    actor = ens.select_episode_actor(explore)
    ep_return, ep_len, updates = 0.0, 0, 0
    for t in range(1, config.total_steps + 1):
        log.env_step = t
        if t <= config.warmup_steps:
            action = explore.uniform(-spec.max_action, spec.max_action, size=spec.action_dim)
        else:
            action = ens.explore_action(obs, explore)
        res = env.step(action)
        buf.store(obs, action, res.reward, res.next_state, res.done)
        obs = res.next_state
        ep_return += res.reward
        ep_len += 1

        if res.done or res.truncated:
            rec = {"env_step": t, "return": ep_return, "length": ep_len, "actor": actor}
            if "solved" in res.info:
                rec["solved"] = bool(res.info["solved"])
            if config.flags.ere:
                ere_eta_update(ere, ep_return, spec.episode_length, config.buffer_size)
                rec["eta"] = ere.eta
            log.add("episode", **rec)
            actor = ens.select_episode_actor(explore)
            obs = env.reset()
            ep_return, ep_len = 0.0, 0

        if t % config.update_every == 0 and config.updates_per_burst > 0:
            critic, actor_loss = 0.0, 0.0
            burst = config.updates_per_burst
            for b in range(1, burst + 1):
                if config.flags.ere:
                    window = ere_window(buf.size, ere.eta, b, burst, c_min)
                else:
                    window = buf.size
                losses = ens.update_step(ere_sample(buf, window, config.batch_size, rng["replay"]), rng["target"])
                if not (math.isfinite(losses["critic_loss"]) and math.isfinite(losses["actor_loss"])):
                    raise FloatingPointError(f"non-finite loss at update {updates + b}: {losses}")
                critic += losses["critic_loss"]
                actor_loss += losses["actor_loss"]
            updates += burst
            log.add("update", env_step=t, updates=updates, critic_loss=critic / burst,
                    actor_loss=actor_loss / burst, eta=ere.eta if config.flags.ere else 1.0)

        if t % config.eval_every == 0:
            seeds = rng["eval"].integers(2**31, size=config.eval_episodes)
            result = evaluate(ens, eval_envs, seeds, config.eval_members)
            mean, std = mean_std_return(EvalPhase(t, result["returns"]))
            rec = {"env_step": t, "mean": mean, "std": std, **result}
            if config.eval_members:
                rec["member_std"] = [mean_std_return(EvalPhase(t, r))[1] for r in result["member_returns"]]
                rec["member_mean"] = [float(np.mean(r)) for r in result["member_returns"]]
            log.add("eval", **rec)

    evals = log.of("eval")
    averages = [r["mean"] for r in evals]
    final = {"env_step": config.total_steps, "updates": updates,
             "rmsd": rmsd(averages, RMSD_LAG) if len(averages) > RMSD_LAG else None,
             "final_mean": averages[-1] if averages else None}
    log.add("final", **final)
    if checkpoint_dir is not None:
        ens.save(checkpoint_dir, step=config.total_steps)
