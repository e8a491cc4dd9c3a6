"""Multi-seed execution, the across-seed summary CSV and plot data."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..metrics import bootstrap_ci, ema_smooth, seed_summary, solve_step
from .config import ExperimentConfig
from .runner import RunLog, train_run

SUMMARY_COLUMNS = ("metric", "env", "variant", "seed_count", "value", "ci_lo", "ci_hi")


def _run_one(args) -> RunLog:
    config, seed = args
    return train_run(config, seed)


def run_suite(config: ExperimentConfig, seeds=None, out_dir=None) -> tuple[list, str]:
    """Train every seed, write per-seed logs plus summary.csv under `out_dir`, return (logs, csv text).

    A failing seed leaves an error record in its own log and is left out of the summary.
    """
    seeds = sorted(set(config.seeds if seeds is None else seeds))
    if not seeds:
        raise ValueError("need at least one seed")
    jobs = [(config, s) for s in seeds]
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds))) as pool:
            logs = list(pool.map(_run_one, jobs))
    else:
        logs = [_run_one(j) for j in jobs]
    text = summary_csv(logs)
    if out_dir is not None:
        out = Path(out_dir)
        for log in logs:
            log.write(out / f"seed{log.header['seed']}.jsonl")
        (out / "summary.csv").write_text(text, encoding="utf-8")
    return logs, text


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _ci(values):
    if len(values) < 2:
        return values[0], values[0]
    return bootstrap_ci(values, rng=np.random.default_rng(0))


def summary_rows(logs) -> list[dict]:
    """Across-seed statistics of the successful runs, grouped by (env, variant)."""
    groups: dict[tuple, list] = {}
    for log in sorted(logs, key=lambda g: g.header["seed"]):
        h = log.header
        key = ("+".join([h["env"], *h["wrappers"]]), h["variant"])
        groups.setdefault(key, []).append(log)

    rows = []
    for (env, variant), group in sorted(groups.items()):
        good = [g for g in group if g.ok and g.of("eval")]

        def row(metric, value, lo=None, hi=None, n=len(good)):
            rows.append({"metric": metric, "env": env, "variant": variant, "seed_count": n,
                         "value": value, "ci_lo": lo, "ci_hi": hi})

        row("failed_seeds", len(group) - len(good), n=len(group))
        if not good:
            continue
        finals = [g.of("eval")[-1]["mean"] for g in good]
        row("final_return", float(np.mean(finals)), *_ci(finals))
        s = seed_summary(finals)
        row("final_return_median", s.median, s.q1, s.q3)
        stds = [float(np.mean([r["std"] for r in g.of("eval")])) for g in good]
        row("test_return_std", float(np.mean(stds)), *_ci(stds))
        if all("member_std" in g.of("eval")[-1] for g in good):
            member = [float(np.mean([np.mean(r["member_std"]) for r in g.of("eval")])) for g in good]
            row("member_test_return_std", float(np.mean(member)), *_ci(member))
        rmsds = [g.of("final")[-1]["rmsd"] for g in good]
        rmsds = [r for r in rmsds if r is not None]
        if rmsds:
            row("rmsd", float(np.mean(rmsds)), *_ci(rmsds), n=len(rmsds))
        if all("solved_fraction" in g.of("eval")[-1] for g in good):
            steps = [solve_step([r["env_step"] for r in g.of("eval")],
                                [r["solved_fraction"] for r in g.of("eval")]) for g in good]
            solved = [s for s in steps if s is not None]
            row("solved_seeds", len(solved))
            if solved:
                row("median_solve_step", float(np.median(solved)), n=len(solved))
    return rows


def summary_csv(logs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(SUMMARY_COLUMNS)
    for r in summary_rows(logs):
        writer.writerow([r["metric"], r["env"], r["variant"], r["seed_count"],
                         _fmt(r["value"]), _fmt(r["ci_lo"]), _fmt(r["ci_hi"])])
    return buf.getvalue()


def emit_plot_data(logs, alpha: float = 0.4) -> str:
    """Per evaluation step: mean over seeds, bootstrap CI, and EMA-smoothed copies of the three."""
    if not logs:
        raise ValueError("no logs given")
    curves = [{r["env_step"]: r["mean"] for r in log.of("eval")} for log in logs]
    steps = sorted(curves[0])
    for c, log in zip(curves, logs):
        odd = sorted(set(c) ^ set(steps))
        if odd:
            listed = ", ".join(str(s) for s in odd)
            raise ValueError(f"evaluation steps of seed {log.header['seed']} differ from the first log at step {listed}")
    if not steps:
        raise ValueError("logs contain no evaluation phases")
    table = np.array([[c[s] for s in steps] for c in curves])
    mean = table.mean(axis=0)
    bounds = np.array([_ci(list(col)) for col in table.T])
    smooth = [ema_smooth(col, alpha) for col in (mean, bounds[:, 0], bounds[:, 1])]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["env_step", "seeds", "mean", "ci_lo", "ci_hi", "mean_ema", "ci_lo_ema", "ci_hi_ema"])
    for i, s in enumerate(steps):
        writer.writerow([s, len(logs), _fmt(mean[i]), _fmt(bounds[i, 0]), _fmt(bounds[i, 1]),
                         *(_fmt(col[i]) for col in smooth)])
    return buf.getvalue()
