"""Command line entry point.

Exit codes: 0 success, 1 a run or seed failed, 2 bad arguments or input files.
Outputs go under $ED2LAB_OUT (default ./ed2lab_runs).
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..agent import PAPER_VARIANTS
from .config import PAPER_SCALE, ExperimentConfig, preset
from .runner import RunLog, train_run
from .suite import emit_plot_data, run_suite, summary_csv

OUT_ENV = "ED2LAB_OUT"


class UsageError(Exception):
    pass


def out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "ed2lab_runs"))


def parse_seeds(text: str) -> list[int]:
    """'0..4' (inclusive) or '1,5,9'."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad seed list {text!r}; use 'a..b' or 'a,b,c'") from None


def load_config(path: str, paper_scale: bool = False) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.from_text(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from None
    except (ValueError, TypeError) as e:
        raise UsageError(f"{path}: {e}") from None
    if paper_scale:
        cfg = replace(cfg, **PAPER_SCALE)
    return cfg


def load_logs(pattern: str) -> list[RunLog]:
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise UsageError(f"no logs match {pattern!r}")
    try:
        return [RunLog.read(p) for p in paths]
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(str(e)) from None


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    target = out_dir() / cfg.variant
    log = train_run(cfg, args.seed, checkpoint_dir=target / f"seed{args.seed}_ckpt" if args.checkpoint else None)
    path = log.write(target / f"seed{args.seed}.jsonl")
    if not log.ok:
        print(f"run failed: {log.of('error')[0]['message']} (log: {path})", file=sys.stderr)
        return 1
    final = log.of("final")[0]
    print(f"seed {args.seed}: final test return {final['final_mean']}, rmsd {final['rmsd']}, log {path}")
    return 0


def cmd_suite(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    seeds = parse_seeds(args.seeds) if args.seeds else list(cfg.seeds)
    if not seeds:
        raise UsageError("no seeds given")
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    logs, text = run_suite(cfg, seeds, out_dir() / cfg.variant)
    sys.stdout.write(text)
    failed = [g.header["seed"] for g in logs if not g.ok]
    for g in logs:
        if not g.ok:
            print(f"seed {g.header['seed']} failed: {g.of('error')[0]['message']}", file=sys.stderr)
    return 1 if failed else 0


def cmd_metrics(args) -> int:
    sys.stdout.write(summary_csv(load_logs(args.logs)))
    return 0


def cmd_plotdata(args) -> int:
    try:
        text = emit_plot_data(load_logs(args.logs), args.alpha)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_config(args) -> int:
    overrides = {}
    if args.env:
        overrides["env"] = args.env
    if args.wrappers is not None:
        overrides["wrappers"] = tuple(w for w in args.wrappers.split(",") if w)
    try:
        cfg = preset(args.variant, args.paper_scale, **overrides)
    except ValueError as e:
        raise UsageError(str(e)) from None
    sys.stdout.write(cfg.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ed2lab", description="Ensemble deterministic actor-critic experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one seed")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--paper-scale", action="store_true", help="full-size buffer, width, horizon and eval cadence")
    t.add_argument("--checkpoint", action="store_true", help="save final parameters next to the log")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("suite", help="train several seeds and summarize")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", help="'a..b' inclusive or 'a,b,c'; defaults to the config's seeds")
    s.add_argument("--workers", type=int)
    s.add_argument("--paper-scale", action="store_true")
    s.set_defaults(func=cmd_suite)

    m = sub.add_parser("metrics", help="summary CSV from existing logs")
    m.add_argument("--logs", required=True, help="glob of run logs")
    m.set_defaults(func=cmd_metrics)

    d = sub.add_parser("plotdata", help="smoothed learning-curve CSV")
    d.add_argument("--logs", required=True)
    d.add_argument("--alpha", type=float, default=0.4)
    d.add_argument("--output")
    d.set_defaults(func=cmd_plotdata)

    c = sub.add_parser("config", help="print a config file for a named variant")
    c.add_argument("--variant", default="ed2", choices=sorted(PAPER_VARIANTS))
    c.add_argument("--env")
    c.add_argument("--wrappers", help="comma list, e.g. sparse:1.0 or delayed:10,obs_norm")
    c.add_argument("--paper-scale", action="store_true")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
