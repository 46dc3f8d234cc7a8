"""Command-line interface.

Subcommands: train, sample, eval, loss-profile, sweep, plot.  Reporting
paths emit delimited text on stdout and, where an output location is
given, render the matching SVG figures next to the data files.
"""

from __future__ import annotations

import os

# honor the worker cap before numpy/numba spin up their thread pools
_threads = os.environ.get("FLOWCURL_THREADS", "").strip()
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import sys

import numpy as np

from .checkpoint import (CheckpointData, load_checkpoint, save_samples,
                         write_samples_csv)
from .config import parse_config, run_id
from .datasets import Dataset, DatasetSpec, parse_dataset
from .errors import FlowcurlError, InputError, TrainingAborted
from .eval_metrics import energy_distance, mmd_rbf, sliced_w2, u_shape_ratio
from .ode_sampler import SolverConfig, batch_generate
from .rng import Rng
from .trainer import (PROFILE_HEADER, STREAM_EVAL_NOISE, STREAM_EVAL_POOL,
                      STREAM_EVAL_PROJ, evaluate_loss_profile, model_velocity_fn,
                      train, write_offline_profile)


def _eval_params(data: CheckpointData, use_raw: bool) -> np.ndarray:
    if use_raw or data.ema_shadow is None:
        return data.params
    return data.ema_shadow


def _cmd_train(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    try:
        result = train(cfg, args.out, force=args.force, log_timing=args.timing)
    except TrainingAborted as e:
        print(f"training aborted: {e}", file=sys.stderr)
        return 2
    state = "skipped (already complete)" if result.skipped else "done"
    print(f"run {result.run_id} {state}")
    print(f"dir = {result.run_dir}")
    print(f"best_sw2 = {result.best_sw2!r} at step {result.best_step}")
    return 0


def _cmd_sample(args) -> int:
    data = load_checkpoint(args.ckpt)
    rng = Rng(args.seed).spawn(STREAM_EVAL_NOISE)
    samples = batch_generate(_eval_params(data, args.raw), data.config, rng,
                             args.n, SolverConfig(nfe=args.nfe))
    if args.out.endswith(".fcs"):
        save_samples(args.out, samples)
    else:
        write_samples_csv(args.out, samples)
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    data = load_checkpoint(args.ckpt)
    variant = parse_dataset(args.dataset)
    root = Rng(args.seed)
    dataset = Dataset(DatasetSpec(variant=variant))
    reference = dataset.sample(root.spawn(STREAM_EVAL_POOL), args.n)
    generated = batch_generate(_eval_params(data, args.raw), data.config,
                               root.spawn(STREAM_EVAL_NOISE), args.n,
                               SolverConfig(nfe=args.nfe))
    names = ("sw2", "energy", "mmd") if args.metric == "all" else (args.metric,)
    print("metric,value")
    for name in names:
        if name == "sw2":
            value = sliced_w2(generated, reference, root.spawn(STREAM_EVAL_PROJ))
        elif name == "energy":
            value = energy_distance(generated, reference)
        else:
            value = mmd_rbf(generated, reference)
        print(f"{name},{value!r}")
    return 0


def _cmd_loss_profile(args) -> int:
    data = load_checkpoint(args.ckpt)
    if data.config_text is None:
        raise InputError(
            f"checkpoint {args.ckpt} embeds no run config; cannot infer the dataset")
    cfg = parse_config(data.config_text)
    dataset = Dataset(DatasetSpec(variant=cfg.dataset))
    grid = np.linspace(0.0, 1.0, args.grid)
    rng = Rng(args.seed).spawn(97)
    velocity = model_velocity_fn(_eval_params(data, args.raw), data.config)
    losses = evaluate_loss_profile(velocity, dataset, grid, args.mc, rng)
    step = data.adam.step if data.adam is not None else 0

    print(PROFILE_HEADER)
    for t_val, loss in zip(grid, losses):
        print(f"{step},{float(t_val)!r},{float(loss)!r},{args.mc}")
    ratio = u_shape_ratio(grid, losses)
    print(f"u_shape_ratio = {ratio!r}", file=sys.stderr)
    if args.out:
        write_offline_profile(args.out, step, grid, losses, args.mc)
        from .plots import plot_offline_profile
        svg = os.path.splitext(args.out)[0] + ".svg"
        plot_offline_profile(grid, losses, svg)
        print(f"wrote {args.out} and {svg}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    from .sweep import parse_sweep_spec, run_sweep
    with open(args.spec) as fh:
        spec = parse_sweep_spec(fh.read(), spec_dir=os.path.dirname(
            os.path.abspath(args.spec)))
    spec.seeds = tuple(range(args.seeds))
    run_sweep(spec, args.out)
    with open(os.path.join(args.out, "summary.csv")) as fh:
        sys.stdout.write(fh.read())
    return 0


def _cmd_plot(args) -> int:
    from .plots import plot_loss_profiles, plot_metrics, plot_sampling_density
    run_dir = args.run
    cfg_path = os.path.join(run_dir, "config.txt")
    runlog = os.path.join(run_dir, "runlog.csv")
    profile = os.path.join(run_dir, "loss_profile.csv")
    for path in (cfg_path, runlog, profile):
        if not os.path.exists(path):
            raise InputError(f"run directory {run_dir} is missing {os.path.basename(path)}")
    with open(cfg_path) as fh:
        cfg = parse_config(fh.read())
    written = [
        plot_metrics(runlog, os.path.join(run_dir, "metrics.svg")),
        plot_loss_profiles(profile, os.path.join(run_dir, "loss_profile.svg")),
        plot_sampling_density(profile, cfg.sampler,
                              os.path.join(run_dir, "sampling_density.svg")),
    ]
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowcurl",
        description="Flow Matching training workbench with curriculum "
                    "timestep sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training job from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default="runs", help="output root directory")
    p.add_argument("--force", action="store_true",
                   help="re-run even if this config already completed")
    p.add_argument("--timing", action="store_true",
                   help="log real wall_ms (breaks byte-identical run logs)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sample", help="generate samples from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nfe", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="samples.csv",
                   help="output path (.fcs for binary, otherwise CSV)")
    p.add_argument("--raw", action="store_true",
                   help="use raw weights instead of the EMA shadow")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("eval", help="score a checkpoint against a dataset")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dataset", required=True,
                   help="descriptor, e.g. gmm(k=8,radius=4.0,sigma=0.3)")
    p.add_argument("--metric", choices=("sw2", "energy", "mmd", "all"),
                   default="all")
    p.add_argument("--n", type=int, default=8192)
    p.add_argument("--nfe", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("loss-profile",
                       help="offline L(t) landscape from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--mc", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None,
                   help="also write CSV here plus a sibling SVG figure")
    p.add_argument("--raw", action="store_true")
    p.set_defaults(func=_cmd_loss_profile)

    p = sub.add_parser("sweep", help="run a curriculum grid sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render SVG figures for a finished run")
    p.add_argument("--run", required=True, help="run directory (out/<run-id>)")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FlowcurlError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
