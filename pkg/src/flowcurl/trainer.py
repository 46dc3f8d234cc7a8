"""CFM training loop with per-timestep loss accounting.

Each step draws a batch from a finite cached training pool (rows sampled
i.i.d. with replacement), fresh Gaussian noise, and per-sample timesteps
from the configured (possibly curriculum) distribution, then performs one
Adam update on the weighted CFM objective.

Artifacts land under <out>/<run-id>/:
    config.txt          rendered TrainConfig (the hash preimage)
    runlog.csv          one row per step, metrics filled at eval boundaries
    loss_profile.csv    online per-bin loss means, one block per window
    ckpt_step*.fcw      checkpoint at each eval boundary
    ckpt_final.fcw      final checkpoint (params, Adam, EMA, config)
    done.txt            completion marker enabling skip-on-rerun

Two runs with identical config produce byte-identical runlog.csv files;
wall-clock timing is therefore logged as 0 unless log_timing is set.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .checkpoint import save_checkpoint
from .config import TrainConfig, render_config, run_id
from .datasets import Dataset, DatasetSpec
from .errors import DomainError, ParameterError, TrainingAborted
from .eval_metrics import energy_distance, mmd_rbf, sliced_w2
from .flow_path import RECTIFIED_LINEAR, adaptive_weight
from .neural_field import backward, forward, init_params
from .ode_sampler import SolverConfig, batch_generate
from .optimization import AdamState, EmaState, LrSchedule, adam_step, ema_update, lr_at
from .rng import Rng
from .timesteps import Curriculum, sample_t_batch

# fixed stream ids so every consumer owns an independent RNG sequence
STREAM_INIT = 0
STREAM_POOL = 1
STREAM_BATCH = 2
STREAM_NOISE = 3
STREAM_TIME = 4
STREAM_EVAL_NOISE = 5
STREAM_EVAL_POOL = 6
STREAM_EVAL_PROJ = 7

EVAL_SAMPLES = 8192
PAIRWISE_SUBSET = 2048  # energy/MMD are O(n^2); sw2 uses the full set

RUNLOG_HEADER = "step,train_loss,lr,phase,sw2,energy_dist,mmd,wall_ms"
PROFILE_HEADER = "eval_step,t,loss_mean,loss_count"


@dataclass
class LossProfile:
    """Histogram of per-sample losses over uniform t-bins."""

    bins: int
    sum: np.ndarray = field(default=None)
    count: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.bins < 2:
            raise ParameterError(f"bins must be >= 2, got {self.bins}")
        if self.sum is None:
            self.sum = np.zeros(self.bins)
        if self.count is None:
            self.count = np.zeros(self.bins, dtype=np.int64)

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bins + 1)

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) / self.bins

    def _bin_of(self, t: np.ndarray) -> np.ndarray:
        # t = 1.0 belongs to the last bin
        return np.minimum((t * self.bins).astype(np.int64), self.bins - 1)

    def record(self, t: float, loss: float):
        if t < 0.0 or t > 1.0:
            raise DomainError(f"t must be in [0, 1], got {t}")
        if loss < 0.0:
            raise DomainError(f"loss must be >= 0, got {loss}")
        i = min(int(t * self.bins), self.bins - 1)
        self.sum[i] += loss
        self.count[i] += 1

    def record_batch(self, t: np.ndarray, loss: np.ndarray):
        t = np.asarray(t, dtype=np.float64)
        loss = np.asarray(loss, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise DomainError("t values must lie in [0, 1]")
        if np.any(loss < 0.0):
            raise DomainError("loss values must be >= 0")
        idx = self._bin_of(t)
        np.add.at(self.sum, idx, loss)
        np.add.at(self.count, idx, 1)

    def means(self) -> np.ndarray:
        """Per-bin mean loss; NaN where a bin is empty."""
        out = np.full(self.bins, np.nan)
        mask = self.count > 0
        out[mask] = self.sum[mask] / self.count[mask]
        return out

    def reset(self):
        self.sum[:] = 0.0
        self.count[:] = 0


@dataclass
class TrainResult:
    run_dir: str
    run_id: str
    final_step: int
    best_sw2: float
    best_step: int
    final_params: Optional[np.ndarray] = None
    ema_shadow: Optional[np.ndarray] = None
    skipped: bool = False


def _fmt(x: float) -> str:
    return repr(float(x))


def _profile_rows(out: list, profile: LossProfile, eval_step: int):
    centers = profile.bin_centers
    for i in range(profile.bins):
        mean = "" if profile.count[i] == 0 else _fmt(profile.sum[i] / profile.count[i])
        out.append(f"{eval_step},{_fmt(centers[i])},{mean},{profile.count[i]}")


def _phase_of(cfg: TrainConfig, step: int) -> int:
    if isinstance(cfg.sampler, Curriculum) and step >= cfg.sampler.switch_step:
        return 2
    return 1


def train(cfg: TrainConfig, out_dir, force: bool = False, log_timing: bool = False,
          observer: Optional[Callable] = None) -> TrainResult:
    """Run the full training loop and write artifacts under out_dir/<run-id>.

    observer, if given, is called as observer(step, t_batch) after each
    step — used by diagnostics that need the raw timestep draws.
    """
    rid = run_id(cfg)
    run_dir = os.path.join(out_dir, rid)
    done_path = os.path.join(run_dir, "done.txt")
    if os.path.exists(done_path) and not force:
        return _load_existing(run_dir, rid)
    os.makedirs(run_dir, exist_ok=True)

    config_text = render_config(cfg)
    with open(os.path.join(run_dir, "config.txt"), "w") as fh:
        fh.write(config_text)

    root = Rng(cfg.seed)
    mlp_cfg = cfg.mlp_config()
    dataset = Dataset(DatasetSpec(variant=cfg.dataset))
    pool = dataset.sample(root.spawn(STREAM_POOL), DatasetSpec(variant=cfg.dataset).n_cache)
    eval_pool = dataset.sample(root.spawn(STREAM_EVAL_POOL), EVAL_SAMPLES)

    params = init_params(mlp_cfg, root.spawn(STREAM_INIT))
    adam = AdamState.fresh(params.size)
    ema = EmaState(decay=cfg.ema_decay)
    schedule = LrSchedule(base_lr=cfg.lr, warmup_steps=cfg.warmup)
    solver = SolverConfig(nfe=cfg.nfe)

    batch_rng = root.spawn(STREAM_BATCH)
    noise_rng = root.spawn(STREAM_NOISE)
    time_rng = root.spawn(STREAM_TIME)
    eval_noise_rng = root.spawn(STREAM_EVAL_NOISE)
    eval_proj_rng = root.spawn(STREAM_EVAL_PROJ)

    profile = LossProfile(bins=cfg.profile_bins)
    runlog_lines = [RUNLOG_HEADER]
    profile_lines = [PROFILE_HEADER]
    best_sw2 = math.inf
    best_step = 0
    n, d = cfg.batch_size, mlp_cfg.dim
    weighting_on = cfg.adaptive_p > 0.0
    switch_step = cfg.sampler.switch_step if isinstance(cfg.sampler, Curriculum) else None

    for step in range(cfg.total_steps):
        t0 = time.perf_counter() if log_timing else 0.0
        # phase boundary: flush the online profile so windows stay pure
        if switch_step is not None and step == switch_step and np.any(profile.count):
            _profile_rows(profile_lines, profile, step)
            profile.reset()

        idx = batch_rng.integers(pool.shape[0], n)
        x = pool[idx]
        eps = noise_rng.normal(n * d).reshape(n, d)
        t = sample_t_batch(cfg.sampler, time_rng, step, n)

        # rectified linear path: z = (1-t) x + t eps, target eps - x
        a = np.array([RECTIFIED_LINEAR.a(ti) for ti in t])[:, None]
        b = np.array([RECTIFIED_LINEAR.b(ti) for ti in t])[:, None]
        z = a * x + b * eps
        target = eps - x

        pred, tape = forward(params, z, t, mlp_cfg, need_tape=True)
        resid = pred - target
        sq_err = np.sum(resid * resid, axis=1)
        if weighting_on:
            w = adaptive_weight(sq_err, cfg.adaptive_p, cfg.adaptive_c)
            train_loss = float(np.mean(w * sq_err))
            grad_out = (2.0 / n) * w[:, None] * resid
        else:
            train_loss = float(np.mean(sq_err))
            grad_out = (2.0 / n) * resid

        if not math.isfinite(train_loss) or not np.all(np.isfinite(sq_err)):
            bad = np.flatnonzero(~np.isfinite(sq_err))
            t_bad = t[bad[0]] if bad.size else float(t[int(np.argmax(sq_err))])
            raise TrainingAborted(
                step=step,
                t_bin=min(int(t_bad * cfg.profile_bins), cfg.profile_bins - 1),
                param_norm=float(np.sqrt(np.sum(params * params))))

        profile.record_batch(t, sq_err)
        grad = backward(tape, params, grad_out)
        lr = lr_at(schedule, step)
        params = adam_step(params, grad, adam, lr)
        ema_update(ema, params)
        if observer is not None:
            observer(step, t)

        done = step + 1
        at_eval = done % cfg.eval_every == 0 or done == cfg.total_steps
        sw2_s = energy_s = mmd_s = ""
        if at_eval:
            gen = batch_generate(ema.shadow, mlp_cfg, eval_noise_rng,
                                 EVAL_SAMPLES, solver)
            sw2_v = sliced_w2(gen, eval_pool, eval_proj_rng)
            sub = min(PAIRWISE_SUBSET, EVAL_SAMPLES)
            energy_v = energy_distance(gen[:sub], eval_pool[:sub])
            mmd_v = mmd_rbf(gen[:sub], eval_pool[:sub])
            sw2_s, energy_s, mmd_s = _fmt(sw2_v), _fmt(energy_v), _fmt(mmd_v)
            if sw2_v < best_sw2:
                best_sw2, best_step = sw2_v, done
            _profile_rows(profile_lines, profile, done)
            profile.reset()
            save_checkpoint(os.path.join(run_dir, f"ckpt_step{done:07d}.fcw"),
                            params, mlp_cfg, ema_shadow=ema.shadow,
                            config_text=config_text)

        wall = round((time.perf_counter() - t0) * 1000.0, 3) if log_timing else 0
        runlog_lines.append(
            f"{done},{_fmt(train_loss)},{_fmt(lr)},{_phase_of(cfg, step)},"
            f"{sw2_s},{energy_s},{mmd_s},{wall}")

    save_checkpoint(os.path.join(run_dir, "ckpt_final.fcw"), params, mlp_cfg,
                    adam=adam, ema_shadow=ema.shadow, config_text=config_text)
    with open(os.path.join(run_dir, "runlog.csv"), "w") as fh:
        fh.write("\n".join(runlog_lines) + "\n")
    with open(os.path.join(run_dir, "loss_profile.csv"), "w") as fh:
        fh.write("\n".join(profile_lines) + "\n")
    with open(done_path, "w") as fh:
        fh.write(f"steps={cfg.total_steps}\nbest_sw2={_fmt(best_sw2)}\n"
                 f"best_step={best_step}\n")
    return TrainResult(run_dir=run_dir, run_id=rid, final_step=cfg.total_steps,
                       best_sw2=best_sw2, best_step=best_step,
                       final_params=params, ema_shadow=ema.shadow)


def _load_existing(run_dir: str, rid: str) -> TrainResult:
    """Reconstruct the summary of a completed run from its marker file."""
    fields = {}
    with open(os.path.join(run_dir, "done.txt")) as fh:
        for line in fh:
            key, eq, value = line.strip().partition("=")
            if eq:
                fields[key] = value
    return TrainResult(run_dir=run_dir, run_id=rid,
                       final_step=int(fields.get("steps", 0)),
                       best_sw2=float(fields.get("best_sw2", "inf")),
                       best_step=int(fields.get("best_step", 0)),
                       skipped=True)


def evaluate_loss_profile(velocity: Callable, dataset: Dataset, grid, n_mc: int,
                          rng: Rng) -> np.ndarray:
    """Offline loss landscape L(t) on a fixed grid, decoupled from training.

    velocity maps ((n, d) states, (n,) times) -> (n, d) predictions.  For
    each grid point, averages the unweighted squared residual over n_mc
    fresh (x, eps) pairs.  Returns shape (len(grid),).
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 1:
        raise ParameterError(f"grid must be a non-empty 1-D array, got shape {grid.shape}")
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise DomainError("grid points must lie in [0, 1]")
    if n_mc < 1:
        raise ParameterError(f"n_mc must be >= 1, got {n_mc}")
    d = dataset.dim
    out = np.empty(grid.size)
    for i, t_val in enumerate(grid):
        x = dataset.sample(rng, n_mc)
        eps = rng.normal(n_mc * d).reshape(n_mc, d)
        z = (1.0 - t_val) * x + t_val * eps
        t_vec = np.full(n_mc, t_val)
        resid = velocity(z, t_vec) - (eps - x)
        out[i] = float(np.mean(np.sum(resid * resid, axis=1)))
    return out


def model_velocity_fn(params: np.ndarray, mlp_cfg) -> Callable:
    """Bind network parameters as the velocity callable used above."""

    def velocity(z: np.ndarray, t: np.ndarray) -> np.ndarray:
        return forward(params, z, t, mlp_cfg)

    return velocity


def write_offline_profile(path, eval_step: int, grid, losses, n_mc: int):
    """Offline profile CSV in the same schema as the online series."""
    lines = [PROFILE_HEADER]
    for t_val, loss in zip(grid, losses):
        lines.append(f"{eval_step},{_fmt(t_val)},{_fmt(loss)},{n_mc}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
