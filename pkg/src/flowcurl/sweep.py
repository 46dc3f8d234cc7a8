"""Curriculum grid sweeps: many train runs, one ranked summary table.

A sweep spec is a text file with one schedule entry per line:

    uniform                                          (static control)
    logitnormal(mu=0.8,sigma=1.0) -> uniform @ 0.4   (curriculum, switch
                                                      at 40% of steps)

plus optional lines `base = <config path>` (shared TrainConfig, default
is the desk preset) and `workers = <int>` (process parallelism; capped
by FLOWCURL_THREADS).  Every entry runs once per seed; failures are
recorded and the sweep continues.  The ranked summary is a pure function
of the per-run rows, so it can be recomputed offline from runs.csv.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .config import TrainConfig, parse_config, preset, run_id
from .errors import ConfigError
from .timesteps import (Curriculum, TimestepDistribution, Uniform, LogitNormal,
                        Mode, parse_distribution, render_distribution)
from .trainer import train

RUNS_HEADER = "entry,seed,run_id,best_sw2,best_step,status"
SUMMARY_HEADER = "rank,entry,median_best_sw2,median_best_step,ok_seeds"


@dataclass(frozen=True)
class SweepEntry:
    """One schedule under test; static when phase2 is None."""

    phase1: TimestepDistribution
    phase2: Optional[TimestepDistribution] = None
    switch_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.switch_fraction <= 1.0:
            raise ConfigError(
                f"switch fraction must lie in [0, 1], got {self.switch_fraction}")

    def sampler(self, total_steps: int) -> TimestepDistribution:
        if self.phase2 is None:
            return self.phase1
        return Curriculum(phase1=self.phase1, phase2=self.phase2,
                          switch_step=int(round(self.switch_fraction * total_steps)))

    def label(self) -> str:
        if self.phase2 is None:
            return render_distribution(self.phase1)
        return (f"{render_distribution(self.phase1)} -> "
                f"{render_distribution(self.phase2)} @ {self.switch_fraction!r}")


@dataclass
class SweepSpec:
    entries: List[SweepEntry]
    base: TrainConfig = field(default_factory=TrainConfig)
    seeds: Tuple[int, ...] = (0, 1, 2)
    workers: int = 1


def default_entries() -> List[SweepEntry]:
    """The stock grid: three phase-1 families crossed with two phase-2
    refiners and four switch points, plus two static controls."""
    p1s = [LogitNormal(0.8, 1.0), LogitNormal(-0.4, 1.0), LogitNormal(-0.8, 1.0)]
    p2s = [Uniform(), Mode(-0.5)]
    fracs = [0.33, 0.40, 0.47, 0.53]
    entries = [SweepEntry(p1, p2, f) for p1 in p1s for p2 in p2s for f in fracs]
    entries.append(SweepEntry(Uniform()))
    entries.append(SweepEntry(LogitNormal(-0.8, 1.0)))
    return entries


def parse_sweep_entry(line: str) -> SweepEntry:
    if "->" in line:
        left, _, rest = line.partition("->")
        mid, at, frac_s = rest.rpartition("@")
        if not at:
            raise ConfigError(f"curriculum sweep entry needs '@ <fraction>': {line!r}")
        try:
            frac = float(frac_s.strip())
        except ValueError as e:
            raise ConfigError(f"bad switch fraction in sweep entry {line!r}") from e
        return SweepEntry(phase1=parse_distribution(left.strip()),
                          phase2=parse_distribution(mid.strip()),
                          switch_fraction=frac)
    return SweepEntry(phase1=parse_distribution(line.strip()))


def parse_sweep_spec(text: str, spec_dir: str = ".") -> SweepSpec:
    entries = []
    base = preset("desk")
    workers = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("base"):
            _, eq, path = line.partition("=")
            if not eq:
                raise ConfigError(f"malformed base line {lineno}: {raw!r}")
            path = path.strip()
            if not os.path.isabs(path):
                path = os.path.join(spec_dir, path)
            with open(path) as fh:
                base = parse_config(fh.read())
            continue
        if line.startswith("workers"):
            _, eq, value = line.partition("=")
            try:
                workers = int(value.strip())
            except ValueError as e:
                raise ConfigError(f"bad workers value on line {lineno}: {raw!r}") from e
            continue
        entries.append(parse_sweep_entry(line))
    if not entries:
        raise ConfigError("sweep spec contains no entries")
    return SweepSpec(entries=entries, base=base, workers=workers)


def _run_one(args):
    cfg, out_dir, label = args
    try:
        result = train(cfg, out_dir)
        return {"entry": label, "seed": cfg.seed, "run_id": result.run_id,
                "best_sw2": result.best_sw2, "best_step": result.best_step,
                "status": "ok"}
    except Exception as e:  # record the failure, keep sweeping
        return {"entry": label, "seed": cfg.seed, "run_id": run_id(cfg),
                "best_sw2": float("nan"), "best_step": -1,
                "status": f"failed:{type(e).__name__}"}


def thread_cap(default: Optional[int] = None) -> int:
    """Worker cap from FLOWCURL_THREADS (falls back to available cores)."""
    env = os.environ.get("FLOWCURL_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    if default is not None:
        return default
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, out_dir) -> List[dict]:
    """Execute every entry x seed, write runs.csv and summary.csv."""
    os.makedirs(out_dir, exist_ok=True)
    tasks = []
    for entry in spec.entries:
        for seed in spec.seeds:
            cfg = replace(spec.base, seed=seed,
                          sampler=entry.sampler(spec.base.total_steps))
            tasks.append((cfg, out_dir, entry.label()))

    n_workers = min(spec.workers, thread_cap())
    if n_workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]

    with open(os.path.join(out_dir, "runs.csv"), "w") as fh:
        fh.write(RUNS_HEADER + "\n")
        for r in rows:
            fh.write(f"{r['entry']},{r['seed']},{r['run_id']},"
                     f"{r['best_sw2']!r},{r['best_step']},{r['status']}\n")
    summary = summarize_runs(rows)
    write_summary(os.path.join(out_dir, "summary.csv"), summary)
    return rows


def summarize_runs(rows: List[dict]) -> List[dict]:
    """Ranked per-entry medians over successful seeds, ascending by metric.

    Pure function of the per-run rows; entries with no successful run sink
    to the bottom with empty medians.
    """
    order = []
    by_entry: dict = {}
    for r in rows:
        if r["entry"] not in by_entry:
            by_entry[r["entry"]] = []
            order.append(r["entry"])
        if r["status"] == "ok":
            by_entry[r["entry"]].append((float(r["best_sw2"]), int(r["best_step"])))

    scored = []
    for entry in order:
        ok = by_entry[entry]
        if ok:
            med_sw2 = float(np.median([v for v, _ in ok]))
            med_step = float(np.median([s for _, s in ok]))
            scored.append((0, med_sw2, entry, med_step, len(ok)))
        else:
            scored.append((1, 0.0, entry, float("nan"), 0))
    scored.sort(key=lambda s: (s[0], s[1], s[2]))
    out = []
    for rank, (_, med_sw2, entry, med_step, n_ok) in enumerate(scored, start=1):
        out.append({"rank": rank, "entry": entry,
                    "median_best_sw2": med_sw2 if n_ok else None,
                    "median_best_step": med_step if n_ok else None,
                    "ok_seeds": n_ok})
    return out


def write_summary(path, summary: List[dict]):
    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in summary:
            med = "" if row["median_best_sw2"] is None else repr(row["median_best_sw2"])
            step = "" if row["median_best_step"] is None else repr(row["median_best_step"])
            fh.write(f"{row['rank']},{row['entry']},{med},{step},{row['ok_seeds']}\n")


def read_runs_csv(path) -> List[dict]:
    """Load per-run rows back for offline re-ranking."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != RUNS_HEADER:
            raise ConfigError(f"unexpected runs.csv header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            # entry labels contain commas; split from the right
            entry, seed, rid, best_sw2, best_step, status = line.rsplit(",", 5)
            rows.append({"entry": entry, "seed": int(seed), "run_id": rid,
                         "best_sw2": float(best_sw2), "best_step": int(best_step),
                         "status": status})
    return rows
