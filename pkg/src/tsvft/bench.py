"""Comparison matrix and target-yield sweep over a seeded synthetic suite.

Outputs in ``out_dir``:

* ``matrix.csv``  one row per (instance, mode)
* ``summary.csv`` per-mode totals and s-TSV change against the fixed-k baseline
* ``sweep.csv``   s-TSVs per target yield on one instance
* ``timing.csv``  wall-clock seconds (kept apart so the other files are byte-stable)
* ``matrix.png``, ``sweep.png``
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .planner import PlanInfeasible, instance_from_dict, plan, plan_fixed_k
from .synth import SynthParams, suite, synth_instance

MODES = ("adaptive", "kcap3", "fixed-k3")
SWEEP_TARGETS = tuple(round(0.991 + 0.001 * i, 3) for i in range(9))
WORKERS_ENV = "TSVTOL_WORKERS"


@dataclass
class BenchConfig:
    out_dir: Path
    count: int = 20
    n_min: int = 50
    n_max: int = 600
    seed: int = 0
    workers: Optional[int] = None
    sweep_n: int = 200
    sweep_targets: tuple[float, ...] = SWEEP_TARGETS
    modes: tuple[str, ...] = MODES
    plots: bool = True


def worker_count(explicit: Optional[int] = None) -> int:
    if explicit is not None:
        return max(1, explicit)
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class _Job:
    name: str
    sp: SynthParams
    mode: str
    target: Optional[float] = None
    extra: dict = field(default_factory=dict)


def run_mode(instance: dict, mode: str, target: Optional[float] = None) -> dict:
    """Plan one instance dict in one mode; returns a flat result row."""
    params = instance["params"]
    if target is not None:
        params["target_yield"] = target
    if mode == "adaptive":
        params["kcap"] = None
    elif mode.startswith("kcap"):
        params["kcap"] = int(mode[4:])
    inst = instance_from_dict(instance)
    t0 = time.perf_counter()
    try:
        if mode.startswith("fixed-k"):
            res = plan_fixed_k(inst, int(mode[7:]))
        else:
            res = plan(inst)
    except PlanInfeasible as exc:
        return {"status": "infeasible", "num_groups": "", "total_stsvs": "", "max_mux_ports": "",
                "tsv_yield": round(exc.best_yield, 6), "seconds": time.perf_counter() - t0}
    return {"status": "ok", **res.totals(), "seconds": time.perf_counter() - t0}


def _run_job(job: _Job) -> dict:
    inst = synth_instance(job.sp)
    row = {"instance": job.name, "seed": job.sp.seed, "n_ftsv": job.sp.n_ftsv, "n_sites": len(inst["s_sites"]),
           "bbox_scale": job.sp.bbox_scale, "mode": job.mode}
    if job.target is not None:
        row["target_yield"] = job.target
    row.update(run_mode(inst, job.mode, job.target))
    return row


def _map(jobs: list[_Job], workers: int) -> list[dict]:
    if workers <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def summarize(rows: list[dict], baseline: str = "fixed-k3") -> list[dict]:
    by = {(r["instance"], r["mode"]): r for r in rows}
    instances = list(dict.fromkeys(r["instance"] for r in rows))
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    out = []
    for mode in modes:
        ok = [by[(i, mode)] for i in instances if by[(i, mode)]["status"] == "ok"]
        wins = paired = 0
        rel = []
        for i in instances:
            r, b = by[(i, mode)], by.get((i, baseline))
            if r["status"] != "ok" or b is None:
                continue
            if b["status"] != "ok":
                wins += 1
                continue
            paired += 1
            wins += r["total_stsvs"] <= b["total_stsvs"]
            if b["total_stsvs"]:
                rel.append(100.0 * (r["total_stsvs"] - b["total_stsvs"]) / b["total_stsvs"])
        out.append({
            "mode": mode,
            "planned": len(ok),
            "infeasible": len(instances) - len(ok),
            "total_stsvs": sum(r["total_stsvs"] for r in ok),
            "max_mux_ports": max((r["max_mux_ports"] for r in ok), default=""),
            "mean_rel_stsvs_vs_baseline_pct": round(sum(rel) / len(rel), 2) if rel else "",
            "not_worse_than_baseline": wins,
            "paired_with_baseline": paired,
        })
    return out


def run_bench(cfg: BenchConfig) -> dict:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    workers = worker_count(cfg.workers)
    t0 = time.perf_counter()
    params = suite(cfg.count, cfg.n_min, cfg.n_max, seed=cfg.seed)
    jobs = [_Job(f"syn{i:02d}", sp, mode) for i, sp in enumerate(params) for mode in cfg.modes]
    rows = _map(jobs, workers)
    sweep_sp = replace(suite(1, cfg.sweep_n, cfg.sweep_n, seed=cfg.seed)[0], seed=cfg.seed * 1000 + 999)
    sweep_jobs = [_Job("sweep", sweep_sp, mode, t) for t in cfg.sweep_targets for mode in cfg.modes]
    sweep_rows = _map(sweep_jobs, workers)

    cols = ["instance", "seed", "n_ftsv", "n_sites", "bbox_scale", "mode", "status", "num_groups",
            "total_stsvs", "max_mux_ports", "tsv_yield"]
    _write_csv(cfg.out_dir / "matrix.csv", rows, cols)
    summary = summarize(rows)
    _write_csv(cfg.out_dir / "summary.csv", summary, list(summary[0]) if summary else ["mode"])
    _write_csv(cfg.out_dir / "sweep.csv", sweep_rows,
               ["target_yield", "mode", "status", "num_groups", "total_stsvs", "max_mux_ports", "tsv_yield"])
    timing = [{"instance": r["instance"], "mode": r["mode"], "target_yield": r.get("target_yield", ""),
               "seconds": round(r["seconds"], 3)} for r in rows + sweep_rows]
    _write_csv(cfg.out_dir / "timing.csv", timing, ["instance", "mode", "target_yield", "seconds"])
    files = ["matrix.csv", "summary.csv", "sweep.csv", "timing.csv"]
    if cfg.plots:
        from .plotting import plot_matrix, plot_sweep

        plot_matrix(rows, cfg.out_dir / "matrix.png")
        plot_sweep(sweep_rows, cfg.out_dir / "sweep.png")
        files += ["matrix.png", "sweep.png"]
    return {"out_dir": str(cfg.out_dir), "files": files, "summary": summary, "workers": workers,
            "seconds": round(time.perf_counter() - t0, 2)}
