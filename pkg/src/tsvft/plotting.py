"""Matplotlib figures for the bench harness (Agg backend, PNG output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MODE_STYLE = {
    "adaptive": dict(color="tab:blue", marker="o"),
    "kcap3": dict(color="tab:green", marker="s"),
    "fixed-k3": dict(color="tab:red", marker="^"),
}


def _style(mode: str) -> dict:
    return MODE_STYLE.get(mode, dict(marker="x"))


def plot_matrix(rows: list[dict], path: Path) -> Path:
    """Spare TSVs per instance, one series per planning mode."""
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for mode in modes:
        pts = [(r["n_ftsv"], r["total_stsvs"]) for r in rows if r["mode"] == mode and r["status"] == "ok"]
        if pts:
            xs, ys = zip(*sorted(pts))
            ax.plot(xs, ys, label=mode, linewidth=1.2, **_style(mode))
    ax.set_xlabel("f-TSVs in instance")
    ax.set_ylabel("allocated s-TSVs")
    ax.set_title("Spare TSV usage by planning mode")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(rows: list[dict], path: Path) -> Path:
    """s-TSV count against target TSV yield."""
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for mode in modes:
        pts = [(r["target_yield"], r["total_stsvs"]) for r in rows if r["mode"] == mode and r["status"] == "ok"]
        if pts:
            xs, ys = zip(*sorted(pts))
            ax.plot(xs, ys, label=mode, linewidth=1.2, **_style(mode))
    ax.set_xlabel("target TSV yield")
    ax.set_ylabel("allocated s-TSVs")
    ax.set_title("s-TSVs needed per yield target")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
