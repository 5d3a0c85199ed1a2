"""Synthetic planning instances on a regular TSV grid."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthParams:
    n_ftsv: int
    width: float
    height: float
    bbox_scale: float = 1.0
    site_pitch: float = 5.0
    seed: int = 0
    p: float = 0.001
    target_yield: float = 0.997
    kcap: int | None = 3
    margin: float = 0.0
    method: str = "mcmf"
    # net bounding boxes span this many pitches per side before scaling
    bbox_min_pitches: float = 3.0
    bbox_max_pitches: float = 8.0


def parse_area(text: str) -> tuple[float, float]:
    try:
        w, h = (float(x) for x in text.lower().split("x"))
    except ValueError:
        raise SynthError(f"area must look like WxH, got {text!r}") from None
    if w <= 0 or h <= 0:
        raise SynthError("area dimensions must be positive")
    return w, h


def grid_points(width: float, height: float, pitch: float) -> np.ndarray:
    nx = int(np.floor(width / pitch + 1e-9)) + 1
    ny = int(np.floor(height / pitch + 1e-9)) + 1
    gx, gy = np.meshgrid(np.arange(nx) * pitch, np.arange(ny) * pitch, indexing="xy")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def synth_instance(sp: SynthParams) -> dict:
    """Instance dict; identical for identical parameters."""
    if sp.n_ftsv < 1:
        raise SynthError("need at least one f-TSV")
    if sp.site_pitch <= 0:
        raise SynthError("site pitch must be positive")
    if sp.bbox_scale < 0:
        raise SynthError("bbox scale must be non-negative")
    pts = grid_points(sp.width, sp.height, sp.site_pitch)
    if len(pts) <= sp.n_ftsv:
        raise SynthError(
            f"area {sp.width}x{sp.height} at pitch {sp.site_pitch} has {len(pts)} grid points, "
            f"too few for {sp.n_ftsv} f-TSVs plus spare sites"
        )
    rng = np.random.Generator(np.random.PCG64(sp.seed))
    chosen = np.sort(rng.choice(len(pts), size=sp.n_ftsv, replace=False))
    mask = np.zeros(len(pts), dtype=bool)
    mask[chosen] = True
    span = rng.uniform(sp.bbox_min_pitches, sp.bbox_max_pitches, size=(sp.n_ftsv, 2)) * sp.site_pitch * sp.bbox_scale
    frac = rng.uniform(0.0, 1.0, size=(sp.n_ftsv, 2))
    f_tsvs = []
    limit = np.array([sp.width, sp.height])
    for i, j in enumerate(chosen):
        x, y = (float(v) for v in pts[j])
        # box of the drawn span around the TSV, shifted to stay on the die
        w = np.minimum(np.round(span[i], 3), limit)
        lo = np.clip(pts[j] - np.round(span[i] * frac[i], 3), 0.0, limit - w)
        below = np.round(pts[j] - lo, 3)
        above = np.round(w - below, 3)
        f_tsvs.append({
            "id": f"f{i + 1}", "x": round(x, 3), "y": round(y, 3),
            "bbox": {"xmin": round(x - below[0], 3), "ymin": round(y - below[1], 3),
                     "xmax": round(x + above[0], 3), "ymax": round(y + above[1], 3)},
        })
    sites = [{"id": f"s{k + 1}", "x": round(float(x), 3), "y": round(float(y), 3)}
             for k, (x, y) in enumerate(pts[~mask])]
    params = {"p": sp.p, "target_yield": sp.target_yield, "margin_um": sp.margin,
              "kcap": sp.kcap, "method": sp.method, "seed": sp.seed}
    return {"pitch_um": sp.site_pitch, "f_tsvs": f_tsvs, "s_sites": sites, "params": params}


def dumps(instance: dict) -> str:
    return json.dumps(instance, indent=1, sort_keys=True) + "\n"


def suite(count: int = 20, n_min: int = 50, n_max: int = 600, points_per_ftsv: float = 8.0,
          pitch: float = 5.0, seed: int = 0) -> list[SynthParams]:
    """Seeded benchmark suite: sizes spread evenly, area scaled to keep density fixed."""
    out = []
    for i in range(count):
        n = round(n_min + i * (n_max - n_min) / max(count - 1, 1))
        side = pitch * math.ceil(math.sqrt(n * points_per_ftsv))
        out.append(SynthParams(n, side, side, bbox_scale=(1.0, 1.25, 1.5)[i % 3], site_pitch=pitch,
                               seed=seed * 1000 + i))
    return out
