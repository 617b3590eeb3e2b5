"""Movability filter instantiation: particles weighted by a projected heatmap."""

from __future__ import annotations

import numpy as np

from .core_types import CameraModel
from .filter_core import Belief
from .measurements import MovabilityMeasurement, heatmap_of

__all__ = ["MovabilityMeasurement", "bilinear_sample", "weight_movability"]


def bilinear_sample(grid: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Bilinear lookup of ``grid`` at in-frame continuous pixel coordinates."""
    h, w = grid.shape
    u = np.asarray(uv[:, 0], dtype=float)
    v = np.asarray(uv[:, 1], dtype=float)
    j0 = np.clip(np.floor(u).astype(np.intp), 0, w - 1)
    i0 = np.clip(np.floor(v).astype(np.intp), 0, h - 1)
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)
    fu = np.clip(u - j0, 0.0, 1.0)
    fv = np.clip(v - i0, 0.0, 1.0)
    top = grid[i0, j0] * (1 - fu) + grid[i0, j1] * fu
    bottom = grid[i1, j0] * (1 - fu) + grid[i1, j1] * fu
    return top * (1 - fv) + bottom * fv


def weight_movability(belief: Belief | np.ndarray, m, cam: CameraModel) -> np.ndarray:
    """Per-particle measurement weight: the heatmap value under the projection.

    Out-of-frame particles get 0.
    """
    positions = belief.positions if isinstance(belief, Belief) else np.asarray(belief, dtype=float)
    heat = heatmap_of(m)
    uv, ok = cam.project_points(positions)
    w = np.zeros(len(positions))
    if ok.any():
        w[ok] = bilinear_sample(heat, uv[ok])
    return np.clip(w, 0.0, 1.0)
