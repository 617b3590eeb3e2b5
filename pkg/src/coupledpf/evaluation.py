"""Evaluation: affordance-point sampling, precision at tolerance, part coverage,
and densest-region extraction from a belief."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_types import CameraModel, as_points
from .filter_core import Belief
from .measurements import GraspCandidateSet, MovabilityMeasurement, draw_indices, heatmap_of

DEFAULT_SAMPLES = 200
DEFAULT_TOLERANCE = 0.02
# Round-off slack so a point exactly on the closed tolerance boundary counts as a hit.
BOUNDARY_EPS = 1e-12


class ZeroMass(ValueError):
    """The prediction has no mass to sample from."""


@dataclass
class ScoreGrid:
    """3D grid of non-negative scores over cubic cells of side ``cell``."""

    origin: np.ndarray
    cell: float
    scores: np.ndarray

    def cell_centers(self, flat_idx) -> np.ndarray:
        ijk = np.stack(np.unravel_index(flat_idx, self.scores.shape), axis=1)
        return self.origin + (ijk + 0.5) * self.cell


@dataclass
class CandidateScores:
    """Per-point scores, e.g. grasp candidates scored by a fusion rule."""

    positions: np.ndarray
    scores: np.ndarray


@dataclass
class HeatmapPrediction:
    heatmap: np.ndarray
    depth: np.ndarray
    cam: CameraModel


@dataclass
class MixturePrediction:
    """Equal-mass mixture of several predictions (used for the joint coupled belief)."""

    parts: list
    mix: list = field(default_factory=list)


@dataclass
class PrecisionReport:
    scene: str
    scheme: str
    seed: int
    precision: float
    samples: int
    tolerance: float
    part_distribution: dict = field(default_factory=dict)


def sample_affordance_points(result, n: int = DEFAULT_SAMPLES, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw ``n`` points proportionally to the prediction's mass (no jitter for beliefs)."""
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(result, MixturePrediction):
        mix = np.asarray(result.mix or [1.0] * len(result.parts), dtype=float)
        counts = np.bincount(draw_indices(mix, n, rng), minlength=len(result.parts))
        chunks = [sample_affordance_points(p, int(c), rng) for p, c in zip(result.parts, counts) if c]
        return np.concatenate(chunks) if chunks else np.zeros((0, 3))
    if isinstance(result, Belief):
        mass, pts = result.weights, result.positions
    elif isinstance(result, CandidateScores):
        mass, pts = np.asarray(result.scores, dtype=float), np.asarray(result.positions, dtype=float)
    elif isinstance(result, GraspCandidateSet):
        mass, pts = result.p, result.positions
    elif isinstance(result, ScoreGrid):
        flat = result.scores.ravel()
        if not flat.sum() > 0:
            raise ZeroMass("score grid is empty")
        k = draw_indices(flat, n, rng)
        return result.cell_centers(k) + rng.uniform(-0.5, 0.5, (n, 3)) * result.cell
    elif isinstance(result, HeatmapPrediction):
        heat = heatmap_of(result.heatmap) if isinstance(result.heatmap, MovabilityMeasurement) else result.heatmap
        flat = (heat * (result.depth > 0)).ravel()
        if not flat.sum() > 0:
            raise ZeroMass("heatmap has no mass on valid depth")
        k = draw_indices(flat, n, rng)
        rows, cols = np.divmod(k, result.cam.width)
        return result.cam.lift(np.stack([cols, rows], axis=1).astype(float), result.depth[rows, cols])
    else:
        raise TypeError(f"cannot sample from {type(result).__name__}")
    if len(mass) == 0 or not mass.sum() > 0:
        raise ZeroMass("prediction has zero total mass")
    return pts[draw_indices(mass, n, rng)].copy()


def precision(samples, volumes, tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Fraction of samples within ``tolerance`` of the nearest volume (boundary inclusive)."""
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    pts = as_points(samples)
    if len(pts) == 0:
        return 0.0
    if not volumes:
        return 0.0
    d = np.min(np.stack([v.distance(pts) for v in volumes]), axis=0)
    return float(np.mean(d <= tolerance + BOUNDARY_EPS))


def part_distribution(samples, parts, tolerance: float = DEFAULT_TOLERANCE) -> dict:
    """Hit fraction per labelled part; each hit counts toward its nearest part."""
    if not parts:
        raise ValueError("part_distribution needs at least one part")
    pts = as_points(samples)
    labels = [p.label or f"part{i}" for i, p in enumerate(parts)]
    out = {lab: 0.0 for lab in labels}
    if len(pts) == 0:
        return out
    d = np.stack([p.distance(pts) for p in parts])
    nearest = np.argmin(d, axis=0)
    hit = d[nearest, np.arange(len(pts))] <= tolerance + BOUNDARY_EPS
    for i, lab in enumerate(labels):
        out[lab] += float(np.sum(hit & (nearest == i))) / len(pts)
    return out


def densest_region(belief, sigma: float = 0.05) -> np.ndarray:
    """Particle position with the highest leave-one-out kernel density (ties: lowest index)."""
    pts = belief.positions if isinstance(belief, Belief) else as_points(belief)
    w = belief.weights if isinstance(belief, Belief) else np.ones(len(pts))
    if len(pts) == 0:
        raise ValueError("densest_region needs a non-empty belief")
    scale = -1.0 / (2.0 * sigma * sigma)
    dens = np.empty(len(pts))
    for s in range(0, len(pts), 256):
        d = pts[s:s + 256, None, :] - pts[None, :, :]
        k = np.exp(np.einsum("ijk,ijk->ij", d, d) * scale) * w[None, :]
        dens[s:s + 256] = k.sum(axis=1) - w[s:s + 256]
    return pts[int(np.argmax(dens))].copy()
