"""Shared particle-filter procedure: initialize, predict, inject, normalize, resample.

A :class:`Belief` stores its particles as parallel arrays. Grasp beliefs
additionally carry an approach direction and roll per particle; every other
operation treats both kinds identically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core_types import CameraModel, GripperPose
from .measurements import GraspCandidateSet, candidate_pixel_cells, draw_from_measurement

log = logging.getLogger(__name__)


class AllZeroMeasurement(ValueError):
    """The measurement used for initialization carries no mass."""


class DegenerateBelief(ValueError):
    """Every particle weight is zero, so the belief cannot be normalized."""


@dataclass(frozen=True)
class Particle:
    position: np.ndarray
    tracked_depth: float
    weight: float


@dataclass(frozen=True)
class GraspParticle:
    base: Particle
    pose: GripperPose


@dataclass
class FilterParams:
    n_particles: int = 1000
    prediction_noise_sigma: float = 0.01
    depth_consistency_tol: float = 0.15
    injection_fraction: float = 0.05
    injection_grid_cells: int = 8
    # offsets the per-run filter streams; the scene noise has its own seed
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_particles < 10:
            raise ValueError("n_particles must be at least 10")
        if self.prediction_noise_sigma < 0:
            raise ValueError("prediction_noise_sigma must be non-negative")
        if not self.depth_consistency_tol > 0:
            raise ValueError("depth_consistency_tol must be positive")
        if not 0 <= self.injection_fraction < 0.5:
            raise ValueError("injection_fraction must lie in [0, 0.5)")
        if self.injection_grid_cells < 1:
            raise ValueError("injection_grid_cells must be positive")


@dataclass
class Belief:
    positions: np.ndarray
    tracked_depth: np.ndarray
    weights: np.ndarray
    approach: np.ndarray | None = None
    roll: np.ndarray | None = None
    generation: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.tracked_depth = np.asarray(self.tracked_depth, dtype=float).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        n = len(self.positions)
        if len(self.tracked_depth) != n or len(self.weights) != n:
            raise ValueError("belief arrays must have matching lengths")
        if np.any(self.weights < 0):
            raise ValueError("particle weights must be non-negative")
        if self.approach is not None:
            self.approach = np.asarray(self.approach, dtype=float).reshape(-1, 3)
            self.roll = np.zeros(n) if self.roll is None else np.asarray(self.roll, dtype=float).reshape(-1)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def is_grasp(self) -> bool:
        return self.approach is not None

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> Particle | GraspParticle:
        base = Particle(self.positions[i].copy(), float(self.tracked_depth[i]), float(self.weights[i]))
        if not self.is_grasp:
            return base
        return GraspParticle(base, GripperPose(self.positions[i], self.approach[i], float(self.roll[i])))

    def copy(self) -> "Belief":
        return Belief(
            self.positions.copy(), self.tracked_depth.copy(), self.weights.copy(),
            None if self.approach is None else self.approach.copy(),
            None if self.roll is None else self.roll.copy(),
            self.generation,
        )

    def take(self, idx) -> "Belief":
        idx = np.asarray(idx)
        return Belief(
            self.positions[idx], self.tracked_depth[idx], self.weights[idx],
            None if self.approach is None else self.approach[idx],
            None if self.roll is None else self.roll[idx],
            self.generation,
        )

    def with_weights(self, weights) -> "Belief":
        out = self.copy()
        out.weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(out.weights) != self.n:
            raise ValueError("weight vector length does not match the belief")
        return out


def initialize(measurement, frame, params: FilterParams, rng: np.random.Generator,
               *, pose_jitter: float = np.deg2rad(5.0)) -> Belief:
    """Draw the initial particle set from the first measurement.

    Heatmap mass is lifted through the frame's depth image; grasp candidates
    are drawn proportionally to their success with positional jitter of
    ``prediction_noise_sigma`` and inherit the candidate pose.
    """
    grasp = isinstance(measurement, GraspCandidateSet)
    n = params.n_particles
    drawn = draw_from_measurement(
        measurement, frame.depth, frame.cam, n, rng,
        position_sigma=params.prediction_noise_sigma if grasp else 0.0,
        pose_jitter=pose_jitter,
    )
    if drawn is None:
        raise AllZeroMeasurement("first measurement is identically zero")
    return Belief(drawn["positions"], drawn["tracked_depth"], np.full(n, 1.0 / n),
                  drawn.get("approach"), drawn.get("roll"))


def predict(belief: Belief, flow, depth, cam: CameraModel, params: FilterParams,
            rng: np.random.Generator | None = None) -> Belief:
    """Propagate particles along optical flow and re-lift them on the new depth.

    A particle whose flow lands on a depth more than ``depth_consistency_tol``
    away from its tracked depth (or on invalid depth) keeps the lateral motion
    but holds its tracked depth. Particles lifted onto the observed surface
    are left exactly in place by zero flow and zero noise.
    """
    out = belief.copy()
    pos = out.positions
    uv, ok = cam.project_points(pos)
    if ok.any():
        r, c = cam.pixel_index(uv[ok])
        uv2 = uv[ok] + flow[r, c]
        inside = ((uv2[:, 0] >= 0) & (uv2[:, 0] < cam.width)
                  & (uv2[:, 1] >= 0) & (uv2[:, 1] < cam.height))
        r2, c2 = cam.pixel_index(uv2)
        d_new = np.where(inside, depth[r2, c2], 0.0)
        tracked = out.tracked_depth[ok]
        consistent = (d_new > 0) & (np.abs(d_new - tracked) <= params.depth_consistency_tol)
        z = np.where(consistent, d_new, tracked)
        pos[ok] = cam.lift(uv2, z)
        out.tracked_depth[ok] = z
    sigma = params.prediction_noise_sigma
    if sigma > 0:
        if rng is None:
            raise ValueError("predict needs an rng when prediction noise is enabled")
        pos += rng.normal(0.0, sigma, pos.shape)
    return out


def _cell_counts(belief: Belief, cam: CameraModel, g: int) -> tuple[np.ndarray, np.ndarray]:
    cells = candidate_pixel_cells(cam, belief.positions, g)
    counts = np.bincount(cells[cells >= 0], minlength=g * g)
    return cells, counts


def low_density_cells(belief: Belief, cam: CameraModel, grid_cells: int) -> np.ndarray:
    """Cells whose occupancy is below the median, plus every empty cell."""
    _, counts = _cell_counts(belief, cam, grid_cells)
    return (counts < np.median(counts)) | (counts == 0)


def inject(belief: Belief, measurement, frame, params: FilterParams,
           rng: np.random.Generator, *, pose_jitter: float = np.deg2rad(5.0)) -> Belief:
    """Replace the lowest-weight particles with measurement samples from sparse cells.

    Replacement never removes the last particle of an occupied cell, so the
    number of occupied grid cells cannot shrink. Injected particles get weight
    ``1/N``.
    """
    n = belief.n
    k = int(np.floor(params.injection_fraction * n))
    if k == 0:
        return belief.copy()
    g = params.injection_grid_cells
    cam = frame.cam
    cells, counts = _cell_counts(belief, cam, g)
    low = (counts < np.median(counts)) | (counts == 0)
    drawn = draw_from_measurement(
        measurement, frame.depth, cam, k, rng,
        position_sigma=params.prediction_noise_sigma if isinstance(measurement, GraspCandidateSet) else 0.0,
        pose_jitter=pose_jitter, allowed_cells=low.astype(float), grid_cells=g,
    )
    if drawn is None:
        return belief.copy()

    order = np.lexsort((rng.random(n), belief.weights))
    remaining = counts.copy()
    victims = []
    for i in order:
        ci = cells[i]
        if ci >= 0:
            if remaining[ci] <= 1:
                continue
            remaining[ci] -= 1
        victims.append(i)
        if len(victims) == k:
            break
    victims = np.asarray(victims, dtype=np.intp)
    m = len(victims)

    out = belief.copy()
    out.positions[victims] = drawn["positions"][:m]
    out.tracked_depth[victims] = drawn["tracked_depth"][:m]
    out.weights[victims] = 1.0 / n
    if out.is_grasp and "approach" in drawn:
        out.approach[victims] = drawn["approach"][:m]
        out.roll[victims] = drawn["roll"][:m]
    return out


def normalize(belief: Belief) -> Belief:
    total = belief.weights.sum()
    if not (np.isfinite(total) and total > 0):
        raise DegenerateBelief("all particle weights are zero")
    return belief.with_weights(belief.weights / total)


def normalize_or_reset(belief: Belief, label: str = "") -> Belief:
    """Normalize, resetting to uniform weights (with a warning) on degeneracy."""
    try:
        return normalize(belief)
    except DegenerateBelief:
        log.warning("degenerate belief%s at generation %d; resetting to uniform weights",
                    f" ({label})" if label else "", belief.generation)
        return belief.with_weights(np.full(belief.n, 1.0 / belief.n))


def systematic_indices(weights, n: int | None, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: one uniform offset, stride ``1/n`` over the CDF."""
    w = np.asarray(weights, dtype=float)
    n = len(w) if n is None else n
    c = np.cumsum(w)
    c /= c[-1]
    points = (np.arange(n) + rng.random()) / n
    return np.minimum(np.searchsorted(c, points, side="right"), len(w) - 1)


def resample(belief: Belief, rng: np.random.Generator) -> Belief:
    idx = systematic_indices(belief.weights, None, rng)
    out = belief.take(idx)
    out.weights = np.full(belief.n, 1.0 / belief.n)
    out.generation = belief.generation + 1
    return out


__all__ = [
    "AllZeroMeasurement", "Belief", "DegenerateBelief", "FilterParams", "GraspParticle",
    "Particle", "initialize", "inject", "low_density_cells", "normalize",
    "normalize_or_reset", "predict", "resample", "systematic_indices",
]
