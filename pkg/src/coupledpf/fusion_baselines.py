"""Comparators for the coupled filters: naive, early and late fusion, plus the
single-source schemes used in the ablations."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .core_types import CameraModel
from .evaluation import CandidateScores, ScoreGrid
from .filter_core import Belief, FilterParams, initialize, inject, normalize_or_reset, predict, resample
from .graspability import GraspabilityParams, depth_discontinuity_mask, weight_graspability
from .measurements import GraspCandidateSet, heatmap_of
from .movability import bilinear_sample, weight_movability


class FusionScheme(str, Enum):
    COUPLED = "coupled"
    NAIVE = "naive"
    EARLY = "early"
    LATE = "late"
    GRASP_ONLY = "grasp_only"
    MOVE_ONLY = "move_only"
    RAW_GRASP = "raw_grasp"
    RAW_MOVE = "raw_move"

    @classmethod
    def parse(cls, name: str) -> "FusionScheme":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}") from None


SCHEME_HELP = {
    FusionScheme.COUPLED: "graspability and movability filters coupled by cross-modal density",
    FusionScheme.NAIVE: "grasp candidates scored by success x heatmap value, no recursion",
    FusionScheme.EARLY: "one filter weighted by the product of both measurements",
    FusionScheme.LATE: "two independent filters, 3D histograms multiplied at the end",
    FusionScheme.GRASP_ONLY: "graspability filter alone",
    FusionScheme.MOVE_ONLY: "movability filter alone",
    FusionScheme.RAW_GRASP: "grasp candidates sampled by predicted success",
    FusionScheme.RAW_MOVE: "heatmap mass lifted through depth",
}


def _heat_at(points: np.ndarray, heat: np.ndarray, cam: CameraModel) -> np.ndarray:
    uv, ok = cam.project_points(points)
    out = np.zeros(len(points))
    if ok.any():
        out[ok] = bilinear_sample(heat, uv[ok])
    return out


def naive_fusion(grasp_meas: GraspCandidateSet, move_meas, frame) -> CandidateScores:
    """Score each candidate by ``p_j`` times the heatmap under its projection."""
    heat = heatmap_of(move_meas)
    scores = grasp_meas.p * _heat_at(grasp_meas.positions, heat, frame.cam)
    return CandidateScores(grasp_meas.positions.copy(), scores)


def combined_measurement(frame) -> GraspCandidateSet:
    """Grasp candidates rescored by the heatmap: the early-fusion signal."""
    scored = naive_fusion(frame.grasp_meas, frame.move_meas, frame)
    return frame.grasp_meas.with_scores(np.clip(scored.scores, 0.0, 1.0))


def early_fusion_weight(belief: Belief, frame, gp: GraspabilityParams, mask=None) -> np.ndarray:
    w_move = weight_movability(belief, frame.move_meas, frame.cam)
    w_grasp = weight_graspability(belief, frame.grasp_meas, frame.depth, frame.cam, gp, mask=mask)
    return w_move * w_grasp


def early_fusion_init(frame, fp: FilterParams, gp: GraspabilityParams, rng) -> Belief:
    return initialize(combined_measurement(frame), frame, fp, rng, pose_jitter=gp.pose_jitter)


def early_fusion_step(belief: Belief, frame, fp: FilterParams, gp: GraspabilityParams,
                      rng: np.random.Generator, flow=None, mask=None) -> Belief:
    if flow is None:
        flow = np.zeros(frame.depth.shape + (2,))
    b = predict(belief, flow, frame.depth, frame.cam, fp, rng)
    b = inject(b, combined_measurement(frame), frame, fp, rng, pose_jitter=gp.pose_jitter)
    if mask is None:
        mask = depth_discontinuity_mask(frame.depth, gp)
    w = early_fusion_weight(b, frame, gp, mask)
    return resample(normalize_or_reset(b.with_weights(w), "early"), rng)


def _histogram(points: np.ndarray, weights: np.ndarray, origin: np.ndarray, cell: float,
               shape: tuple) -> np.ndarray:
    idx = np.floor((points - origin) / cell).astype(np.intp)
    idx = np.clip(idx, 0, np.asarray(shape) - 1)
    flat = np.ravel_multi_index(idx.T, shape)
    h = np.bincount(flat, weights=weights, minlength=int(np.prod(shape))).reshape(shape)
    total = h.sum()
    return h / total if total > 0 else h


def late_fusion(grasp_belief: Belief, move_belief: Belief, grid_resolution: float = 0.02) -> ScoreGrid:
    """Bin both beliefs on one 3D grid and multiply the normalized histograms."""
    pts = np.concatenate([grasp_belief.positions, move_belief.positions])
    origin = np.floor(pts.min(axis=0) / grid_resolution) * grid_resolution
    shape = tuple(int(s) for s in np.floor((pts.max(axis=0) - origin) / grid_resolution).astype(int) + 1)
    hg = _histogram(grasp_belief.positions, grasp_belief.weights, origin, grid_resolution, shape)
    hm = _histogram(move_belief.positions, move_belief.weights, origin, grid_resolution, shape)
    return ScoreGrid(origin, grid_resolution, hg * hm)


__all__ = [
    "FusionScheme", "SCHEME_HELP", "combined_measurement", "early_fusion_init", "early_fusion_step",
    "early_fusion_weight", "late_fusion", "naive_fusion",
]
