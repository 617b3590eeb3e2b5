"""Graspability filter instantiation.

Particles carry a gripper approach direction. The measurement weight is the
product of a proximity-weighted grasp success ``v`` and a pose-aware
similarity ``u`` against the candidate set, suppressed on depth
discontinuities where grasp predictors hallucinate edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import CameraModel, GripperPose, as_points
from .filter_core import Belief
from .measurements import GraspCandidate, GraspCandidateSet

__all__ = [
    "GraspCandidate", "GraspCandidateSet", "GraspabilityParams", "depth_discontinuity_mask",
    "grasp_pose_similarity_u", "grasp_success_likelihood_v", "grasp_terms", "weight_graspability",
]


@dataclass
class GraspabilityParams:
    kernel_sigma: float = 0.05
    discontinuity_threshold: float = 0.05
    discontinuity_penalty: float = 0.1
    pose_jitter_deg: float = 5.0

    def __post_init__(self):
        if not self.kernel_sigma > 0:
            raise ValueError("kernel_sigma must be positive")
        if not 0.0 <= self.discontinuity_penalty <= 1.0:
            raise ValueError("discontinuity_penalty must lie in [0, 1]")

    @property
    def pose_jitter(self) -> float:
        return float(np.deg2rad(self.pose_jitter_deg))


def _approach_of(nu, n: int) -> np.ndarray:
    if isinstance(nu, GripperPose):
        nu = nu.approach
    a = np.asarray(nu, dtype=float)
    if a.ndim == 1:
        a = np.broadcast_to(a, (n, 3))
    return a


def _proximity(x: np.ndarray, Z: GraspCandidateSet, sigma: float, chunk: int = 512) -> np.ndarray:
    """``p_j * K(x_i, y_j)`` as an ``(N, M)`` matrix.

    Differences are formed per pair (no ``|x|^2 + |y|^2 - 2xy`` expansion),
    so each entry is independent of the rest of the set.
    """
    out = np.empty((len(x), len(Z)))
    scale = -1.0 / (2.0 * sigma * sigma)
    for s in range(0, len(x), chunk):
        d = x[s:s + chunk, None, :] - Z.positions[None, :, :]
        out[s:s + chunk] = np.exp(np.einsum("ijk,ijk->ij", d, d) * scale)
    return out * Z.p[None, :]


def grasp_terms(x, nu, Z: GraspCandidateSet, params: GraspabilityParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(v, u)`` for every query point, sharing one kernel evaluation."""
    x = as_points(x)
    if len(Z) == 0:
        return np.zeros(len(x)), np.zeros(len(x))
    pk = _proximity(x, Z, params.kernel_sigma)
    v = pk.max(axis=1)
    a, b = _approach_of(nu, len(x)), Z.approach
    s = a[:, None, 0] * b[None, :, 0] + a[:, None, 1] * b[None, :, 1] + a[:, None, 2] * b[None, :, 2]
    s = np.maximum(s, 0.0)
    u = (pk * s).max(axis=1)
    return v, u


def grasp_success_likelihood_v(x, Z: GraspCandidateSet, params: GraspabilityParams) -> np.ndarray:
    """``v = max_j p_j K(x, y_j)``; 0 for an empty candidate set."""
    x = as_points(x)
    if len(Z) == 0:
        return np.zeros(len(x))
    return _proximity(x, Z, params.kernel_sigma).max(axis=1)


def grasp_pose_similarity_u(x, nu, Z: GraspCandidateSet, params: GraspabilityParams) -> np.ndarray:
    """``u = max_j p_j K(x, y_j) S(nu, upsilon_j)`` with ``S`` clamped below at 0."""
    return grasp_terms(x, nu, Z, params)[1]


def depth_discontinuity_mask(depth, params: GraspabilityParams) -> np.ndarray:
    """Pixels whose largest 4-neighbour depth jump exceeds the threshold.

    Invalid (zero) depth pixels are always marked.
    """
    d = np.asarray(depth, dtype=float)
    jump = np.zeros_like(d)
    dv = np.abs(np.diff(d, axis=0))
    du = np.abs(np.diff(d, axis=1))
    jump[1:, :] = np.maximum(jump[1:, :], dv)
    jump[:-1, :] = np.maximum(jump[:-1, :], dv)
    jump[:, 1:] = np.maximum(jump[:, 1:], du)
    jump[:, :-1] = np.maximum(jump[:, :-1], du)
    return (jump > params.discontinuity_threshold) | (d <= 0)


def on_mask(positions, mask: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Whether each point projects onto a marked pixel (out of frame counts as off)."""
    uv, ok = cam.project_points(positions)
    hit = np.zeros(len(uv), dtype=bool)
    if ok.any():
        r, c = cam.pixel_index(uv[ok])
        hit[ok] = mask[r, c]
    return hit


def weight_graspability(particles, Z: GraspCandidateSet, depth, cam: CameraModel,
                        params: GraspabilityParams, mask: np.ndarray | None = None) -> np.ndarray:
    """Measurement weight ``u * v``, scaled by the penalty on discontinuities.

    ``particles`` is a grasp :class:`Belief` or a single ``GraspParticle``.
    A precomputed discontinuity ``mask`` may be passed to avoid recomputing it.
    """
    if isinstance(particles, Belief):
        x, nu = particles.positions, particles.approach
    else:
        x, nu = particles.base.position[None, :], particles.pose.approach
    v, u = grasp_terms(x, nu, Z, params)
    w = u * v
    if mask is None:
        mask = depth_discontinuity_mask(depth, params)
    return np.where(on_mask(x, mask, cam), w * params.discontinuity_penalty, w)
