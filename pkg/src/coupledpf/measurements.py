"""Measurement containers and mass-proportional sampling from them.

Both filters draw new particles from their current measurement, at
initialization and at injection. A movability measurement is a heatmap whose
mass is lifted to 3D through the depth image; a grasp measurement is a set of
candidates weighted by their predicted success.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import CameraModel, GripperPose, check_heatmap, unit


@dataclass
class MovabilityMeasurement:
    heatmap: np.ndarray
    frame_id: int = 0

    def __post_init__(self):
        self.heatmap = check_heatmap(self.heatmap)


@dataclass(frozen=True)
class GraspCandidate:
    position: np.ndarray
    pose: GripperPose
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("grasp success must lie in [0, 1]")


class GraspCandidateSet:
    """Struct-of-arrays candidate set ``Z_t``; may be empty (occlusion)."""

    def __init__(self, positions=None, approach=None, roll=None, p=None, frame_id: int = 0):
        self.positions = np.zeros((0, 3)) if positions is None else np.asarray(positions, dtype=float).reshape(-1, 3)
        m = len(self.positions)
        self.approach = np.zeros((0, 3)) if approach is None else np.asarray(approach, dtype=float).reshape(-1, 3)
        self.roll = np.zeros(m) if roll is None else np.asarray(roll, dtype=float).reshape(-1)
        self.p = np.zeros(0) if p is None else np.asarray(p, dtype=float).reshape(-1)
        self.frame_id = frame_id
        if not (len(self.approach) == len(self.roll) == len(self.p) == m):
            raise ValueError("candidate arrays must have matching lengths")
        if m and np.any(np.abs(np.linalg.norm(self.approach, axis=1) - 1.0) > 1e-6):
            raise ValueError("candidate approach vectors must be unit-norm")
        if m and (self.p.min() < 0 or self.p.max() > 1):
            raise ValueError("grasp success must lie in [0, 1]")

    @classmethod
    def from_candidates(cls, candidates, frame_id: int = 0) -> "GraspCandidateSet":
        candidates = list(candidates)
        if not candidates:
            return cls(frame_id=frame_id)
        return cls(
            positions=[c.position for c in candidates],
            approach=[c.pose.approach for c in candidates],
            roll=[c.pose.roll for c in candidates],
            p=[c.p for c in candidates],
            frame_id=frame_id,
        )

    def __len__(self) -> int:
        return len(self.p)

    def __getitem__(self, j: int) -> GraspCandidate:
        pose = GripperPose(self.positions[j], self.approach[j], float(self.roll[j]))
        return GraspCandidate(self.positions[j], pose, float(self.p[j]))

    def subset(self, idx) -> "GraspCandidateSet":
        idx = np.asarray(idx)
        return GraspCandidateSet(self.positions[idx], self.approach[idx], self.roll[idx],
                                 self.p[idx], self.frame_id)

    def with_scores(self, p) -> "GraspCandidateSet":
        return GraspCandidateSet(self.positions, self.approach, self.roll, p, self.frame_id)


def heatmap_of(meas) -> np.ndarray:
    return meas.heatmap if isinstance(meas, MovabilityMeasurement) else np.asarray(meas, dtype=float)


def draw_indices(mass: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of ``n`` indices with probability proportional to ``mass``."""
    c = np.cumsum(mass)
    idx = np.searchsorted(c, rng.random(n) * c[-1], side="right")
    return np.minimum(idx, len(mass) - 1)


def jitter_directions(dirs: np.ndarray, sigma_rad: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb unit vectors by isotropic tangent noise of ``sigma_rad`` per axis."""
    if sigma_rad <= 0 or len(dirs) == 0:
        return dirs.copy()
    tangent = rng.normal(0.0, sigma_rad, dirs.shape)
    tangent -= np.sum(tangent * dirs, axis=1, keepdims=True) * dirs
    return unit(dirs + tangent)


def candidate_pixel_cells(cam: CameraModel, positions, grid_cells: int) -> np.ndarray:
    """Linear injection-grid cell of each point, -1 when out of frame."""
    uv, ok = cam.project_points(positions)
    cell = np.full(len(uv), -1, dtype=np.intp)
    if ok.any():
        cu = np.floor(uv[ok, 0] * grid_cells / cam.width).astype(np.intp)
        cv = np.floor(uv[ok, 1] * grid_cells / cam.height).astype(np.intp)
        cell[ok] = np.minimum(cv, grid_cells - 1) * grid_cells + np.minimum(cu, grid_cells - 1)
    return cell


def pixel_cells(cam: CameraModel, grid_cells: int) -> np.ndarray:
    """``(H, W)`` array of the linear injection-grid cell of every pixel."""
    rows = np.arange(cam.height) * grid_cells // cam.height
    cols = np.arange(cam.width) * grid_cells // cam.width
    return rows[:, None] * grid_cells + cols[None, :]


def draw_from_measurement(meas, depth: np.ndarray, cam: CameraModel, n: int,
                          rng: np.random.Generator, *, position_sigma: float = 0.0,
                          pose_jitter: float = 0.0, allowed_cells=None,
                          grid_cells: int = 8) -> dict | None:
    """Draw ``n`` particle states proportionally to measurement mass.

    ``allowed_cells`` optionally restricts the draw to a boolean vector over
    the ``grid_cells**2`` injection cells. Returns ``None`` when the
    (restricted) measurement has no mass.
    """
    if isinstance(meas, GraspCandidateSet):
        if len(meas) == 0:
            return None
        mass = meas.p.copy()
        if allowed_cells is not None:
            cells = candidate_pixel_cells(cam, meas.positions, grid_cells)
            mass[cells < 0] = 0.0
            mass[cells >= 0] *= allowed_cells[cells[cells >= 0]]
        if not mass.sum() > 0:
            return None
        j = draw_indices(mass, n, rng)
        pos = meas.positions[j]
        if position_sigma > 0:
            pos = pos + rng.normal(0.0, position_sigma, pos.shape)
        approach = jitter_directions(meas.approach[j], pose_jitter, rng)
        tracked = _surface_depth(cam, depth, pos)
        return {"positions": pos, "tracked_depth": tracked,
                "approach": approach, "roll": meas.roll[j].copy()}

    heat = heatmap_of(meas)
    mass = heat * (depth > 0)
    if allowed_cells is not None:
        mass = mass * allowed_cells[pixel_cells(cam, grid_cells)]
    flat = mass.ravel()
    if not flat.sum() > 0:
        return None
    k = draw_indices(flat, n, rng)
    rows, cols = np.divmod(k, cam.width)
    d = depth[rows, cols]
    pos = cam.lift(np.stack([cols, rows], axis=1).astype(float), d)
    if position_sigma > 0:
        pos = pos + rng.normal(0.0, position_sigma, pos.shape)
    return {"positions": pos, "tracked_depth": d.astype(float).copy()}


def _surface_depth(cam: CameraModel, depth: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Depth-image value under each point, falling back to the point's own z."""
    uv, ok = cam.project_points(positions)
    out = np.abs(positions[:, 2]).copy()
    if ok.any():
        r, c = cam.pixel_index(uv[ok])
        d = depth[r, c]
        sub = out[ok]
        sub[d > 0] = d[d > 0]
        out[ok] = sub
    out[out <= 0] = 1e-3
    return out
