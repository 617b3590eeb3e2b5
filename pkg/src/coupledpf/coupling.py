"""Cross-modal fusion between the graspability and movability filters.

Each particle's measurement weight is combined with its kernel density under
the *other* filter's belief. The density is an unnormalized kernel sum, so it
is divided by the other belief's particle count before clipping; that keeps
the clip ranges meaningful for any particle count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core_types import as_points
from .filter_core import (Belief, FilterParams, inject, normalize_or_reset, predict,
                          resample)
from .graspability import GraspabilityParams, depth_discontinuity_mask, weight_graspability
from .movability import weight_movability

BRUTE_FORCE_MAX = 2000
_KD_RADIUS_SIGMAS = 6.0
_KD_REL_TOL = 1e-6


@dataclass(frozen=True)
class ClipRange:
    lo: float
    hi: float

    def __post_init__(self):
        # lo == hi is allowed: a degenerate range switches a term off.
        if self.lo > self.hi:
            raise ValueError(f"clip range needs lo <= hi, got ({self.lo}, {self.hi})")

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi


@dataclass
class CouplingParams:
    sigma: float = 0.05
    grasp_measurement_clip: ClipRange = field(default_factory=lambda: ClipRange(0.2, 0.25))
    grasp_crossmodal_clip: ClipRange = field(default_factory=lambda: ClipRange(0.3, 0.6))
    move_measurement_clip: ClipRange = field(default_factory=lambda: ClipRange(0.2, 0.3))
    move_crossmodal_clip: ClipRange = field(default_factory=lambda: ClipRange(0.45, 0.55))
    # Map the clamped value affinely onto [0, 1] instead of a pure clamp.
    rescale: bool = False
    # "count": divide the kernel sum by the other belief's size; "none": raw sum.
    normalization: str = "count"
    density_method: str = "auto"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("coupling sigma must be positive")
        if self.density_method not in ("auto", "brute", "kdtree"):
            raise ValueError(f"unknown density method {self.density_method!r}")
        if self.normalization not in ("count", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @classmethod
    def uncoupled(cls, **kw) -> "CouplingParams":
        """Cross-modal terms fixed at 1, i.e. two independent filters."""
        return cls(grasp_crossmodal_clip=ClipRange(1.0, 1.0),
                   move_crossmodal_clip=ClipRange(1.0, 1.0), **kw)


def _positions(b) -> np.ndarray:
    return b.positions if isinstance(b, Belief) else as_points(b)


def _density_brute(x: np.ndarray, y: np.ndarray, sigma: float, chunk: int = 256) -> np.ndarray:
    out = np.empty(len(x))
    scale = -1.0 / (2.0 * sigma * sigma)
    for s in range(0, len(x), chunk):
        d = x[s:s + chunk, None, :] - y[None, :, :]
        out[s:s + chunk] = np.exp(np.einsum("ijk,ijk->ij", d, d) * scale).sum(axis=1)
    return out


def _density_kdtree(x: np.ndarray, y: np.ndarray, sigma: float) -> np.ndarray:
    """Truncated kernel sum with a per-query tail bound; falls back to brute force."""
    r = _KD_RADIUS_SIGMAS * sigma
    qtree, ytree = cKDTree(x), cKDTree(y)
    sdm = qtree.sparse_distance_matrix(ytree, r, output_type="coo_matrix")
    vals = np.exp(-(sdm.data ** 2) / (2.0 * sigma * sigma))
    out = np.bincount(sdm.row, weights=vals, minlength=len(x))
    n_in = np.bincount(sdm.row, minlength=len(x))
    tail = (len(y) - n_in) * np.exp(-r * r / (2.0 * sigma * sigma))
    redo = tail > _KD_REL_TOL * out
    if redo.any():
        out[redo] = _density_brute(x[redo], y, sigma)
    return out


def crossmodal_density(x, other, sigma: float = 0.05, method: str = "auto") -> np.ndarray:
    """Kernel sum ``sum_y exp(-|x-y|^2 / (2 sigma^2))`` over the other belief."""
    q = as_points(x)
    y = _positions(other)
    if len(y) == 0:
        raise ValueError("the other belief is empty")
    if method == "brute" or (method == "auto" and len(y) <= BRUTE_FORCE_MAX):
        return _density_brute(q, y, sigma)
    return _density_kdtree(q, y, sigma)


def clip(value, rng: ClipRange, rescale: bool = False):
    c = np.minimum(rng.hi, np.maximum(rng.lo, value))
    if rescale and not rng.degenerate:
        c = (c - rng.lo) / (rng.hi - rng.lo)
    return c


def fuse_weights(w_meas, w_cross, measurement_clip: ClipRange, crossmodal_clip: ClipRange,
                 n_other: int = 1, rescale: bool = False):
    """``w = f_u(w_meas) * f_c(w_cross / n_other)``."""
    return (clip(w_meas, measurement_clip, rescale)
            * clip(np.asarray(w_cross, dtype=float) / n_other, crossmodal_clip, rescale))


# --- the coupled timestep ----------------------------------------------------


def propose(belief: Belief, kind: str, frame, fp: FilterParams, gp: GraspabilityParams,
            rng: np.random.Generator, flow=None, mask=None) -> tuple[Belief, np.ndarray]:
    """Predict, inject and measure one filter; returns the belief and its w-tilde."""
    if flow is None:
        flow = np.zeros(frame.depth.shape + (2,))
    meas = frame.grasp_meas if kind == "grasp" else frame.move_meas
    b = predict(belief, flow, frame.depth, frame.cam, fp, rng)
    b = inject(b, meas, frame, fp, rng, pose_jitter=gp.pose_jitter)
    if kind == "grasp":
        if mask is None:
            mask = depth_discontinuity_mask(frame.depth, gp)
        w = weight_graspability(b, meas, frame.depth, frame.cam, gp, mask=mask)
    else:
        w = weight_movability(b, meas, frame.cam)
    return b, w


def _finish(belief: Belief, w: np.ndarray, rng, label: str) -> Belief:
    b = normalize_or_reset(belief.with_weights(w), label)
    return resample(b, rng)


def filter_step(belief: Belief, kind: str, frame, fp: FilterParams, gp: GraspabilityParams,
                cp: CouplingParams, rng: np.random.Generator, flow=None, mask=None) -> Belief:
    """One uncoupled step: the measurement weight passes through its clip only."""
    b, w_meas = propose(belief, kind, frame, fp, gp, rng, flow, mask)
    mclip = cp.grasp_measurement_clip if kind == "grasp" else cp.move_measurement_clip
    return _finish(b, clip(w_meas, mclip, cp.rescale), rng, kind)


def coupled_step(grasp_belief: Belief, move_belief: Belief, frame, fp: FilterParams,
                 gp: GraspabilityParams, cp: CouplingParams, rngs, flow=None,
                 mask=None) -> tuple[Belief, Belief]:
    """Advance both filters by one frame through the cross-modal barrier.

    ``rngs`` is a ``(grasp_rng, move_rng)`` pair; each filter consumes only its
    own stream. Both density passes read the post-update, pre-resample
    snapshot of the two beliefs.
    """
    g_rng, m_rng = rngs
    gb, gw = propose(grasp_belief, "grasp", frame, fp, gp, g_rng, flow, mask)
    mb, mw = propose(move_belief, "move", frame, fp, gp, m_rng, flow, mask)

    g_snapshot = gb.positions.copy()
    m_snapshot = mb.positions.copy()
    if cp.grasp_crossmodal_clip.degenerate:
        g_cross = np.full(gb.n, cp.grasp_crossmodal_clip.lo * (len(m_snapshot) if cp.normalization == "count" else 1))
    else:
        g_cross = crossmodal_density(g_snapshot, m_snapshot, cp.sigma, cp.density_method)
    if cp.move_crossmodal_clip.degenerate:
        m_cross = np.full(mb.n, cp.move_crossmodal_clip.lo * (len(g_snapshot) if cp.normalization == "count" else 1))
    else:
        m_cross = crossmodal_density(m_snapshot, g_snapshot, cp.sigma, cp.density_method)

    g_norm = len(m_snapshot) if cp.normalization == "count" else 1
    m_norm = len(g_snapshot) if cp.normalization == "count" else 1
    g_final = fuse_weights(gw, g_cross, cp.grasp_measurement_clip, cp.grasp_crossmodal_clip,
                           g_norm, cp.rescale)
    m_final = fuse_weights(mw, m_cross, cp.move_measurement_clip, cp.move_crossmodal_clip,
                           m_norm, cp.rescale)
    return _finish(gb, g_final, g_rng, "grasp"), _finish(mb, m_final, m_rng, "move")
