"""Run the estimation schemes over one frame sequence and score the outcome."""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingParams, coupled_step, filter_step
from .evaluation import (DEFAULT_SAMPLES, DEFAULT_TOLERANCE, CandidateScores, HeatmapPrediction,
                         MixturePrediction, ScoreGrid, ZeroMass, densest_region, part_distribution, precision,
                         sample_affordance_points)
from .filter_core import AllZeroMeasurement, Belief, FilterParams, initialize
from .fusion_baselines import (FusionScheme, early_fusion_init, early_fusion_step, late_fusion,
                               naive_fusion)
from .graspability import GraspabilityParams, depth_discontinuity_mask, on_mask

log = logging.getLogger(__name__)

# Stream ids; schemes sharing a filter role share its stream.
_GRASP, _MOVE, _EARLY, _EVAL = 1, 2, 3, 100


@dataclass
class PipelineParams:
    filter: FilterParams = field(default_factory=FilterParams)
    grasp: GraspabilityParams = field(default_factory=GraspabilityParams)
    coupling: CouplingParams = field(default_factory=CouplingParams)
    steps: int = 10
    n_samples: int = DEFAULT_SAMPLES
    tolerance: float = DEFAULT_TOLERANCE
    late_grid: float = 0.02


def stream(seed: int, scene: str, condition: str, role: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(scene.encode()), zlib.crc32(condition.encode()), role])


@dataclass
class SchemeOutcome:
    scheme: FusionScheme
    prediction: object = None
    beliefs: tuple = ()
    history: list = field(default_factory=list)
    status: str = "ok"


def _masks(frames, gp):
    return [depth_discontinuity_mask(f.depth, gp) for f in frames]


def _flow(frames, t):
    return frames[t - 1].flow if t > 0 else None


def run_single(frames, kind: str, params: PipelineParams, rng, masks=None, coupling=None,
               keep_history: bool = False) -> tuple[Belief, list]:
    """Uncoupled recursive filter for one measurement stream."""
    cp = params.coupling if coupling is None else coupling
    masks = masks or _masks(frames, params.grasp)
    meas = frames[0].grasp_meas if kind == "grasp" else frames[0].move_meas
    b = initialize(meas, frames[0], params.filter, rng, pose_jitter=params.grasp.pose_jitter)
    hist = []
    for t in range(params.steps):
        b = filter_step(b, kind, frames[t], params.filter, params.grasp, cp, rng, _flow(frames, t), masks[t])
        if keep_history:
            hist.append(b)
    return b, hist


def run_coupled(frames, params: PipelineParams, rngs, masks=None, coupling=None,
                keep_history: bool = False) -> tuple[Belief, Belief, list]:
    cp = params.coupling if coupling is None else coupling
    masks = masks or _masks(frames, params.grasp)
    g_rng, m_rng = rngs
    f0 = frames[0]
    gb = initialize(f0.grasp_meas, f0, params.filter, g_rng, pose_jitter=params.grasp.pose_jitter)
    mb = initialize(f0.move_meas, f0, params.filter, m_rng, pose_jitter=params.grasp.pose_jitter)
    hist = []
    for t in range(params.steps):
        gb, mb = coupled_step(gb, mb, frames[t], params.filter, params.grasp, cp, (g_rng, m_rng),
                              _flow(frames, t), masks[t])
        if keep_history:
            hist.append((gb, mb))
    return gb, mb, hist


def run_schemes(frames, schemes, params: PipelineParams, seed: int, scene: str, condition: str,
                keep_history: bool = False) -> dict:
    """Run every requested scheme on the same frames; returns ``{scheme: SchemeOutcome}``."""
    if len(frames) < params.steps:
        raise ValueError(f"need {params.steps} frames, got {len(frames)}")
    schemes = [FusionScheme.parse(s) if isinstance(s, str) else s for s in schemes]
    seed = seed + params.filter.rng_seed
    masks = _masks(frames[:params.steps], params.grasp)
    last = frames[params.steps - 1]
    out = {}
    single = {}

    def single_filter(kind):
        if kind not in single:
            role = _GRASP if kind == "grasp" else _MOVE
            single[kind] = run_single(frames, kind, params, stream(seed, scene, condition, role), masks,
                                      keep_history=keep_history)
        return single[kind]

    for s in schemes:
        res = SchemeOutcome(s)
        try:
            if s is FusionScheme.COUPLED:
                rngs = (stream(seed, scene, condition, _GRASP), stream(seed, scene, condition, _MOVE))
                gb, mb, hist = run_coupled(frames, params, rngs, masks, keep_history=keep_history)
                res.beliefs, res.history = (gb, mb), hist
                res.prediction = MixturePrediction([gb, mb])
            elif s is FusionScheme.GRASP_ONLY or s is FusionScheme.MOVE_ONLY:
                b, hist = single_filter("grasp" if s is FusionScheme.GRASP_ONLY else "move")
                res.beliefs, res.history, res.prediction = (b,), hist, b
            elif s is FusionScheme.LATE:
                gb, _ = single_filter("grasp")
                mb, _ = single_filter("move")
                res.beliefs = (gb, mb)
                res.prediction = late_fusion(gb, mb, params.late_grid)
            elif s is FusionScheme.EARLY:
                rng = stream(seed, scene, condition, _EARLY)
                b = early_fusion_init(frames[0], params.filter, params.grasp, rng)
                for t in range(params.steps):
                    b = early_fusion_step(b, frames[t], params.filter, params.grasp, rng,
                                          _flow(frames, t), masks[t])
                    if keep_history:
                        res.history.append(b)
                res.beliefs, res.prediction = (b,), b
            elif s is FusionScheme.NAIVE:
                res.prediction = naive_fusion(last.grasp_meas, last.move_meas, last)
            elif s is FusionScheme.RAW_GRASP:
                res.prediction = CandidateScores(last.grasp_meas.positions, last.grasp_meas.p)
            elif s is FusionScheme.RAW_MOVE:
                res.prediction = HeatmapPrediction(last.move_meas.heatmap, last.depth, last.cam)
        except AllZeroMeasurement as exc:
            log.warning("%s on %s/%s seed %d: %s", s.value, scene, condition, seed, exc)
            res.status = "zero_measurement"
        out[s] = res
    return out


def _point_estimate(pred):
    """Densest particle for beliefs; highest-scoring point otherwise."""
    if isinstance(pred, MixturePrediction):
        pts = np.concatenate([p.positions for p in pred.parts])
        return densest_region(pts)
    if isinstance(pred, Belief):
        return densest_region(pred)
    if isinstance(pred, CandidateScores):
        if len(pred.scores) == 0:
            return None
        return pred.positions[int(np.argmax(pred.scores))]
    if isinstance(pred, ScoreGrid):
        return pred.cell_centers([int(np.argmax(pred.scores))])[0]
    if isinstance(pred, HeatmapPrediction):
        heat = pred.heatmap * (pred.depth > 0)
        k = int(np.argmax(heat))
        r, c = divmod(k, pred.cam.width)
        if pred.depth[r, c] <= 0:
            return None
        return pred.cam.lift([[c, r]], [pred.depth[r, c]])[0]
    return None


def evaluate(outcome: SchemeOutcome, frame, params: PipelineParams, rng) -> dict:
    """Metrics for one scheme on the final frame (ground truth optional)."""
    row = {"status": outcome.status, "precision": None, "edge_fraction": None,
           "parts": None, "densest": None}
    if outcome.prediction is None:
        return row
    try:
        pts = sample_affordance_points(outcome.prediction, params.n_samples, rng)
    except ZeroMass:
        row["status"] = "zero_mass"
        if frame.ground_truth is not None:
            row["precision"] = 0.0
        return row
    mask = depth_discontinuity_mask(frame.depth, params.grasp)
    row["edge_fraction"] = float(np.mean(on_mask(pts, mask, frame.cam)))
    row["densest"] = _point_estimate(outcome.prediction)
    if frame.ground_truth is not None:
        row["precision"] = precision(pts, frame.ground_truth, params.tolerance)
        if frame.ground_truth:
            row["parts"] = part_distribution(pts, frame.ground_truth, params.tolerance)
    row["samples"] = pts
    return row


def evaluate_all(outcomes: dict, frames, params: PipelineParams, seed: int, scene: str,
                 condition: str) -> dict:
    last = frames[params.steps - 1]
    seed = seed + params.filter.rng_seed
    return {s: evaluate(o, last, params, stream(seed, scene, condition, _EVAL + list(FusionScheme).index(s)))
            for s, o in outcomes.items()}
