"""Coupled particle filters for graspability and movability affordances.

The graspability filter weights particles by grasp-candidate likelihood, the
movability filter by a lifted 2D heatmap; each filter's weights are then
multiplied by the (clipped) kernel density of the other filter's belief.
A ray-cast scene simulator and an experiment runner provide a benchmark.
"""

from .core_types import BoxVolume, CameraModel, GripperPose, SphereVolume
from .coupling import ClipRange, CouplingParams, coupled_step, crossmodal_density, fuse_weights
from .evaluation import precision, sample_affordance_points
from .filter_core import Belief, FilterParams, initialize, resample, systematic_indices
from .fusion_baselines import FusionScheme
from .graspability import GraspabilityParams, weight_graspability
from .measurements import GraspCandidateSet, MovabilityMeasurement
from .movability import weight_movability
from .pipeline import PipelineParams, run_schemes
from .scene_sim import Condition, NoiseModel, make_benchmark_suite, render_sequence

__version__ = "0.1.0"

__all__ = [
    "Belief", "BoxVolume", "CameraModel", "ClipRange", "Condition", "CouplingParams", "FilterParams",
    "FusionScheme", "GraspCandidateSet", "GraspabilityParams", "GripperPose", "MovabilityMeasurement",
    "NoiseModel", "PipelineParams", "SphereVolume", "coupled_step", "crossmodal_density", "fuse_weights",
    "initialize", "make_benchmark_suite", "precision", "render_sequence", "resample", "run_schemes",
    "sample_affordance_points", "systematic_indices", "weight_graspability", "weight_movability",
]
