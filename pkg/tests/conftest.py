import numpy as np
import pytest
from hypothesis import settings

from coupledpf.core_types import CameraModel
from coupledpf.measurements import GraspCandidateSet, MovabilityMeasurement
from coupledpf.scene_sim import SceneFrame

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


@pytest.fixture
def cam():
    return CameraModel(fx=100.0, fy=100.0, cx=50.0, cy=50.0, width=100, height=100)


def flat_frame(cam, depth=1.0, heat=None, grasps=None, truth=None, t=0):
    """A frame on a fronto-parallel plane."""
    d = np.full(cam.shape, depth)
    h = np.zeros(cam.shape) if heat is None else heat
    return SceneFrame(d, np.zeros(cam.shape + (2,)), cam, grasps or GraspCandidateSet(frame_id=t),
                      MovabilityMeasurement(h, t), truth, t, "test", "well_lit-clean")


def candidates(points, approach=(0.0, 0.0, -1.0), p=1.0):
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    a = np.broadcast_to(np.asarray(approach, dtype=float), pts.shape)
    pp = np.broadcast_to(np.asarray(p, dtype=float), (len(pts),))
    return GraspCandidateSet(pts, a, np.zeros(len(pts)), pp)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
