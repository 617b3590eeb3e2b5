"""Geometry, camera and kernel primitives shared by the filters and the simulator.

Conventions (fixed repo-wide):

* camera frame is right-handed, +x right, +y down, +z into the scene;
* pixel origin is the top-left corner, ``u`` indexes columns and ``v`` rows;
* a pixel value ``img[i, j]`` is sampled at the continuous coordinate
  ``(u, v) = (j, i)``; the image domain is half-open ``[0, W) x [0, H)``.

Points are plain ``numpy`` arrays of shape ``(3,)`` or ``(N, 3)``. Images are
``(H, W)`` arrays (depth in meters, 0 = invalid; heatmaps in [0, 1]) and flow
fields are ``(H, W, 2)`` arrays of ``(du, dv)`` pixel displacements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-6
# Round-off slack on the lower image bound so that lifting pixel 0 and
# projecting back still lands in frame.
EDGE_EPS = 1e-9


def as_points(p) -> np.ndarray:
    """Return ``p`` as a float ``(N, 3)`` array (a single point becomes N=1)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected points of shape (N, 3), got {arr.shape}")
    return arr


def point3(x: float, y: float, z: float) -> np.ndarray:
    p = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("Point3 components must be finite")
    return p


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize a zero vector")
    return v / n


@dataclass(frozen=True)
class GripperPose:
    """Grasp pose stored as (position, approach direction, roll about approach)."""

    position: np.ndarray
    approach: np.ndarray
    roll: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        a = np.asarray(self.approach, dtype=float)
        if abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise ValueError("GripperPose.approach must be unit-norm")
        object.__setattr__(self, "approach", a)


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def project_points(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Project ``(N, 3)`` points; returns ``(uv, in_frame)``.

        ``uv`` is ``(N, 2)`` (NaN where z <= 0) and ``in_frame`` marks
        projections inside ``[0, W) x [0, H)`` with positive depth.
        """
        pts = as_points(points)
        z = pts[:, 2]
        front = z > 0
        uv = np.full((len(pts), 2), np.nan)
        zs = z[front]
        uv[front, 0] = self.fx * (pts[front, 0] / zs) + self.cx
        uv[front, 1] = self.fy * (pts[front, 1] / zs) + self.cy
        with np.errstate(invalid="ignore"):
            in_frame = (
                front
                & (uv[:, 0] >= -EDGE_EPS) & (uv[:, 0] < self.width)
                & (uv[:, 1] >= -EDGE_EPS) & (uv[:, 1] < self.height)
            )
        return uv, in_frame

    def lift(self, uv, depth) -> np.ndarray:
        """Vectorized backprojection without domain checks."""
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        d = np.asarray(depth, dtype=float).reshape(-1)
        x = (uv[:, 0] - self.cx) / self.fx * d
        y = (uv[:, 1] - self.cy) / self.fy * d
        return np.stack([x, y, d], axis=1)

    def pixel_index(self, uv) -> tuple[np.ndarray, np.ndarray]:
        """Nearest pixel ``(row, col)`` for continuous coordinates, clipped to the image."""
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        col = np.clip(np.rint(np.nan_to_num(uv[:, 0])), 0, self.width - 1).astype(np.intp)
        row = np.clip(np.rint(np.nan_to_num(uv[:, 1])), 0, self.height - 1).astype(np.intp)
        return row, col

    def pixel_grid(self) -> np.ndarray:
        """``(H, W, 2)`` array of the ``(u, v)`` coordinate of every pixel."""
        v, u = np.mgrid[0:self.height, 0:self.width].astype(float)
        return np.stack([u, v], axis=-1)


def project(cam: CameraModel, p) -> tuple[float, float] | None:
    """Pinhole projection of one point; ``None`` marks an out-of-frame point."""
    uv, ok = cam.project_points(p)
    if not ok[0]:
        return None
    return float(uv[0, 0]), float(uv[0, 1])


def backproject(cam: CameraModel, u: float, v: float, depth: float) -> np.ndarray:
    if not depth > 0:
        raise ValueError(f"backproject needs depth > 0, got {depth}")
    if not (0 <= u < cam.width and 0 <= v < cam.height):
        raise ValueError(f"pixel ({u}, {v}) outside the image")
    return cam.lift([[u, v]], [depth])[0]


def gaussian_kernel(a, b, sigma: float):
    """``exp(-|a-b|^2 / (2 sigma^2))``; broadcasts over leading axes."""
    if not sigma > 0:
        raise ValueError("kernel bandwidth must be positive")
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    sq = np.sum(d * d, axis=-1)
    return np.exp(-sq / (2.0 * sigma * sigma))


def cosine_similarity(a, b):
    """Dot product of unit vectors (negative values pass through)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for name, vec in (("a", a), ("b", b)):
        if np.any(np.abs(np.linalg.norm(vec, axis=-1) - 1.0) > UNIT_TOL):
            raise ValueError(f"cosine_similarity: {name} is not unit-norm")
    return np.sum(a * b, axis=-1)


def check_depth(depth) -> np.ndarray:
    d = np.asarray(depth, dtype=float)
    if d.ndim != 2 or not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("depth image must be a finite, non-negative 2D grid")
    return d


def check_heatmap(heat) -> np.ndarray:
    h = np.asarray(heat, dtype=float)
    if h.ndim != 2 or not np.all(np.isfinite(h)) or h.min(initial=0) < 0 or h.max(initial=0) > 1:
        raise ValueError("heatmap must be a 2D grid with values in [0, 1]")
    return h


def check_flow(flow) -> np.ndarray:
    f = np.asarray(flow, dtype=float)
    if f.ndim != 3 or f.shape[2] != 2 or not np.all(np.isfinite(f)):
        raise ValueError("flow field must be a finite (H, W, 2) grid")
    return f


# --- ground-truth interaction volumes -------------------------------------


@dataclass(frozen=True)
class SphereVolume:
    center: np.ndarray
    radius: float
    label: str = ""

    def distance(self, points) -> np.ndarray:
        """Euclidean distance to the sphere, 0 inside."""
        pts = as_points(points)
        return np.maximum(np.linalg.norm(pts - self.center, axis=1) - self.radius, 0.0)

    def transformed(self, rotation, translation) -> "SphereVolume":
        c = np.asarray(rotation) @ np.asarray(self.center, dtype=float) + translation
        return SphereVolume(c, self.radius, self.label)

    def contains(self, points) -> np.ndarray:
        return self.distance(points) <= 0.0


@dataclass(frozen=True)
class BoxVolume:
    """Oriented box: ``rotation`` maps box axes into the parent frame."""

    center: np.ndarray
    half_extents: np.ndarray
    label: str = ""
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def distance(self, points) -> np.ndarray:
        pts = as_points(points)
        local = (pts - np.asarray(self.center, dtype=float)) @ np.asarray(self.rotation)
        excess = np.maximum(np.abs(local) - np.asarray(self.half_extents, dtype=float), 0.0)
        return np.linalg.norm(excess, axis=1)

    def transformed(self, rotation, translation) -> "BoxVolume":
        rotation = np.asarray(rotation, dtype=float)
        c = rotation @ np.asarray(self.center, dtype=float) + translation
        return BoxVolume(c, np.asarray(self.half_extents, dtype=float), self.label,
                         rotation @ np.asarray(self.rotation))

    def contains(self, points) -> np.ndarray:
        return self.distance(points) <= 0.0


Volume = SphereVolume | BoxVolume


def distance_to_volumes(points, volumes) -> np.ndarray:
    """Distance of each point to the nearest volume (inf when there are none)."""
    pts = as_points(points)
    if not volumes:
        return np.full(len(pts), np.inf)
    return np.min(np.stack([vol.distance(pts) for vol in volumes]), axis=0)
