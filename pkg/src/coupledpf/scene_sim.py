"""Deterministic synthetic scenes standing in for recorded RGB-D sequences.

Scenes are built from axis-aligned boxes and y-axis cylinders. Each frame is
ray-cast analytically, so depth, flow and the projection of the
ground-truth interaction volumes are exact. Two synthetic measurement
sources replace the learned models:

* a movability heatmap that fires on the true interaction volumes (blurred,
  dimmed in the dark) plus false-positive blobs elsewhere;
* a grasp predictor that proposes candidates on every graspable patch,
  including distractors that cannot move, plus spurious candidates on
  depth discontinuities.

Every output is a pure function of ``(scene, t, noise, condition)``; the
noise model carries the seed.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from .core_types import BoxVolume, CameraModel, SphereVolume, unit
from .graspability import GraspabilityParams, depth_discontinuity_mask
from .measurements import GraspCandidateSet, MovabilityMeasurement

LIGHTING = ("well_lit", "dark")
CLUTTER = ("clean", "cluttered")


@dataclass(frozen=True)
class Condition:
    lighting: str = "well_lit"
    clutter: str = "clean"

    def __post_init__(self):
        if self.lighting not in LIGHTING:
            raise ValueError(f"lighting must be one of {LIGHTING}, got {self.lighting!r}")
        if self.clutter not in CLUTTER:
            raise ValueError(f"clutter must be one of {CLUTTER}, got {self.clutter!r}")

    @property
    def name(self) -> str:
        return f"{self.lighting}-{self.clutter}"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        lighting, _, clutter = name.partition("-")
        return cls(lighting, clutter or "clean")


@dataclass
class NoiseModel:
    heatmap_blur_sigma: float = 1.5
    heatmap_false_positive_rate: float = 0.15
    heatmap_false_positive_amplitude: float = 0.7
    heatmap_false_positive_sigma: float = 4.0
    heatmap_background: float = 0.0
    heatmap_background_scale: float = 8.0
    heatmap_dropout: float = 0.0
    dark_attenuation: float = 0.3
    grasp_candidates_per_patch: int = 24
    grasp_dropout: float = 0.0
    grasp_edge_fp_rate: float = 0.3
    grasp_position_sigma: float = 0.01
    grasp_p_noise: float = 0.1
    edge_threshold: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("heatmap_false_positive_rate", "grasp_edge_fp_rate", "heatmap_dropout",
                     "grasp_dropout", "heatmap_background"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("heatmap_blur_sigma", "heatmap_false_positive_sigma",
                     "grasp_position_sigma", "grasp_p_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def noiseless(cls, **kw) -> "NoiseModel":
        base = dict(heatmap_blur_sigma=0.0, heatmap_false_positive_rate=0.0, heatmap_background=0.0,
                    heatmap_dropout=0.0, grasp_dropout=0.0, grasp_edge_fp_rate=0.0,
                    grasp_position_sigma=0.0, grasp_p_noise=0.0)
        base.update(kw)
        return cls(**base)


@dataclass
class Shape:
    """Box (``dims`` = half extents) or y-axis cylinder (``dims`` = radius, half height, unused)."""

    kind: str
    center: np.ndarray
    dims: np.ndarray

    def __post_init__(self):
        if self.kind not in ("box", "cylinder"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        self.center = np.asarray(self.center, dtype=float)
        self.dims = np.asarray(self.dims, dtype=float)

    def moved(self, offset) -> "Shape":
        return Shape(self.kind, self.center + offset, self.dims)


@dataclass
class SceneObject:
    """A rigid object: one or more shapes sharing a constant per-frame translation.

    Shape centers and volumes are given in the object frame (relative to
    ``position``). ``grasp_patches`` are the regions a grasp predictor would
    fire on; when empty, every visible surface of the object is graspable.
    Structures (table, wall, shelf) are neither manipulable nor distractors.
    """

    name: str
    shapes: list
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    manipulable_volumes: list = field(default_factory=list)
    grasp_patches: list = field(default_factory=list)
    is_distractor: bool = False
    is_structure: bool = False
    graspable_edges: bool = False
    appear_frame: int = 0
    clutter_only: bool = False

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if not self.is_structure and bool(self.manipulable_volumes) == self.is_distractor:
            raise ValueError(f"object {self.name!r}: manipulable volumes must be empty iff it is a distractor")

    def offset(self, t: int) -> np.ndarray:
        return self.position + self.velocity * t

    def present(self, t: int, condition: Condition) -> bool:
        if self.clutter_only and condition.clutter != "cluttered":
            return False
        return t >= self.appear_frame

    def world_volumes(self, t: int, source=None) -> list:
        vols = self.manipulable_volumes if source is None else source
        off = self.offset(t)
        return [v.transformed(np.eye(3), off) for v in vols]


@dataclass
class Scene:
    name: str
    cam: CameraModel
    objects: list
    n_frames: int = 30
    description: str = ""

    def object(self, name: str) -> SceneObject:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)


@dataclass
class SceneFrame:
    depth: np.ndarray
    flow: np.ndarray
    cam: CameraModel
    grasp_meas: GraspCandidateSet
    move_meas: MovabilityMeasurement
    ground_truth: list | None
    frame_id: int = 0
    scene_name: str = ""
    condition: str = ""


# --- ray casting ---------------------------------------------------------------


def pixel_rays(cam: CameraModel) -> np.ndarray:
    """``(H*W, 3)`` ray directions scaled so the z component is 1 (t equals depth)."""
    grid = cam.pixel_grid().reshape(-1, 2)
    return np.stack([(grid[:, 0] - cam.cx) / cam.fx, (grid[:, 1] - cam.cy) / cam.fy,
                     np.ones(len(grid))], axis=1)


def _safe_inverse(d: np.ndarray) -> np.ndarray:
    d = np.where(np.abs(d) < 1e-12, np.where(d < 0, -1e-12, 1e-12), d)
    return 1.0 / d


def ray_box(origin, rays: np.ndarray, center, half, rotation=None):
    """Slab test; returns ``(t_enter, t_exit, entry_axis)`` with ``t_enter = inf`` on a miss."""
    o = np.asarray(origin, dtype=float) - np.asarray(center, dtype=float)
    d = rays
    if rotation is not None:
        o = o @ rotation
        d = rays @ rotation
    inv = _safe_inverse(d)
    t1 = (-np.asarray(half) - o) * inv
    t2 = (np.asarray(half) - o) * inv
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    t_enter = tmin.max(axis=1)
    t_exit = tmax.min(axis=1)
    axis = tmin.argmax(axis=1)
    miss = (t_enter > t_exit) | (t_exit <= 0)
    t_enter = np.where(miss, np.inf, t_enter)
    return t_enter, t_exit, axis


def ray_sphere(rays: np.ndarray, center, radius):
    c = np.asarray(center, dtype=float)
    a = np.sum(rays * rays, axis=1)
    b = -2.0 * rays @ c
    cc = c @ c - radius * radius
    disc = b * b - 4 * a * cc
    hit = disc >= 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    t0 = (-b - sq) / (2 * a)
    t1 = (-b + sq) / (2 * a)
    t_enter = np.where(hit & (t1 > 0), t0, np.inf)
    return t_enter, np.where(hit, t1, -np.inf)


@np.errstate(divide="ignore", invalid="ignore")  # missed rays carry inf; masked below
def _ray_cylinder(rays: np.ndarray, center, radius, half_height):
    """Nearest positive hit on a capped cylinder with axis along y."""
    cx, cy, cz = center
    dx, dy, dz = rays[:, 0], rays[:, 1], rays[:, 2]
    a = dx * dx + dz * dz
    b = -2.0 * (dx * cx + dz * cz)
    c = cx * cx + cz * cz - radius * radius
    disc = b * b - 4 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t_side = (-b - sq) / (2 * a)
    y = t_side * dy
    side_ok = ok & (t_side > 0) & (np.abs(y - cy) <= half_height)
    t_side = np.where(side_ok, t_side, np.inf)
    n_side = np.stack([t_side * dx - cx, np.zeros_like(dx), t_side * dz - cz], axis=1) / radius

    best_t = t_side
    normal = n_side
    for sgn in (-1.0, 1.0):
        yc = cy + sgn * half_height
        t_cap = yc / dy
        px, pz = t_cap * dx - cx, t_cap * dz - cz
        cap_ok = np.isfinite(t_cap) & (t_cap > 0) & (px * px + pz * pz <= radius * radius)
        t_cap = np.where(cap_ok, t_cap, np.inf)
        closer = t_cap < best_t
        best_t = np.where(closer, t_cap, best_t)
        normal = np.where(closer[:, None], np.array([0.0, sgn, 0.0]), normal)
    return best_t, normal


def raycast(shapes: list, cam: CameraModel, rays: np.ndarray | None = None):
    """Nearest-hit depth ``(H, W)``, unit outward normals ``(H, W, 3)`` and shape index (-1 = none)."""
    if rays is None:
        rays = pixel_rays(cam)
    n = len(rays)
    best = np.full(n, np.inf)
    normals = np.zeros((n, 3))
    ids = np.full(n, -1, dtype=np.intp)
    for k, s in enumerate(shapes):
        if s.kind == "box":
            t, _, axis = ray_box(np.zeros(3), rays, s.center, s.dims)
            nrm = np.zeros((n, 3))
            nrm[np.arange(n), axis] = -np.sign(rays[np.arange(n), axis])
        else:
            t, nrm = _ray_cylinder(rays, s.center, s.dims[0], s.dims[1])
        closer = (t > 0) & (t < best)
        best = np.where(closer, t, best)
        normals[closer] = nrm[closer]
        ids[closer] = k
    depth = np.where(np.isfinite(best), best, 0.0)
    return (depth.reshape(cam.shape), normals.reshape(cam.shape + (3,)), ids.reshape(cam.shape))


def volume_projection(vol, cam: CameraModel, depth: np.ndarray, rays=None, slack: float = 0.01) -> np.ndarray:
    """Pixels whose ray meets ``vol`` before the visible surface (unoccluded projection)."""
    if rays is None:
        rays = pixel_rays(cam)
    if isinstance(vol, SphereVolume):
        t_enter, _ = ray_sphere(rays, vol.center, vol.radius)
    else:
        t_enter, _, _ = ray_box(np.zeros(3), rays, vol.center, vol.half_extents, np.asarray(vol.rotation))
    t_enter = np.maximum(t_enter, 0.0).reshape(cam.shape)
    surf = np.where(depth > 0, depth, np.inf)
    return np.isfinite(t_enter) & (t_enter <= surf + slack)


# --- frame state -----------------------------------------------------------------


@dataclass
class FrameState:
    """Geometry of one frame before any measurement noise is applied."""

    t: int
    depth: np.ndarray
    normals: np.ndarray
    owner: np.ndarray  # object index per pixel, -1 = nothing
    flow: np.ndarray
    points: np.ndarray  # (H, W, 3) lifted surface points
    present: list
    ground_truth: list
    gt_owner: list


def _scene_shapes(scene: Scene, t: int, condition: Condition):
    shapes, owners = [], []
    for i, o in enumerate(scene.objects):
        if not o.present(t, condition):
            continue
        off = o.offset(t)
        for s in o.shapes:
            shapes.append(s.moved(off))
            owners.append(i)
    return shapes, np.asarray(owners, dtype=np.intp)


def frame_state(scene: Scene, t: int, condition: Condition, rays=None) -> FrameState:
    cam = scene.cam
    if rays is None:
        rays = pixel_rays(cam)
    shapes, owners = _scene_shapes(scene, t, condition)
    depth, normals, ids = raycast(shapes, cam, rays)
    owner = np.where(ids >= 0, owners[np.maximum(ids, 0)] if len(owners) else -1, -1)
    points = cam.lift(cam.pixel_grid().reshape(-1, 2), depth.reshape(-1)).reshape(cam.shape + (3,))

    flow = np.zeros(cam.shape + (2,))
    if t + 1 < scene.n_frames:
        for i, o in enumerate(scene.objects):
            if not (o.present(t, condition) and o.present(t + 1, condition)):
                continue
            if not np.any(o.velocity):
                continue
            sel = owner == i
            if not sel.any():
                continue
            moved = points[sel] + o.velocity
            uv, _ = cam.project_points(moved)
            grid = cam.pixel_grid()[sel]
            flow[sel] = np.nan_to_num(uv - grid)

    present = [i for i, o in enumerate(scene.objects) if o.present(t, condition)]
    gt, gt_owner = [], []
    for i in present:
        o = scene.objects[i]
        if o.is_structure or o.is_distractor:
            continue
        for v in o.world_volumes(t):
            label = f"{o.name}/{v.label}" if v.label else o.name
            gt.append(replace(v, label=label))
            gt_owner.append(i)
    return FrameState(t, depth, normals, owner, flow, points, present, gt, gt_owner)


def _frame_rng(scene: Scene, t: int, noise: NoiseModel, condition: Condition, stream: int):
    key = [noise.rng_seed, t, zlib.crc32(scene.name.encode()), zlib.crc32(condition.name.encode()), stream]
    return np.random.default_rng(key)


def synth_movability(scene: Scene, state: FrameState, noise: NoiseModel, condition: Condition,
                     rng: np.random.Generator, rays=None) -> MovabilityMeasurement:
    """Heatmap: blurred true-volume response (dimmed when dark, absent on dropout
    frames), a smooth low-level background, and false-positive blobs."""
    cam = scene.cam
    true_mask = np.zeros(cam.shape, dtype=bool)
    for vol in state.ground_truth:
        true_mask |= volume_projection(vol, cam, state.depth, rays)
    heat = true_mask.astype(float)
    if noise.heatmap_blur_sigma > 0:
        heat = gaussian_filter(heat, noise.heatmap_blur_sigma, mode="constant")
    if condition.lighting == "dark":
        heat *= noise.dark_attenuation
    if rng.random() < noise.heatmap_dropout:
        heat[:] = 0.0

    if noise.heatmap_background > 0:
        field_ = gaussian_filter(rng.random(cam.shape), noise.heatmap_background_scale, mode="wrap")
        lo, hi = field_.min(), field_.max()
        if hi > lo:
            heat = heat + noise.heatmap_background * (field_ - lo) / (hi - lo)

    if noise.heatmap_false_positive_rate > 0 and noise.heatmap_false_positive_amplitude > 0:
        keep_out = true_mask
        if noise.heatmap_blur_sigma > 0:
            keep_out = gaussian_filter(true_mask.astype(float), noise.heatmap_blur_sigma) > 1e-3
        blobs = np.zeros(cam.shape)
        for region in _fp_sites(scene, state):
            fires = rng.random() < noise.heatmap_false_positive_rate
            rows, cols = np.nonzero(region & ~keep_out)
            if not fires or len(rows) == 0:
                continue
            k = rng.integers(len(rows))
            blobs[rows[k], cols[k]] = 1.0
        if blobs.any():
            s = noise.heatmap_false_positive_sigma
            blobs = gaussian_filter(blobs, s, mode="constant") * (2 * np.pi * s * s)
            heat = heat + noise.heatmap_false_positive_amplitude * np.minimum(blobs, 1.0)
    return MovabilityMeasurement(np.clip(heat, 0.0, 1.0), state.t)


def _patch_masks(scene: Scene, state: FrameState, obj: SceneObject, idx: int) -> list:
    owned = state.owner == idx
    masks = []
    for vol in obj.world_volumes(state.t, obj.grasp_patches):
        near = vol.distance(state.points.reshape(-1, 3)).reshape(scene.cam.shape) <= 0.01
        masks.append(owned & near & (state.depth > 0))
    return masks


def _fp_sites(scene: Scene, state: FrameState) -> list:
    """Pixel regions that may receive a false-positive blob this frame.

    Every visible entity is a site; graspable look-alikes on distractors
    (e.g. a fixed rail shaped like a handle) are additional sites.
    """
    sites = []
    for i in state.present:
        o = scene.objects[i]
        sites.append(state.owner == i)
        if o.is_distractor and o.grasp_patches:
            sites.extend(_patch_masks(scene, state, o, i))
    return sites


def _candidates_at(pixels, state: FrameState, noise: NoiseModel, rng, p_lo: float, p_hi: float):
    rows, cols = pixels
    pos = state.points[rows, cols]
    if noise.grasp_position_sigma > 0:
        pos = pos + rng.normal(0.0, noise.grasp_position_sigma, pos.shape)
    approach = state.normals[rows, cols]
    p = rng.uniform(p_lo, p_hi, len(rows))
    if noise.grasp_p_noise > 0:
        p = p + rng.normal(0.0, noise.grasp_p_noise, len(rows))
    return pos, approach, np.clip(p, 0.0, 1.0)


def synth_grasps(scene: Scene, state: FrameState, noise: NoiseModel, condition: Condition,
                 rng: np.random.Generator) -> GraspCandidateSet:
    n_per = noise.grasp_candidates_per_patch
    edges = depth_discontinuity_mask(state.depth, GraspabilityParams(discontinuity_threshold=noise.edge_threshold))
    chunks = []
    for i in state.present:
        o = scene.objects[i]
        owned = state.owner == i
        if o.is_structure:
            if not (o.graspable_edges and condition.clutter == "cluttered"):
                continue
            patch_masks = [owned & edges & (state.depth > 0)]
        elif o.grasp_patches:
            patch_masks = _patch_masks(scene, state, o, i)
        else:
            patch_masks = [owned]
        for m in patch_masks:
            if rng.random() < noise.grasp_dropout:
                continue
            rows, cols = np.nonzero(m)
            if len(rows) == 0:
                continue
            k = rng.integers(len(rows), size=n_per)
            chunks.append(_candidates_at((rows[k], cols[k]), state, noise, rng, 0.6, 1.0))

    n_true = sum(len(c[2]) for c in chunks)
    if noise.grasp_edge_fp_rate > 0 and n_true:
        rows, cols = np.nonzero(edges & (state.depth > 0))
        n_fp = rng.binomial(n_true, noise.grasp_edge_fp_rate)
        if len(rows) and n_fp:
            k = rng.integers(len(rows), size=n_fp)
            chunks.append(_candidates_at((rows[k], cols[k]), state, noise, rng, 0.5, 0.9))

    if not chunks:
        return GraspCandidateSet(frame_id=state.t)
    pos = np.concatenate([c[0] for c in chunks])
    approach = unit(np.concatenate([c[1] for c in chunks]))
    p = np.concatenate([c[2] for c in chunks])
    return GraspCandidateSet(pos, approach, np.zeros(len(p)), p, frame_id=state.t)


def render_frame(scene: Scene, t: int, noise: NoiseModel, condition: Condition = Condition(),
                 rays=None) -> SceneFrame:
    if not 0 <= t < scene.n_frames:
        raise ValueError(f"frame {t} outside sequence of length {scene.n_frames}")
    if rays is None:
        rays = pixel_rays(scene.cam)
    state = frame_state(scene, t, condition, rays)
    move = synth_movability(scene, state, noise, condition, _frame_rng(scene, t, noise, condition, 1), rays)
    grasps = synth_grasps(scene, state, noise, condition, _frame_rng(scene, t, noise, condition, 2))
    return SceneFrame(state.depth, state.flow, scene.cam, grasps, move, state.ground_truth, t,
                      scene.name, condition.name)


def render_sequence(scene: Scene, noise: NoiseModel, condition: Condition = Condition(),
                    n_frames: int | None = None) -> list:
    rays = pixel_rays(scene.cam)
    n = scene.n_frames if n_frames is None else min(n_frames, scene.n_frames)
    return [render_frame(scene, t, noise, condition, rays) for t in range(n)]


# --- benchmark suite -------------------------------------------------------------

DEFAULT_CAMERA = CameraModel(fx=180.0, fy=180.0, cx=96.0, cy=72.0, width=192, height=144)


def _box(center, half):
    return Shape("box", center, half)


def _structures(table: bool = True) -> list:
    out = [SceneObject("wall", [_box([0, 0, 0], [4.0, 4.0, 0.05])], [0.0, 0.0, 2.4], is_structure=True)]
    if table:
        out.append(SceneObject("table", [_box([0, 0, 0], [0.7, 0.025, 0.45])], [0.0, 0.245, 1.25],
                               is_structure=True, graspable_edges=True))
    return out


def _handle_unit(name: str, anchor, body_half, handle_offset, velocity=(0, 0, 0), distractor=False,
                 handle_half=(0.06, 0.012, 0.015)):
    """A box body with a bar handle on its front face."""
    hx, hy, hz = handle_half
    handle_center = np.array(handle_offset, dtype=float)
    shapes = [_box([0, 0, 0], body_half), _box(handle_center, handle_half)]
    patch = BoxVolume(handle_center + [0, 0, -0.005], np.array([hx + 0.01, hy + 0.01, hz + 0.012]), "handle")
    if distractor:
        return SceneObject(name, shapes, anchor, velocity, [], [patch], is_distractor=True)
    return SceneObject(name, shapes, anchor, velocity, [patch], [patch])


def _two_region(rng, cam) -> Scene:
    dx = rng.uniform(-0.02, 0.02, 2)
    body = (0.12, 0.10, 0.10)
    a = _handle_unit("drawer_a", [-0.17 + dx[0], 0.12, 1.1], body, (0.0, -0.03, -0.115))
    b = _handle_unit("rail_b", [0.17 + dx[1], 0.12, 1.1], body, (0.0, -0.03, -0.115), distractor=True)
    return Scene("two_region", cam, _structures() + [a, b], description=(
        "Region A is a drawer handle (graspable and movable); region B is an identical fixed rail "
        "(graspable only)."))


def _tabletop_drawer(rng, cam) -> Scene:
    j = rng.uniform(-0.02, 0.02, 3)
    cab = SceneObject("cabinet", [_box([0, 0, 0], [0.16, 0.11, 0.12])], [0.0 + j[0], 0.11, 1.22],
                      is_structure=True)
    drawer = _handle_unit("drawer", [0.0 + j[0], 0.13, 1.095], (0.14, 0.06, 0.005), (0.0, 0.0, -0.02),
                          velocity=(0.0, 0.0, -0.004))
    mug = SceneObject("mug", [Shape("cylinder", [0, 0, 0], [0.04, 0.05, 0])], [0.3 + j[1], 0.17, 1.0],
                      is_distractor=True, clutter_only=True)
    box = SceneObject("box", [_box([0, 0, 0], [0.05, 0.04, 0.05])], [-0.32 + j[2], 0.18, 0.95],
                      is_distractor=True, clutter_only=True)
    return Scene("tabletop_drawer", cam, _structures() + [cab, drawer, mug, box], description=(
        "Drawer with a handle sliding out of a cabinet; clutter adds a mug, a box and graspable table edges."))


def _shelf(rng, cam, appear: int = 4) -> Scene:
    j = rng.uniform(-0.02, 0.02, 2)
    shelf = SceneObject("shelf", [_box([0, 0.0, 0.15], [0.45, 0.30, 0.02]),
                                  _box([0, 0.0, 0.0], [0.45, 0.012, 0.15])],
                        [0.0, 0.05, 1.3], is_structure=True, graspable_edges=True)
    door = _handle_unit("door", [-0.28 + j[0], -0.05, 1.28], (0.14, 0.09, 0.01), (0.0, 0.0, -0.025),
                        handle_half=(0.012, 0.05, 0.015))
    new_half = np.array([0.05, 0.06, 0.05])
    newcomer = SceneObject("newcomer", [_box([0, 0, 0], new_half)], [0.15 + j[1], -0.022, 1.3],
                           manipulable_volumes=[BoxVolume(np.zeros(3), new_half + 0.005, "body")],
                           appear_frame=appear)
    return Scene("shelf_appearance", cam, _structures(table=False) + [shelf, door, newcomer], description=(
        f"Shelf with a cabinet door; a new object appears on the board at frame {appear}."))


def _multi_part(rng, cam) -> Scene:
    j = rng.uniform(-0.02, 0.02)
    hx = 0.06
    body_half = (0.16, 0.16, 0.12)
    top = BoxVolume(np.array([0.0, -0.07, -0.135]), np.array([hx + 0.01, 0.022, 0.027]), "top_handle")
    bottom = BoxVolume(np.array([0.0, 0.07, -0.135]), np.array([hx + 0.01, 0.022, 0.027]), "bottom_handle")
    shapes = [_box([0, 0, 0], body_half),
              _box([0.0, -0.07, -0.135], [hx, 0.012, 0.015]),
              _box([0.0, 0.07, -0.135], [hx, 0.012, 0.015])]
    dresser = SceneObject("dresser", shapes, [0.0 + j, 0.06, 1.15], velocity=(0.003, 0.0, 0.0),
                          manipulable_volumes=[top, bottom], grasp_patches=[top, bottom])
    return Scene("multi_part", cam, _structures() + [dresser], description=(
        "Dresser with two handles (two manipulable parts) translating slowly sideways."))


SUITE_SCENES = ("two_region", "tabletop_drawer", "shelf_appearance", "multi_part")
# Condition variants that belong to the benchmark suite.
SUITE_CONDITIONS = {
    "two_region": ("well_lit-clean",),
    "tabletop_drawer": ("well_lit-clean", "well_lit-cluttered", "dark-clean"),
    "shelf_appearance": ("well_lit-clean",),
    "multi_part": ("well_lit-clean",),
}


def make_benchmark_suite(seed: int = 0, cam: CameraModel = DEFAULT_CAMERA) -> dict:
    """Named benchmark scenes; placements are jittered deterministically by ``seed``."""
    rng = np.random.default_rng([seed, 7])
    builders = (_two_region, _tabletop_drawer, _shelf, _multi_part)
    return {s.name: s for s in (build(rng, cam) for build in builders)}


# --- declarative (de)serialization -----------------------------------------------


def volume_to_dict(v) -> dict:
    if isinstance(v, SphereVolume):
        return {"type": "sphere", "center": [float(c) for c in v.center], "radius": float(v.radius),
                "label": v.label}
    d = {"type": "box", "center": [float(c) for c in v.center],
         "half_extents": [float(h) for h in v.half_extents], "label": v.label}
    if not np.allclose(v.rotation, np.eye(3)):
        d["rotation"] = [[float(x) for x in row] for row in np.asarray(v.rotation)]
    return d


def volume_from_dict(d: dict):
    kind = d.get("type")
    if kind == "sphere":
        return SphereVolume(np.asarray(d["center"], dtype=float), float(d["radius"]), d.get("label", ""))
    if kind == "box":
        rot = np.asarray(d.get("rotation", np.eye(3)), dtype=float)
        return BoxVolume(np.asarray(d["center"], dtype=float), np.asarray(d["half_extents"], dtype=float),
                         d.get("label", ""), rot)
    raise ValueError(f"unknown volume type {kind!r}")


def scene_to_dict(scene: Scene) -> dict:
    cam = scene.cam
    return {
        "name": scene.name,
        "description": scene.description,
        "n_frames": scene.n_frames,
        "camera": {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                   "width": cam.width, "height": cam.height},
        "objects": [
            {
                "name": o.name,
                "shapes": [{"kind": s.kind, "center": [float(c) for c in s.center],
                            "dims": [float(x) for x in s.dims]} for s in o.shapes],
                "position": [float(c) for c in o.position],
                "velocity": [float(c) for c in o.velocity],
                "manipulable_volumes": [volume_to_dict(v) for v in o.manipulable_volumes],
                "grasp_patches": [volume_to_dict(v) for v in o.grasp_patches],
                "is_distractor": o.is_distractor,
                "is_structure": o.is_structure,
                "graspable_edges": o.graspable_edges,
                "appear_frame": o.appear_frame,
                "clutter_only": o.clutter_only,
            }
            for o in scene.objects
        ],
    }


def scene_from_dict(d: dict) -> Scene:
    cam = CameraModel(**d["camera"]) if "camera" in d else DEFAULT_CAMERA
    objects = []
    for od in d.get("objects", []):
        shapes = [Shape(s["kind"], s.get("center", [0, 0, 0]), s["dims"]) for s in od["shapes"]]
        objects.append(SceneObject(
            od["name"], shapes, od.get("position", [0, 0, 0]), od.get("velocity", [0, 0, 0]),
            [volume_from_dict(v) for v in od.get("manipulable_volumes", [])],
            [volume_from_dict(v) for v in od.get("grasp_patches", [])],
            bool(od.get("is_distractor", False)), bool(od.get("is_structure", False)),
            bool(od.get("graspable_edges", False)), int(od.get("appear_frame", 0)),
            bool(od.get("clutter_only", False)),
        ))
    return Scene(d["name"], cam, objects, int(d.get("n_frames", 30)), d.get("description", ""))
