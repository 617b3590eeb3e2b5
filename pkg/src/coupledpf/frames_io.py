"""Flat-file frame format so sequences can be replayed without the simulator.

A sequence directory holds ``meta.yaml`` plus, for every frame ``t``:

* ``frame_TTTT.grid``: depth, flow u, flow v and heatmap as a binary grid;
* ``frame_TTTT_grasps.txt``: one grasp candidate per line;
* ``frame_TTTT_truth.txt``: interaction volumes (optional; absent means no
  ground truth).

Grid layout (all little-endian)::

    offset  size  field
    0       8     magic b"CPFGRID\\0"
    8       4     uint32 version (1)
    12      4     uint32 width
    16      4     uint32 height
    20      4     uint32 channels
    24      8*W*H*C  float64 samples, row-major, channel-interleaved

A heatmap may instead be supplied as ``frame_TTTT_heat.pgm`` next to a
three-channel grid; 8/16-bit values are scaled to [0, 1].
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import yaml

from .core_types import BoxVolume, CameraModel, SphereVolume
from .measurements import GraspCandidateSet, MovabilityMeasurement
from .scene_sim import SceneFrame

MAGIC = b"CPFGRID\0"
VERSION = 1
HEADER = struct.Struct("<8sIIII")
GRASP_HEADER = "# x y z approach_x approach_y approach_z roll p"
TRUTH_HEADER = "# kind label cx cy cz size... [r00..r22 for boxes]"


class FrameFormatError(ValueError):
    """Malformed frame file; carries the file and byte offset or line."""

    def __init__(self, path, where, message: str):
        self.path = Path(path)
        self.where = where
        super().__init__(f"{self.path}: {where}: {message}")


# --- binary grids --------------------------------------------------------------


def write_grid(path, data: np.ndarray) -> None:
    arr = np.asarray(data, dtype="<f8")
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError("grid data must be (H, W) or (H, W, C)")
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, w, h, c))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_grid(path) -> np.ndarray:
    """Returns an ``(H, W, C)`` float64 array."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FrameFormatError(path, f"offset {len(raw)}", f"truncated header ({len(raw)} of {HEADER.size} bytes)")
    magic, version, w, h, c = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FrameFormatError(path, "offset 0", f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameFormatError(path, "offset 8", f"unsupported version {version}")
    if w == 0 or h == 0 or c == 0:
        raise FrameFormatError(path, "offset 12", f"empty grid {w}x{h}x{c}")
    need = HEADER.size + 8 * w * h * c
    if len(raw) != need:
        kind = "truncated" if len(raw) < need else "trailing bytes in"
        raise FrameFormatError(path, f"offset {min(len(raw), need)}",
                               f"{kind} payload: expected {need} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(h, w, c).astype(float)


def read_pgm(path) -> np.ndarray:
    """Binary (P5) or ASCII (P2) greymap scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FrameFormatError(path, f"offset {pos}", "truncated PGM header")
        tokens.append(raw[start:pos])
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise FrameFormatError(path, "offset 0", f"not a PGM file (magic {magic!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FrameFormatError(path, f"offset {pos}", "non-integer PGM header field") from None
    if not 0 < maxval < 65536:
        raise FrameFormatError(path, f"offset {pos}", f"bad maxval {maxval}")
    if magic == b"P2":
        vals = raw[pos:].split()
        if len(vals) < w * h:
            raise FrameFormatError(path, f"offset {len(raw)}", f"expected {w * h} samples, found {len(vals)}")
        img = np.array([int(v) for v in vals[:w * h]], dtype=float)
    else:
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        if len(raw) - pos < need:
            raise FrameFormatError(path, f"offset {len(raw)}", f"truncated raster: need {need} bytes")
        img = np.frombuffer(raw, dtype=dtype, count=w * h, offset=pos).astype(float)
    return img.reshape(h, w) / maxval


def write_pgm(path, heat: np.ndarray, maxval: int = 65535) -> None:
    q = np.rint(np.clip(heat, 0.0, 1.0) * maxval).astype(">u2" if maxval > 255 else "u1")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        fh.write(q.tobytes())


# --- text tables -------------------------------------------------------------


def _rows(path):
    if not Path(path).exists():
        raise FrameFormatError(path, "file", "missing table")
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield lineno, line.split()


def write_grasps(path, cands: GraspCandidateSet) -> None:
    lines = [GRASP_HEADER]
    for pos, a, r, p in zip(cands.positions, cands.approach, cands.roll, cands.p):
        lines.append(" ".join(repr(float(v)) for v in (*pos, *a, r, p)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_grasps(path, frame_id: int = 0) -> GraspCandidateSet:
    rows = []
    for lineno, fields in _rows(path):
        if len(fields) != 8:
            raise FrameFormatError(path, f"line {lineno}", f"expected 8 fields, found {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise FrameFormatError(path, f"line {lineno}", str(exc)) from None
    if not rows:
        return GraspCandidateSet(frame_id=frame_id)
    a = np.array(rows)
    try:
        return GraspCandidateSet(a[:, 0:3], a[:, 3:6], a[:, 6], a[:, 7], frame_id=frame_id)
    except ValueError as exc:
        raise FrameFormatError(path, "content", str(exc)) from None


def write_truth(path, volumes) -> None:
    lines = [TRUTH_HEADER]
    for v in volumes:
        label = v.label or "-"
        if isinstance(v, SphereVolume):
            vals = (*v.center, v.radius)
            lines.append("sphere " + label + " " + " ".join(repr(float(x)) for x in vals))
        else:
            vals = (*v.center, *v.half_extents, *np.asarray(v.rotation).ravel())
            lines.append("box " + label + " " + " ".join(repr(float(x)) for x in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_truth(path) -> list:
    out = []
    for lineno, fields in _rows(path):
        kind, label = fields[0], fields[1] if len(fields) > 1 else ""
        label = "" if label == "-" else label
        try:
            nums = [float(f) for f in fields[2:]]
        except ValueError as exc:
            raise FrameFormatError(path, f"line {lineno}", str(exc)) from None
        if kind == "sphere" and len(nums) == 4:
            out.append(SphereVolume(np.array(nums[:3]), nums[3], label))
        elif kind == "box" and len(nums) == 15:
            out.append(BoxVolume(np.array(nums[:3]), np.array(nums[3:6]), label,
                                 np.array(nums[6:]).reshape(3, 3)))
        else:
            raise FrameFormatError(path, f"line {lineno}", f"bad {kind!r} record with {len(nums)} numbers")
    return out


# --- sequences -----------------------------------------------------------------


def _stem(t: int) -> str:
    return f"frame_{t:04d}"


def export_frames(directory, frames, meta: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    cam = frames[0].cam
    info = {
        "format_version": VERSION,
        "scene": frames[0].scene_name,
        "condition": frames[0].condition,
        "n_frames": len(frames),
        "camera": {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                   "width": cam.width, "height": cam.height},
        "ground_truth": frames[0].ground_truth is not None,
    }
    info.update(meta or {})
    for f in frames:
        stem = _stem(f.frame_id)
        grid = np.concatenate([f.depth[:, :, None], f.flow, f.move_meas.heatmap[:, :, None]], axis=2)
        write_grid(d / f"{stem}.grid", grid)
        write_grasps(d / f"{stem}_grasps.txt", f.grasp_meas)
        if f.ground_truth is not None:
            write_truth(d / f"{stem}_truth.txt", f.ground_truth)
    (d / "meta.yaml").write_text(yaml.safe_dump(info, sort_keys=True))
    return d


def read_meta(directory) -> dict:
    path = Path(directory) / "meta.yaml"
    if not path.exists():
        raise FrameFormatError(path, "file", "missing sequence metadata")
    try:
        meta = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "content"
        raise FrameFormatError(path, where, "invalid YAML") from None
    if not isinstance(meta, dict) or "camera" not in meta or "n_frames" not in meta:
        raise FrameFormatError(path, "content", "meta needs 'camera' and 'n_frames'")
    return meta


def load_frames(directory, n_frames: int | None = None) -> list:
    d = Path(directory)
    meta = read_meta(d)
    try:
        cam = CameraModel(**meta["camera"])
    except (TypeError, ValueError) as exc:
        raise FrameFormatError(d / "meta.yaml", "camera", str(exc)) from None
    n = int(meta["n_frames"]) if n_frames is None else min(n_frames, int(meta["n_frames"]))
    frames = []
    for t in range(n):
        stem = _stem(t)
        gpath = d / f"{stem}.grid"
        if not gpath.exists():
            raise FrameFormatError(gpath, "file", "missing frame grid")
        grid = read_grid(gpath)
        if grid.shape[:2] != cam.shape:
            raise FrameFormatError(gpath, "offset 12", f"grid is {grid.shape[1]}x{grid.shape[0]}, "
                                                       f"camera is {cam.width}x{cam.height}")
        if grid.shape[2] == 4:
            heat = grid[:, :, 3]
        elif grid.shape[2] == 3 and (d / f"{stem}_heat.pgm").exists():
            heat = read_pgm(d / f"{stem}_heat.pgm")
            if heat.shape != cam.shape:
                raise FrameFormatError(d / f"{stem}_heat.pgm", "header", "heatmap size mismatch")
        else:
            raise FrameFormatError(gpath, "offset 20", f"expected 4 channels (or 3 plus a PGM), found {grid.shape[2]}")
        tpath = d / f"{stem}_truth.txt"
        truth = read_truth(tpath) if tpath.exists() else None
        try:
            move = MovabilityMeasurement(np.ascontiguousarray(heat), t)
        except ValueError as exc:
            raise FrameFormatError(gpath, "heatmap", str(exc)) from None
        frames.append(SceneFrame(np.ascontiguousarray(grid[:, :, 0]), np.ascontiguousarray(grid[:, :, 1:3]),
                                 cam, read_grasps(d / f"{stem}_grasps.txt", t), move, truth, t,
                                 str(meta.get("scene", d.name)), str(meta.get("condition", ""))))
    return frames


def find_sequences(root) -> list:
    """Every directory below ``root`` (inclusive) holding a ``meta.yaml``, sorted."""
    root = Path(root)
    return sorted(p.parent for p in root.rglob("meta.yaml"))
