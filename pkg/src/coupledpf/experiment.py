"""Config-driven experiment grid: scheme x scene x condition x seed -> CSV + plots.

One grid cell is a ``(scene, condition, seed)`` triple; all requested
schemes run on the same rendered frames. Cells may run in a process pool,
but rows are written by a single writer in grid order, so the CSV does not
depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .coupling import ClipRange, CouplingParams
from .filter_core import FilterParams
from .frames_io import FrameFormatError, export_frames, find_sequences, load_frames, read_meta
from .fusion_baselines import FusionScheme
from .graspability import GraspabilityParams
from .pipeline import PipelineParams, evaluate_all, run_schemes
from .scene_sim import (SUITE_CONDITIONS, SUITE_SCENES, Condition, NoiseModel, make_benchmark_suite,
                        render_sequence, scene_from_dict, scene_to_dict)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scene", "condition", "scheme", "seed", "steps", "samples", "tolerance", "precision",
               "edge_fraction", "part_distribution", "densest_x", "densest_y", "densest_z", "status")
RESULTS_NAME = "results.csv"


class ConfigError(ValueError):
    """Invalid experiment config; the message carries ``file:line``."""


@dataclass
class ExperimentConfig:
    scenes: list = field(default_factory=lambda: list(SUITE_SCENES))
    scene_files: list = field(default_factory=list)
    # "suite" means each scene's own condition variants.
    conditions: object = "suite"
    schemes: list = field(default_factory=lambda: [s.value for s in FusionScheme])
    seeds: list = field(default_factory=lambda: list(range(20)))
    steps: int = 10
    n_samples: int = 200
    tolerance: float = 0.02
    late_grid: float = 0.02
    filter: FilterParams = field(default_factory=FilterParams)
    grasp: GraspabilityParams = field(default_factory=GraspabilityParams)
    coupling: CouplingParams = field(default_factory=CouplingParams)
    noise: NoiseModel = field(default_factory=NoiseModel)
    output_dir: str = "results"
    workers: int = 1
    plots: bool = True
    base_dir: str = "."

    def __post_init__(self):
        if not self.schemes:
            raise ValueError("schemes must not be empty")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        self.schemes = [FusionScheme.parse(s).value if isinstance(s, str) else s.value for s in self.schemes]
        if self.conditions != "suite":
            self.conditions = [Condition.parse(c).name for c in self.conditions]
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def pipeline(self) -> PipelineParams:
        return PipelineParams(self.filter, self.grasp, self.coupling, self.steps, self.n_samples,
                              self.tolerance, self.late_grid)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        for k in _CLIPS:
            d["coupling"][k] = [d["coupling"][k]["lo"], d["coupling"][k]["hi"]]
        return d


# --- loading with line diagnostics --------------------------------------------------

_SECTIONS = {"filter": FilterParams, "grasp": GraspabilityParams, "coupling": CouplingParams,
             "noise": NoiseModel}
_CLIPS = {"grasp_measurement_clip", "grasp_crossmodal_clip", "move_measurement_clip", "move_crossmodal_clip"}


def _at(where: str, line) -> str:
    return where if line in (None, "?") else f"{where}:{line}"


def _key_lines(node, prefix=()) -> dict:
    """``{key path: 1-based line}`` for every mapping key in a composed YAML tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (str(k.value),)
            out[path] = k.start_mark.line + 1
            out.update(_key_lines(v, path))
    return out


def _set_path(d: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
        if not isinstance(d, dict):
            raise ConfigError(f"--set {dotted}: {k!r} is not a section")
    d[keys[-1]] = value


def _section(cls, raw, where: str, lines: dict, name: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{_at(where, lines.get((name,), '?'))}: section '{name}' must be a mapping")
    known = {f.name for f in fields(cls)}
    kw = {}
    for k, v in raw.items():
        line = lines.get((name, k), lines.get((name,), "?"))
        if k not in known:
            raise ConfigError(f"{_at(where, line)}: unknown field '{k}' in section '{name}'")
        if k in _CLIPS:
            if not (isinstance(v, (list, tuple)) and len(v) == 2):
                raise ConfigError(f"{_at(where, line)}: '{name}.{k}' must be a [lo, hi] pair")
            try:
                v = ClipRange(float(v[0]), float(v[1]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{_at(where, line)}: '{name}.{k}': {exc}") from None
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{_at(where, lines.get((name,), '?'))}: section '{name}': {exc}") from None


def config_from_dict(data: dict, where: str = "<config>", lines: dict | None = None,
                     base_dir: str = ".") -> ExperimentConfig:
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}:1: top level must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}
    kw = {}
    for k, v in data.items():
        line = lines.get((k,), "?")
        if k not in known:
            raise ConfigError(f"{_at(where, line)}: unknown field '{k}'")
        if k in _SECTIONS:
            kw[k] = _section(_SECTIONS[k], v, where, lines, k)
        elif k in ("scenes", "scene_files", "schemes", "seeds") and not isinstance(v, list):
            raise ConfigError(f"{_at(where, line)}: '{k}' must be a list")
        else:
            kw[k] = v
        try:
            if k == "schemes":
                [FusionScheme.parse(x) for x in v]
            elif k == "conditions" and v != "suite":
                [Condition.parse(x) for x in v]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{_at(where, line)}: {exc}") from None
    try:
        cfg = ExperimentConfig(**kw, base_dir=base_dir)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    for s in cfg.scenes:
        if s not in SUITE_SCENES:
            raise ConfigError(f"{_at(where, lines.get(('scenes',), '?'))}: unknown scene '{s}'; "
                              f"suite scenes are {list(SUITE_SCENES)}")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config; ``overrides`` maps dotted keys to values and wins over the file."""
    data, lines, where, base = {}, {}, "<command line>", "."
    if path is not None:
        path = Path(path)
        where, base = str(path), str(path.parent)
        if not path.exists():
            raise ConfigError(f"{path}: config file not found")
        text = path.read_text()
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else "?"
            problem = getattr(exc, "problem", None) or str(exc)
            raise ConfigError(f"{path}:{line}: YAML syntax error: {problem}") from None
        lines = _key_lines(node) if node is not None else {}
    data = dict(data or {})
    for k, v in (overrides or {}).items():
        _set_path(data, k, v)
    return config_from_dict(data, where, lines, base)


def parse_override(text: str):
    """``key=value`` with the value parsed as YAML (so ``[0.2,0.3]`` and ``true`` work)."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} must look like key=value")
    try:
        return key.strip(), yaml.safe_load(value)
    except yaml.YAMLError:
        raise ConfigError(f"override {text!r}: value is not valid YAML") from None


# --- the grid -----------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    index: int
    scene: str
    condition: str
    seed: int
    scene_file: str | None = None


def _load_scene_file(path: Path):
    try:
        return scene_from_dict(yaml.safe_load(path.read_text()))
    except (yaml.YAMLError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid scene file: {exc}") from None


def resolve_scene_files(cfg: ExperimentConfig) -> list:
    out = []
    for f in cfg.scene_files:
        p = Path(f)
        if not p.is_absolute():
            p = Path(cfg.base_dir) / p
        if not p.exists():
            raise ConfigError(f"scene file not found: {p}")
        out.append(p)
    return out


def grid_cells(cfg: ExperimentConfig) -> list:
    entries = [(s, None) for s in cfg.scenes]
    for p in resolve_scene_files(cfg):
        entries.append((_load_scene_file(p).name, str(p)))
    cells = []
    for name, path in entries:
        conds = cfg.conditions
        if conds == "suite":
            conds = list(SUITE_CONDITIONS.get(name, ("well_lit-clean",)))
        for c in conds:
            for seed in cfg.seeds:
                cells.append(Cell(len(cells), name, c, int(seed), path))
    return cells


def sequence_for(cell: Cell, cfg: ExperimentConfig, n_frames: int | None = None) -> list:
    """Frames for one cell: suite placement jittered by seed, noise seeded by seed."""
    if cell.scene_file:
        scene = _load_scene_file(Path(cell.scene_file))
    else:
        scene = make_benchmark_suite(cell.seed)[cell.scene]
    noise = replace(cfg.noise, rng_seed=cfg.noise.rng_seed + cell.seed)
    return render_sequence(scene, noise, Condition.parse(cell.condition), n_frames or cfg.steps)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def rows_for(frames, cfg: ExperimentConfig, scene: str, condition: str, seed: int) -> list:
    params = cfg.pipeline()
    if len(frames) < params.steps:
        raise ValueError(f"{scene}/{condition}: {len(frames)} frames, need {params.steps}")
    schemes = [FusionScheme(s) for s in cfg.schemes]
    outs = run_schemes(frames, schemes, params, seed, scene, condition)
    ev = evaluate_all(outs, frames, params, seed, scene, condition)
    rows = []
    for s in schemes:
        r = ev[s]
        dens = r["densest"]
        parts = r["parts"]
        rows.append({
            "scene": scene,
            "condition": condition,
            "scheme": s.value,
            "seed": str(seed),
            "steps": str(params.steps),
            "samples": str(params.n_samples),
            "tolerance": repr(float(params.tolerance)),
            "precision": _fmt(r["precision"]),
            "edge_fraction": _fmt(r["edge_fraction"]),
            "part_distribution": "" if not parts else ";".join(f"{k}:{v!r}" for k, v in parts.items()),
            "densest_x": "" if dens is None else repr(float(dens[0])),
            "densest_y": "" if dens is None else repr(float(dens[1])),
            "densest_z": "" if dens is None else repr(float(dens[2])),
            "status": r["status"],
        })
    return rows


def _run_cell(args):
    cell, cfg = args
    try:
        frames = sequence_for(cell, cfg)
        return cell.index, rows_for(frames, cfg, cell.scene, cell.condition, cell.seed), None
    except Exception as exc:  # reported by the writer; the grid keeps going
        return cell.index, [], f"{cell.scene}/{cell.condition}/seed {cell.seed}: {type(exc).__name__}: {exc}"


def _replay_cell(args):
    index, directory, cfg = args
    try:
        meta = read_meta(directory)
        frames = load_frames(directory, cfg.steps)
        scene = str(meta.get("scene", Path(directory).name))
        cond = str(meta.get("condition", ""))
        seed = int(meta.get("seed", 0))
        return index, rows_for(frames, cfg, scene, cond, seed), None
    except (FrameFormatError, ValueError) as exc:
        return index, [], str(exc)


class OrderedWriter:
    """Writes CSV rows in task order as results arrive, flushing after each task."""

    def __init__(self, fh):
        self.fh = fh
        self.writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        self.writer.writeheader()
        self.pending = {}
        self.next = 0

    def add(self, index: int, rows: list) -> None:
        self.pending[index] = rows
        while self.next in self.pending:
            self.writer.writerows(self.pending.pop(self.next))
            self.next += 1
        self.fh.flush()


def _execute(tasks, worker, n_workers: int, out_csv: Path) -> tuple[list, list]:
    errors, all_rows = [], []
    with open(out_csv, "w", newline="") as fh:
        w = OrderedWriter(fh)

        def take(result):
            idx, rows, err = result
            if err:
                log.error("%s", err)
                errors.append(err)
            all_rows.extend(rows)
            w.add(idx, rows)

        if n_workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                for result in pool.map(worker, tasks):
                    take(result)
        else:
            for t in tasks:
                take(worker(t))
    return all_rows, errors


def _finish(cfg: ExperimentConfig, out: Path, rows: list) -> None:
    (out / "config.resolved.yaml").write_text(yaml.safe_dump(_plain(cfg.to_dict()), sort_keys=True))
    if cfg.plots and rows:
        from .plotting import ablation_chart, scores_chart

        scores_chart(rows, out / "scores.svg")
        ablation_chart(rows, out / "ablation.svg")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def run(cfg: ExperimentConfig) -> int:
    """Run the grid; returns the exit status (0 ok, 1 if any cell failed)."""
    cells = grid_cells(cfg)  # validates scene files before anything is written
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(c, cfg) for c in cells]
    rows, errors = _execute(tasks, _run_cell, cfg.workers, out / RESULTS_NAME)
    _finish(cfg, out, rows)
    log.info("%d rows, %d failed cells -> %s", len(rows), len(errors), out / RESULTS_NAME)
    return 1 if errors else 0


def _grid_rank(directory):
    """Sort key putting exported sequences back in run order."""
    try:
        meta = read_meta(directory)
    except FrameFormatError:
        return (len(SUITE_SCENES), 0, 0, str(directory))
    scene, cond = str(meta.get("scene", "")), str(meta.get("condition", ""))
    s_rank = SUITE_SCENES.index(scene) if scene in SUITE_SCENES else len(SUITE_SCENES)
    conds = SUITE_CONDITIONS.get(scene, ())
    c_rank = conds.index(cond) if cond in conds else len(conds)
    return (s_rank, c_rank, int(meta.get("seed", 0)), str(directory))


def replay(directory, cfg: ExperimentConfig) -> int:
    seqs = sorted(find_sequences(directory), key=_grid_rank)
    if not seqs:
        raise ConfigError(f"{directory}: no frame sequences (meta.yaml) found")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(i, d, cfg) for i, d in enumerate(seqs)]
    rows, errors = _execute(tasks, _replay_cell, cfg.workers, out / RESULTS_NAME)
    _finish(cfg, out, rows)
    return 1 if errors else 0


def export_scenes(cfg: ExperimentConfig, directory, n_frames: int | None = None) -> list:
    """Render every grid cell and write it as a replayable frame directory."""
    root = Path(directory)
    written = []
    for cell in grid_cells(cfg):
        frames = sequence_for(cell, cfg, n_frames)
        d = root / cell.scene / cell.condition / f"seed_{cell.seed:03d}"
        export_frames(d, frames, {"seed": cell.seed})
        written.append(d)
    for name in cfg.scenes:
        (root / name).mkdir(parents=True, exist_ok=True)
        (root / name / "scene_seed0.yaml").write_text(
            yaml.safe_dump(scene_to_dict(make_benchmark_suite(0)[name]), sort_keys=False))
    return written


def read_results(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def results_text(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
