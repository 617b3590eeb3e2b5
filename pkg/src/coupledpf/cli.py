"""Command line entry point.

    coupledpf run [--config FILE] [overrides]       run the grid, write results.csv + SVGs
    coupledpf replay DIR [--config FILE] [...]      same pipeline on exported frame files
    coupledpf export-scenes DIR [...]               render the grid's scenes to frame files
    coupledpf list-schemes                          print the available fusion schemes

Flags override the config file; ``--set section.field=value`` reaches any
field (the value is parsed as YAML).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiment import ConfigError, export_scenes, load_config, parse_override, replay, run
from .fusion_baselines import SCHEME_HELP, FusionScheme
from .frames_io import FrameFormatError

log = logging.getLogger("coupledpf")


def _csv_list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _seeds(text: str) -> list:
    """``0-19`` or ``1,4,7`` (ranges are inclusive)."""
    out = []
    for part in _csv_list(text):
        lo, sep, hi = part.partition("-")
        if sep:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--seeds", type=_seeds, help="e.g. 0-19 or 0,3,5")
    p.add_argument("--schemes", type=_csv_list, help="comma-separated scheme names")
    p.add_argument("--scenes", type=_csv_list, help="comma-separated suite scene names")
    p.add_argument("--scene-file", action="append", dest="scene_files", help="extra scene YAML (repeatable)")
    p.add_argument("--conditions", type=_csv_list, help="e.g. well_lit-clean,dark-clean, or 'suite'")
    p.add_argument("--steps", type=int, help="frames per sequence")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any field, e.g. coupling.sigma=0.04")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coupledpf", description="Coupled affordance particle filters")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run the experiment grid")
    _add_grid_flags(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("replay", help="run the pipeline on exported frame directories")
    p.add_argument("frames", help="directory searched for meta.yaml sequences")
    _add_grid_flags(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("export-scenes", help="render grid scenes to frame files")
    p.add_argument("directory")
    _add_grid_flags(p)

    sub.add_parser("list-schemes", help="print fusion schemes")
    return parser


def _overrides(args) -> dict:
    out = dict(parse_override(s) for s in args.set)
    for key in ("seeds", "schemes", "scenes", "scene_files", "steps", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    if getattr(args, "conditions", None) is not None:
        out["conditions"] = "suite" if args.conditions == ["suite"] else args.conditions
    if getattr(args, "out", None):
        out["output_dir"] = args.out
    if getattr(args, "no_plots", False):
        out["plots"] = False
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    if args.verb == "list-schemes":
        for s in FusionScheme:
            print(f"{s.value:12s} {SCHEME_HELP[s]}")
        return 0
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.verb == "run":
            return run(cfg)
        if args.verb == "replay":
            return replay(args.frames, cfg)
        written = export_scenes(cfg, args.directory)
        print(f"wrote {len(written)} sequences under {args.directory}")
        return 0
    except (ConfigError, FrameFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
