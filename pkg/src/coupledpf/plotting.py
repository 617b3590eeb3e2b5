"""SVG bar charts of precision from result rows.

Rendering is deterministic (fixed SVG hash salt, no timestamp, text kept as
text), so the same rows give the same bytes.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FUSION_SCHEMES = ("coupled", "early", "late", "naive")
SOURCE_SCHEMES = ("coupled", "grasp_only", "move_only", "raw_grasp", "raw_move")
_STYLE = {"svg.hashsalt": "coupledpf", "svg.fonttype": "none", "font.size": 8}


def _val(x) -> float:
    # Blank precision means the scheme produced no prediction.
    return 0.0 if x in ("", None) else float(x)


def median_table(rows) -> dict:
    """``{(scene, condition, scheme): median precision}`` over seeds."""
    acc = defaultdict(list)
    for r in rows:
        acc[(r["scene"], r["condition"], r["scheme"])].append(_val(r["precision"]))
    return {k: float(np.median(v)) for k, v in acc.items()}


def suite_mean(table: dict, scheme: str, entries=None) -> float | None:
    vals = [v for (sc, c, s), v in table.items() if s == scheme and (entries is None or (sc, c) in entries)]
    return float(np.mean(vals)) if vals else None


def _bars(ax, groups: list, schemes: list, values: dict, title: str) -> None:
    width = 0.8 / max(len(schemes), 1)
    x = np.arange(len(groups))
    for i, s in enumerate(schemes):
        h = [values.get((g, s), np.nan) for g in groups]
        bars = ax.bar(x + (i - (len(schemes) - 1) / 2) * width, h, width, label=s)
        ax.bar_label(bars, labels=["" if np.isnan(v) else f"{v:.2f}" for v in h], fontsize=5, rotation=90,
                     padding=1)
    ax.set_xticks(x, groups, rotation=20, ha="right")
    ax.set_ylim(0, 1.15)
    ax.set_ylabel("precision (median over seeds)")
    ax.set_title(title)


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def scores_chart(rows, path) -> None:
    """One panel per condition; scenes plus their mean along x, one bar per scheme."""
    table = median_table(rows)
    conditions = sorted({c for _, c, _ in table})
    schemes = list(dict.fromkeys(r["scheme"] for r in rows))
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(len(conditions), 1, figsize=(8, 3 * len(conditions)), squeeze=False)
        for ax, cond in zip(axes[:, 0], conditions):
            scenes = sorted({sc for sc, c, _ in table if c == cond})
            vals = {(sc, s): table[(sc, cond, s)] for sc in scenes for s in schemes if (sc, cond, s) in table}
            for s in schemes:
                m = [vals[(sc, s)] for sc in scenes if (sc, s) in vals]
                if m:
                    vals[("mean", s)] = float(np.mean(m))
            _bars(ax, scenes + ["mean"], schemes, vals, cond)
        axes[0, 0].legend(fontsize=6, ncol=4, loc="upper left")
        _save(fig, path)


def ablation_chart(rows, path) -> None:
    """Suite mean per entry group: fusion strategies and single-source baselines."""
    table = median_table(rows)
    present = {s for _, _, s in table}
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
        for ax, schemes, title in ((axes[0], FUSION_SCHEMES, "fusion strategy"),
                                   (axes[1], SOURCE_SCHEMES, "measurement sources")):
            schemes = [s for s in schemes if s in present]
            vals = {("suite", s): suite_mean(table, s) for s in schemes}
            xs = np.arange(len(schemes))
            h = [vals[("suite", s)] for s in schemes]
            bars = ax.bar(xs, h, 0.6, color=[f"C{i}" for i in range(len(schemes))])
            ax.bar_label(bars, labels=[f"{v:.3f}" for v in h], fontsize=6)
            ax.set_xticks(xs, schemes, rotation=20, ha="right")
            ax.set_ylim(0, 1.1)
            ax.set_ylabel("suite mean of median precision")
            ax.set_title(title)
        _save(fig, path)
