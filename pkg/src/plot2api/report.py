"""Figures and delimited tables for runs, sweeps and datasets.

Every ``write_*`` function emits a CSV next to a PNG so the numbers behind a
figure are always on disk too.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import ApReport  # noqa: E402


def _style(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.tick_params(labelsize=8)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_csv(records, path, fieldnames=None) -> Path:
    records = list(records)
    if fieldnames is None:
        fieldnames = []
        for r in records:
            fieldnames += [k for k in r if k not in fieldnames]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        w.writerows(records)
    return path


def write_ap_reports(reports: Mapping[str, ApReport], out_dir, stem: str = "ap") -> list[Path]:
    """Grouped per-API AP bars, one group per API and one bar per report."""
    out_dir = Path(out_dir)
    rows = []
    for label, rep in reports.items():
        rows += [{"run": label, **r} for r in rep.records()]
    csv_path = write_csv(rows, out_dir / f"{stem}.csv", ["run", "api", "ap", "positives"])

    apis = []
    for rep in reports.values():
        apis += [a for a in rep.per_api if a not in apis]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(apis) + 1.5), 3.2))
    width = 0.8 / max(len(reports), 1)
    x = np.arange(len(apis))
    for i, (label, rep) in enumerate(reports.items()):
        vals = [100 * rep.per_api.get(a, np.nan) for a in apis]
        ax.bar(x + (i - (len(reports) - 1) / 2) * width, vals, width, label=f"{label} (mAP {100 * rep.map:.1f})")
    ax.set_xticks(x)
    ax.set_xticklabels(apis, rotation=45, ha="right")
    ax.set_ylabel("AP (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=7, frameon=False)
    _style(ax)
    png = out_dir / f"{stem}.png"
    _save(fig, png)
    return [csv_path, png]


def write_history(history, out_dir, stem: str = "history") -> list[Path]:
    out_dir = Path(out_dir)
    paths = [write_csv(history.steps, out_dir / f"{stem}_steps.csv", ["step", "epoch", "l_vis", "l_sem", "total"])]
    if history.evals:
        paths.append(write_csv([{"epoch": e["epoch"], "step": e["step"], "map": e["map"]} for e in history.evals],
                               out_dir / f"{stem}_evals.csv"))
    ncols = 2 if history.evals else 1
    fig, axes = plt.subplots(1, ncols, figsize=(4.0 * ncols, 3.0), squeeze=False)
    ax = axes[0, 0]
    steps = [r["step"] for r in history.steps]
    for key, label in (("total", "total"), ("l_vis", "visual"), ("l_sem", "semantic")):
        ax.plot(steps, [r[key] for r in history.steps], lw=1, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend(fontsize=7, frameon=False)
    _style(ax)
    if history.evals:
        ax = axes[0, 1]
        ax.plot([e["epoch"] + 1 for e in history.evals], [100 * e["map"] for e in history.evals], marker="o", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("eval mAP (%)")
        _style(ax)
    png = out_dir / f"{stem}.png"
    _save(fig, png)
    return paths + [png]


def write_sweep(results: Mapping, out_dir, stem: str = "sweep", xlabel: str = "alpha") -> list[Path]:
    """mAP per swept setting. Keys may be numbers (plotted as a line) or labels (bars)."""
    out_dir = Path(out_dir)
    keys = list(results)
    csv_path = write_csv([{xlabel: k, "map": results[k].map} for k in keys], out_dir / f"{stem}.csv")
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    vals = [100 * results[k].map for k in keys]
    if all(isinstance(k, (int, float)) for k in keys):
        ax.plot(range(len(keys)), vals, marker="o")
    else:
        ax.bar(range(len(keys)), vals)
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels([str(k) for k in keys])
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mAP (%)")
    _style(ax)
    png = out_dir / f"{stem}.png"
    _save(fig, png)
    return [csv_path, png]


def write_frequency(freq: Mapping[str, int], out_dir, stem: str = "frequency") -> list[Path]:
    out_dir = Path(out_dir)
    csv_path = write_csv([{"api": k, "count": v} for k, v in freq.items()], out_dir / f"{stem}.csv")
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(freq) + 1.5), 3.0))
    ax.bar(range(len(freq)), list(freq.values()), color="0.35")
    ax.set_xticks(range(len(freq)))
    ax.set_xticklabels(list(freq), rotation=45, ha="right")
    ax.set_ylabel("# samples")
    _style(ax)
    png = out_dir / f"{stem}.png"
    _save(fig, png)
    return [csv_path, png]
