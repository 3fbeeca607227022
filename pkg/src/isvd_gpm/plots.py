"""Figures written next to the CSV outputs. Agg backend only, no display."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
from matplotlib.backends.backend_agg import FigureCanvasAgg  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402

# keeps PNG bytes identical across runs
_PNG_META = {"Software": None}


def _save(fig: Figure, path: str | os.PathLike) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=100, metadata=_PNG_META)


def residual_histograms(hist_rows, seed: int, path) -> None:
    """Projected-value distributions (original / SVD / iSVD per n) for one seed."""
    fig = Figure(figsize=(10, 4))
    ax_v, ax_r = fig.subplots(1, 2)
    groups: dict[tuple[str, int], list] = {}
    for series, n, s, lo, hi, count in hist_rows:
        if s == seed:
            groups.setdefault((series, n), []).append((lo, hi, count))
    for (series, n), bins in sorted(groups.items()):
        lo, hi, count = map(np.asarray, zip(*bins))
        centres = 0.5 * (lo + hi)
        label = series.split("_", 1)[1] + (f" n={n}" if n else "")
        ax = ax_v if series.startswith("value") else ax_r
        ax.plot(centres, count, drawstyle="steps-mid", label=label)
    ax_v.set_xlabel("entry value")
    ax_v.set_ylabel("count")
    ax_v.set_yscale("log")
    ax_v.set_title("matrix entries before / after projection")
    ax_r.set_xlabel("relative column residual")
    ax_r.set_title("residual against basis")
    for ax in (ax_v, ax_r):
        ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def saving_rates(rows, path) -> None:
    """Modelled, measured and asymptotic saving rate against block count."""
    by_n: dict[int, list] = {}
    for r in rows:
        by_n.setdefault(r[0], []).append(r)
    ns = np.array(sorted(by_n))
    est = [np.mean([r[10] for r in by_n[n]]) for n in ns]
    theory = [by_n[n][0][11] for n in ns]
    measured = [np.mean([r[12] for r in by_n[n]]) for n in ns]
    fig = Figure(figsize=(5, 4))
    ax = fig.subplots()
    ax.plot(ns, theory, "k--", label="(n^2-1)/n^2")
    ax.plot(ns, est, "o-", label="cost model")
    ax.plot(ns, measured, "s-", label="measured working set")
    ax.set_xlabel("number of blocks n")
    ax.set_ylabel("memory saving rate")
    ax.set_ylim(min(0.0, *est, *measured), 1.02)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def metric_table(table: np.ndarray, title: str, path) -> None:
    """Per-task AUROC trajectories across continual steps."""
    fig = Figure(figsize=(5, 4))
    ax = fig.subplots()
    steps = np.arange(1, table.shape[0] + 1)
    for i in range(table.shape[1]):
        ax.plot(steps[i:], table[i:, i], "o-", label=f"task {i + 1}")
    ax.set_xlabel("after training step")
    ax.set_ylabel("AUROC")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def gamma_sweep(rows, path) -> None:
    """A-metric and FM against gamma_th, one line per projection mode.

    Thresholds are placed at evenly spaced categorical positions since the
    interesting values crowd against 1.
    """
    gammas = sorted({r["gamma_th"] for r in rows})
    pos = {g: i for i, g in enumerate(gammas)}
    fig = Figure(figsize=(9, 4))
    ax_a, ax_f = fig.subplots(1, 2)
    for mode in sorted({r["projection"] for r in rows}):
        sel = sorted((r for r in rows if r["projection"] == mode), key=lambda r: r["gamma_th"])
        ax_a.plot([pos[r["gamma_th"]] for r in sel], [r["a_metric"] for r in sel], "o-", label=mode)
        fm = [(pos[r["gamma_th"]], r["fm"]) for r in sel if r["fm"] is not None]
        if fm:
            ax_f.plot(*zip(*fm), "o-", label=mode)
    ax_a.set_ylabel("A-metric (mean final AUROC)")
    ax_f.set_ylabel("forgetting measure")
    for ax in (ax_a, ax_f):
        ax.set_xticks(range(len(gammas)))
        ax.set_xticklabels([f"{g:g}" for g in gammas])
        ax.set_xlabel("gamma_th")
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def anomaly_map(m: np.ndarray, path) -> None:
    fig = Figure(figsize=(4, 4))
    ax = fig.subplots()
    im = ax.imshow(m, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(f"max = {m.max():.4g}")
    fig.tight_layout()
    _save(fig, path)
