"""Anomaly maps, image scores, AUROC and continual-learning summary metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "UndefinedMetricError",
    "MetricTable",
    "anomaly_map",
    "layer_distance",
    "bilinear_upsample",
    "image_score",
    "auroc",
    "a_metric",
    "forgetting_measure",
]


class UndefinedMetricError(ValueError):
    """The metric has no value for this input (e.g. only one class present)."""


def layer_distance(fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    """Squared L2 distance over channels at every spatial position.

    ``fa`` and ``fb`` are ``(C, H, W)`` arrays; the result is ``(H, W)``.
    """
    fa = np.asarray(fa, dtype=np.float64)
    fb = np.asarray(fb, dtype=np.float64)
    if fa.ndim != 3 or fa.shape != fb.shape:
        raise ValueError(f"feature shapes differ or are not 3-D: {fa.shape} vs {fb.shape}")
    diff = fa - fb
    return np.einsum("chw,chw->hw", diff, diff)


def _source_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centres: src = (i + 0.5) * n_in / n_out - 0.5, clamped at 0
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def bilinear_upsample(m, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with the align-corners-false convention.

    Equal input and output sizes return the input values unchanged.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("map must be 2-D")
    h, w = a.shape
    if out_h < h or out_w < w:
        raise ValueError(f"cannot upsample {a.shape} to smaller ({out_h}, {out_w})")
    if (h, w) == (out_h, out_w):
        return a.copy()
    r0, r1, fr = _source_coords(h, out_h)
    c0, c1, fc = _source_coords(w, out_w)
    fr = fr[:, None]
    top = a[r0][:, c0] * (1 - fc) + a[r0][:, c1] * fc
    bot = a[r1][:, c0] * (1 - fc) + a[r1][:, c1] * fc
    return top * (1 - fr) + bot * fr


def anomaly_map(a: Sequence[np.ndarray], b: Sequence[np.ndarray], out_h: int, out_w: int) -> np.ndarray:
    """Sum over layers of upsampled per-position squared feature distances."""
    if len(a) != len(b):
        raise ValueError(f"stacks have {len(a)} and {len(b)} layers")
    if not a:
        raise ValueError("empty feature stack")
    total = np.zeros((out_h, out_w))
    for fa, fb in zip(a, b):
        total += bilinear_upsample(layer_distance(fa, fb), out_h, out_w)
    return total


def image_score(m) -> float:
    a = np.asarray(m, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty map")
    return float(a.max())


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC from mid-ranks; tied pairs count one half."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = y == 1
    if not np.all((y == 0) | pos):
        raise ValueError("labels must be 0 or 1")
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both classes present")
    ranks = rankdata(s)
    # rank sums of mid-ranks are multiples of 0.5, so this is exact
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class MetricTable:
    """Lower-triangular table ``A[b][i]``: score of task ``i`` after step ``b``.

    Indices are zero-based here; row ``b`` holds ``b + 1`` entries.
    """

    rows: list[list[float]]

    @classmethod
    def empty(cls) -> "MetricTable":
        return cls([])

    @property
    def t_steps(self) -> int:
        return len(self.rows)

    def append_row(self, row: Sequence[float]) -> None:
        if len(row) != len(self.rows) + 1:
            raise ValueError(f"row {len(self.rows)} needs {len(self.rows) + 1} entries, got {len(row)}")
        self.rows.append([float(v) for v in row])

    def is_complete(self) -> bool:
        return all(len(r) == b + 1 for b, r in enumerate(self.rows))

    def to_dense(self) -> np.ndarray:
        """``T x T`` array with NaN above the diagonal."""
        t = self.t_steps
        out = np.full((t, t), np.nan)
        for b, r in enumerate(self.rows):
            out[b, : len(r)] = r
        return out


def _checked(table: MetricTable) -> list[list[float]]:
    if table.t_steps == 0 or not table.is_complete():
        raise ValueError("metric table is incomplete")
    return table.rows


def a_metric(table: MetricTable) -> float:
    """Mean score over all tasks after the final step."""
    rows = _checked(table)
    return float(np.mean(rows[-1]))


def forgetting_measure(table: MetricTable) -> float:
    """Mean over earlier tasks of (best score before the last step - final score).

    Negative values mean later training improved earlier tasks.
    """
    rows = _checked(table)
    n = len(rows)
    if n < 2:
        raise UndefinedMetricError("forgetting needs at least two steps")
    final = rows[-1]
    drops = [max(rows[b][i] for b in range(i, n - 1)) - final[i] for i in range(n - 1)]
    return float(np.mean(drops))
