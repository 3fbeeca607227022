"""Synthetic task streams for the continual anomaly-scoring harness.

Every task draws its normal samples from a low-dimensional region spanned by
a task-specific orthonormal frame, warped by a smooth nonlinearity inside
that frame so the samples stay exactly rank ``rank + shared_rank``.
Anomalies are normal samples with a few coordinates pushed by
``anomaly_scale``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["TaskGenConfig", "TaskData", "make_tasks", "task_frames"]


@dataclass(frozen=True)
class TaskGenConfig:
    d_in: int = 32
    n_tasks: int = 5
    rank: int = 3
    shared_rank: int = 0
    n_train: int = 200
    n_eval: int = 100
    anomaly_scale: float = 0.5
    anomaly_sparsity: int = 3
    signal_scale: float = 1.0
    offset_scale: float = 0.5
    curvature: float = 0.5
    frames: str = "orthogonal"  # or "random"

    def __post_init__(self):
        if self.rank < 1 or self.rank > self.d_in:
            raise ValueError(f"rank must lie in [1, d_in={self.d_in}], got {self.rank}")
        if self.shared_rank < 0:
            raise ValueError("shared_rank must be non-negative")
        if self.frames not in ("orthogonal", "random"):
            raise ValueError(f"frames must be 'orthogonal' or 'random', got {self.frames!r}")
        need = self.shared_rank + (self.n_tasks * self.rank if self.frames == "orthogonal" else self.rank)
        if need > self.d_in:
            raise ValueError(f"frames need {need} dimensions but d_in={self.d_in}")
        if self.n_tasks < 1 or self.n_train < 1 or self.n_eval < 1:
            raise ValueError("n_tasks, n_train and n_eval must be positive")
        if not 0 <= self.anomaly_sparsity <= self.d_in:
            raise ValueError("anomaly_sparsity must lie in [0, d_in]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TaskData:
    task_id: int
    train_inputs: np.ndarray
    eval_normal: np.ndarray
    eval_anomalous: np.ndarray
    frame: np.ndarray

    @property
    def eval_inputs(self) -> np.ndarray:
        return np.vstack([self.eval_normal, self.eval_anomalous])

    @property
    def eval_labels(self) -> np.ndarray:
        return np.concatenate([np.zeros(len(self.eval_normal), dtype=int),
                               np.ones(len(self.eval_anomalous), dtype=int)])


def _orthonormalize(a: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(a)
    # fix column signs so the frame is a deterministic function of the draw
    return q * np.sign(np.diag(r))


def task_frames(cfg: TaskGenConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Frame for every task: shared columns first, then task-private ones."""
    if cfg.frames == "orthogonal":
        q = _orthonormalize(rng.standard_normal((cfg.d_in, cfg.shared_rank + cfg.n_tasks * cfg.rank)))
        shared = q[:, : cfg.shared_rank]
        private = [q[:, cfg.shared_rank + t * cfg.rank: cfg.shared_rank + (t + 1) * cfg.rank]
                   for t in range(cfg.n_tasks)]
    else:
        shared = _orthonormalize(rng.standard_normal((cfg.d_in, cfg.shared_rank)))
        private = []
        for _ in range(cfg.n_tasks):
            p = rng.standard_normal((cfg.d_in, cfg.rank))
            private.append(_orthonormalize(p - shared @ (shared.T @ p)))
    return [np.hstack([shared, p]) for p in private]


def _sample(rng, frame, mix, offset, n, cfg: TaskGenConfig) -> np.ndarray:
    r = frame.shape[1]
    z = rng.standard_normal((n, r))
    warped = z + cfg.curvature * np.tanh(z @ mix)
    coords = offset + warped * (cfg.signal_scale / np.sqrt(r))
    return coords @ frame.T


def _perturb(rng, x, cfg: TaskGenConfig) -> np.ndarray:
    out = x.copy()
    if cfg.anomaly_sparsity == 0 or cfg.anomaly_scale == 0:
        return out
    for row in out:
        idx = rng.choice(cfg.d_in, size=cfg.anomaly_sparsity, replace=False)
        row[idx] += cfg.anomaly_scale * rng.choice([-1.0, 1.0], size=cfg.anomaly_sparsity)
    return out


def make_tasks(cfg: TaskGenConfig, seed: int) -> list[TaskData]:
    """Generate ``cfg.n_tasks`` tasks; identical ``(cfg, seed)`` gives identical data."""
    rng = np.random.default_rng(seed)
    frames = task_frames(cfg, rng)
    tasks = []
    for t, frame in enumerate(frames):
        r = frame.shape[1]
        mix = rng.standard_normal((r, r))
        offset = cfg.offset_scale * rng.standard_normal(r) / np.sqrt(r)
        train = _sample(rng, frame, mix, offset, cfg.n_train, cfg)
        normal = _sample(rng, frame, mix, offset, cfg.n_eval, cfg)
        anomalous = _perturb(rng, _sample(rng, frame, mix, offset, cfg.n_eval, cfg), cfg)
        tasks.append(TaskData(t, train, normal, anomalous, frame))
    return tasks
