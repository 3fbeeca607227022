"""Task-by-task training with projected SGD and reconstruction-error scoring."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..isvd import absorb_block, init_stream, singular_value_scale, split_columns
from ..linalg import NumericalError, SignificantBasis, ThresholdMode
from ..metrics import MetricTable, UndefinedMetricError, a_metric, auroc, forgetting_measure
from ..projection import ProjectionState, project_orthogonal
from .net import DenseNet, backward, forward, init_net
from .tasks import TaskData, TaskGenConfig, make_tasks

__all__ = [
    "TrainingError",
    "HarnessConfig",
    "RunReport",
    "train_task",
    "capture_and_update_basis",
    "reconstruction_errors",
    "evaluate_task",
    "run_sequence",
]

BIAS_MODES = ("project", "raw", "freeze")


class TrainingError(NumericalError):
    """Training diverged (non-finite loss)."""


@dataclass(frozen=True)
class HarnessConfig:
    tasks: TaskGenConfig = field(default_factory=TaskGenConfig)
    hidden: tuple[int, ...] = (16,)
    activation: str = "tanh"
    gamma_th: float = 0.999
    sample_frac: float = 0.1
    n_blocks: int = 1
    epochs_base: int = 200
    epochs_incremental: int = 50
    eta: float = 0.05
    batch_size: int = 32
    project: bool = True
    bias_mode: str = "project"
    threshold_mode: str = ThresholdMode.ENERGY_AT_LEAST.value
    carry_singular_values: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma_th <= 1.0:
            raise ValueError("gamma_th must lie in [0, 1]")
        if not 0.0 < self.sample_frac <= 1.0:
            raise ValueError("sample_frac must lie in (0, 1]")
        if self.n_blocks < 1 or self.batch_size < 1:
            raise ValueError("n_blocks and batch_size must be >= 1")
        if self.epochs_base < 0 or self.epochs_incremental < 0:
            raise ValueError("epoch counts must be non-negative")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.bias_mode not in BIAS_MODES:
            raise ValueError(f"bias_mode must be one of {BIAS_MODES}")
        ThresholdMode(self.threshold_mode)

    def sizes(self) -> list[int]:
        return [self.tasks.d_in, *self.hidden, self.tasks.d_in]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class RunReport:
    seed: int
    config: dict
    metric_table: MetricTable
    losses: list[list[float]]
    basis_ranks: list[list[int]]

    @property
    def a_metric(self) -> float:
        return a_metric(self.metric_table)

    @property
    def forgetting(self) -> float | None:
        try:
            return forgetting_measure(self.metric_table)
        except UndefinedMetricError:
            return None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "metric_table": self.metric_table.rows,
            "a_metric": self.a_metric,
            "fm": self.forgetting,
            "losses": self.losses,
            "basis_ranks": self.basis_ranks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["seed"], d["config"], MetricTable([list(r) for r in d["metric_table"]]),
                   d["losses"], d["basis_ranks"])


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _augment(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((len(x), 1))])


def train_task(net: DenseNet, task: TaskData, proj: ProjectionState, epochs: int,
               batch_size: int, rng: np.random.Generator, bias_mode: str = "project",
               project: bool = True) -> tuple[DenseNet, list[float]]:
    """Minibatch SGD on the task's normal samples, reconstructing the input.

    Weight gradients are projected away from each layer's stored basis. With
    ``bias_mode="project"`` the bias is treated as the weight row of a
    constant-one input and projected together with ``W``; ``"raw"`` applies
    the plain bias gradient and ``"freeze"`` stops bias updates once any
    basis exists.
    """
    net = net.copy()
    data = task.train_inputs
    eta = proj.eta
    curve = []
    for _ in range(epochs):
        order = rng.permutation(len(data))
        total = 0.0
        for start in range(0, len(data), batch_size):
            batch = data[order[start:start + batch_size]]
            grads, loss = backward(net, batch, batch)
            if not math.isfinite(loss):
                raise TrainingError(f"loss became {loss} on task {task.task_id}")
            total += loss * len(batch)
            for i, (layer, (gw, gb)) in enumerate(zip(net.layers, grads)):
                basis = proj.basis_for(i) if project else None
                has_basis = basis is not None and not basis.is_empty
                if bias_mode == "project":
                    g = project_orthogonal(np.vstack([gw, gb]), basis)
                    gw, gb = g[:-1], g[-1]
                else:
                    gw = project_orthogonal(gw, basis)
                    if bias_mode == "freeze" and has_basis:
                        gb = np.zeros_like(gb)
                layer.weight -= eta * gw
                layer.bias -= eta * gb
        epoch_loss = total / len(data)
        if not math.isfinite(epoch_loss):
            raise TrainingError(f"loss became {epoch_loss} on task {task.task_id}")
        curve.append(epoch_loss)
    return net, curve


def capture_and_update_basis(net: DenseNet, task: TaskData, proj: ProjectionState,
                             gamma_th: float, sample_frac: float = 0.1, n_blocks: int = 1,
                             rng: np.random.Generator | None = None,
                             bias_mode: str = "project",
                             threshold_mode=ThresholdMode.ENERGY_AT_LEAST,
                             carry_singular_values: bool = False) -> ProjectionState:
    """Fold a sample of the task's layer inputs into every layer's basis.

    Each layer's inputs (transposed to ``d x N``) are streamed through the
    iterative SVD in ``n_blocks`` column blocks, seeded with the basis the
    layer already holds.
    """
    if not 0.0 < sample_frac <= 1.0:
        raise ValueError("sample_frac must lie in (0, 1]")
    data = task.train_inputs
    n_keep = max(1, int(round(sample_frac * len(data))))
    if n_keep < len(data):
        rng = rng if rng is not None else np.random.default_rng(0)
        data = data[np.sort(rng.choice(len(data), size=n_keep, replace=False))]
    _, inputs = forward(net, data)
    scale = singular_value_scale if carry_singular_values else None
    for i, x in enumerate(inputs):
        if bias_mode == "project":
            x = _augment(x)
        state = init_stream(x.shape[1], gamma_th, proj.basis_for(i), threshold_mode, scale)
        for block in split_columns(x.T, min(n_blocks, len(x))):
            state = absorb_block(state, block)
        proj = proj.with_basis(i, state.basis)
    return proj


def reconstruction_errors(net: DenseNet, x: np.ndarray) -> np.ndarray:
    out, _ = forward(net, x)
    return np.sum((out - x) ** 2, axis=1)


def evaluate_task(net: DenseNet, task: TaskData) -> float:
    """AUROC of per-sample squared reconstruction error, anomalies positive."""
    return auroc(reconstruction_errors(net, task.eval_inputs), task.eval_labels)


def run_sequence(cfg: HarnessConfig, seed: int, tasks: list[TaskData] | None = None) -> RunReport:
    """Train every task in turn and score all seen tasks after each step."""
    if tasks is None:
        tasks = make_tasks(cfg.tasks, seed)
    net = init_net(cfg.sizes(), cfg.activation, _rng(seed, 1))
    proj = ProjectionState({}, cfg.eta)
    table = MetricTable.empty()
    losses, ranks = [], []
    for b, task in enumerate(tasks):
        epochs = cfg.epochs_base if b == 0 else cfg.epochs_incremental
        try:
            net, curve = train_task(net, task, proj, epochs, cfg.batch_size, _rng(seed, 2, b),
                                    cfg.bias_mode, cfg.project)
        except TrainingError as exc:
            raise TrainingError(f"step {b} (seed {seed}): {exc}") from exc
        losses.append(curve)
        if cfg.project:
            proj = capture_and_update_basis(net, task, proj, cfg.gamma_th, cfg.sample_frac,
                                            cfg.n_blocks, _rng(seed, 3, b), cfg.bias_mode,
                                            cfg.threshold_mode, cfg.carry_singular_values)
        ranks.append([proj.per_layer_bases[i].k if i in proj.per_layer_bases else 0
                      for i in range(len(net.layers))])
        table.append_row([evaluate_task(net, tasks[i]) for i in range(b + 1)])
    return RunReport(seed, cfg.to_dict(), table, losses, ranks)
