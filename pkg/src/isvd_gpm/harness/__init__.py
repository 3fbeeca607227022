from .continual import (
    HarnessConfig,
    RunReport,
    TrainingError,
    capture_and_update_basis,
    evaluate_task,
    reconstruction_errors,
    run_sequence,
    train_task,
)
from .net import DenseNet, Layer, backward, forward, init_net, mse_loss
from .tasks import TaskData, TaskGenConfig, make_tasks

__all__ = [
    "HarnessConfig", "RunReport", "TrainingError", "capture_and_update_basis",
    "evaluate_task", "reconstruction_errors", "run_sequence", "train_task",
    "DenseNet", "Layer", "backward", "forward", "init_net", "mse_loss",
    "TaskData", "TaskGenConfig", "make_tasks",
]
