"""Progressive three-stage fitting: config, log, checkpoints, stage driver."""

from __future__ import annotations

from .config import TrainConfig, load_config, save_config
from .log import TrainLog
from .state import load_model, load_resume, save_model
from .trainer import FitResult, Trainer, fit

__all__ = [
    "FitResult",
    "TrainConfig",
    "TrainLog",
    "Trainer",
    "fit",
    "load_config",
    "load_model",
    "load_resume",
    "save_config",
    "save_model",
]
