"""Optimizer, checkpoints and training loops."""

from .checkpoint import Checkpoint, CheckpointError, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .optim import OptimState, adamw_step
from .train import (
    ErmConfig,
    ErmResult,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    accuracy,
    frozen,
    predict,
    resume_scbd,
    stream_rng,
    train_erm,
    train_scbd,
    validation_objective,
    write_log_csv,
)
