"""Dual-path transformer blocks: a parameter-shared looped sublayer beside
a wide single-pass sublayer, combined by learned per-token gates, with the
FLOP-budget width solver, routing read-outs, and training recipe."""

from .config import ConfigError, ModelConfig, TrainConfig, load_config_file
from .flops import BudgetError, param_count, solve_widths
from .gradcheck import GradCheckError, grad_check
from .model import greedy_decode, init_parameters, model_forward, sequence_loss
from .params import CheckpointError, ParameterStore, load_checkpoint, save_checkpoint
from .tensor import (
    DomainError,
    DtypeError,
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    TensorError,
)
from .train import evaluate_bpb, load_model_checkpoint, lr_at, train

__all__ = [
    "BudgetError",
    "CheckpointError",
    "ConfigError",
    "DomainError",
    "DtypeError",
    "GradCheckError",
    "ModelConfig",
    "NonFiniteError",
    "ParameterStore",
    "ShapeError",
    "Tape",
    "Tensor",
    "TensorError",
    "TrainConfig",
    "evaluate_bpb",
    "grad_check",
    "greedy_decode",
    "init_parameters",
    "load_checkpoint",
    "load_config_file",
    "load_model_checkpoint",
    "lr_at",
    "model_forward",
    "param_count",
    "save_checkpoint",
    "sequence_loss",
    "solve_widths",
    "train",
]

__version__ = "0.1.0"
