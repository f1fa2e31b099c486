"""Numpy CNN for TAF tensors: model, training, checkpoints, gradient check."""
from .checkpoint import load, save
from .gradcheck import GradCheckResult, gradient_check
from .model import ModelConfig, ModelParams, forward, loss_and_backward, xavier_init
from .training import Dataset, TrainReport, evaluate, split_by_signer, train

__all__ = [
    "ModelConfig", "ModelParams", "forward", "loss_and_backward", "xavier_init",
    "Dataset", "TrainReport", "evaluate", "split_by_signer", "train",
    "GradCheckResult", "gradient_check", "load", "save",
]
