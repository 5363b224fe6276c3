"""From-scratch small CNN: layers, network assembly, training, serialization."""

from .network import (
    LayerSpec,
    NetworkSpec,
    build_cnn,
    build_initial_cnn,
    extract_features,
    forward,
    forward_batch,
    init_weights,
)
from .training import TrainConfig, fine_tune, loss_and_grads, sgd_step, train
from .container import load_model, load_weights, save_model, save_weights
from .estimator import ExpressionCnn

__all__ = [
    "LayerSpec",
    "NetworkSpec",
    "build_cnn",
    "build_initial_cnn",
    "init_weights",
    "forward",
    "forward_batch",
    "extract_features",
    "TrainConfig",
    "loss_and_grads",
    "sgd_step",
    "train",
    "fine_tune",
    "save_weights",
    "load_weights",
    "save_model",
    "load_model",
    "ExpressionCnn",
]
