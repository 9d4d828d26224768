from .layers import (
    conv_backward,
    conv_forward,
    dense_backward,
    dense_forward,
    dropout,
    relu_backward,
    relu_forward,
    sigmoid,
    softmax,
)
from .losses import bce_loss, categorical_cross_entropy
from .model import (
    ModelFormatError,
    NetworkModel,
    build_model,
    load_model,
    reduced_config,
    save_model,
    table1_config,
)
from .optim import AdamState, adam_step
from .training import train

__all__ = [
    "AdamState",
    "ModelFormatError",
    "NetworkModel",
    "adam_step",
    "bce_loss",
    "build_model",
    "categorical_cross_entropy",
    "conv_backward",
    "conv_forward",
    "dense_backward",
    "dense_forward",
    "dropout",
    "load_model",
    "reduced_config",
    "relu_backward",
    "relu_forward",
    "save_model",
    "sigmoid",
    "softmax",
    "table1_config",
    "train",
]
