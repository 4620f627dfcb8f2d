from .backend import COMPILED
from .core import (
    AdamState,
    DenseLayer,
    LstmCell,
    adam_update,
    glorot_uniform,
    mse_loss,
    softmax,
    softmax_xent,
)

__all__ = [
    "AdamState",
    "COMPILED",
    "DenseLayer",
    "LstmCell",
    "adam_update",
    "glorot_uniform",
    "mse_loss",
    "softmax",
    "softmax_xent",
]
