"""Dense float64 kernels with reverse-mode gradients, encoders and Adam."""

from . import tensor as ops
from .check import FiniteDiffReport, finite_diff_check, loss_and_grad, loss_value, relative_error
from .checkpoint import dumps_checkpoint, load_checkpoint, loads_checkpoint, save_checkpoint
from .nn import GraphBatch, MlpSpec, MpnnSpec, glorot, message_passing_encode, mlp, mlp_forward
from .optim import AdamState, adam_step
from .tensor import NonFinite, ShapeError, Tensor

__all__ = [
    "AdamState",
    "FiniteDiffReport",
    "GraphBatch",
    "MlpSpec",
    "MpnnSpec",
    "NonFinite",
    "ShapeError",
    "Tensor",
    "adam_step",
    "dumps_checkpoint",
    "finite_diff_check",
    "glorot",
    "load_checkpoint",
    "loads_checkpoint",
    "loss_and_grad",
    "loss_value",
    "message_passing_encode",
    "mlp",
    "mlp_forward",
    "ops",
    "relative_error",
    "save_checkpoint",
]
