"""Minimal reverse-mode autodiff over float64 numpy arrays."""

from .functional import (
    broadcast_batch,
    clamp,
    conv2d,
    cosine_similarity,
    cross_entropy,
    linear,
    log_softmax,
    max_pool2d,
    mean_pool,
    nll_loss,
    relu,
    softmax,
)
from .optim import Adam, AdamState, adam_step
from .tensor import (
    Tape,
    TapeEntry,
    Tensor,
    active_tape,
    add,
    as_tensor,
    div,
    exp,
    getitem,
    log,
    matmul,
    mul,
    neg,
    reshape,
    sub,
    tensor_mean,
    tensor_sum,
    transpose,
)

__all__ = [
    "Tensor",
    "Tape",
    "TapeEntry",
    "active_tape",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "exp",
    "log",
    "matmul",
    "reshape",
    "transpose",
    "getitem",
    "tensor_sum",
    "tensor_mean",
    "linear",
    "conv2d",
    "relu",
    "max_pool2d",
    "mean_pool",
    "softmax",
    "log_softmax",
    "cosine_similarity",
    "clamp",
    "broadcast_batch",
    "nll_loss",
    "cross_entropy",
    "Adam",
    "AdamState",
    "adam_step",
]
