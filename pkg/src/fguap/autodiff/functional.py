"""Neural-network primitives built on the tape in ``tensor``.

Each function computes its forward value with ``numpy`` and registers a
closed-form backward rule. Conventions: the relu subgradient at 0 is 0, clamp
passes gradient 1 on its inclusive boundaries, and max pooling routes the
gradient to the first maximal element of each window.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import DegenerateFeatureError, ShapeMismatchError
from .tensor import Tensor, getitem, record, tensor_mean

logger = logging.getLogger(__name__)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Affine map ``x @ weight.T + bias`` over the last axis.

    Args:
        x: Input of dims [..., in_features] (rank 2 or 3)
        weight: Matrix of dims [out_features, in_features]
        bias: Optional vector of dims [out_features]

    Returns:
        Tensor of dims [..., out_features]

    Raises:
        ShapeMismatchError: If feature widths disagree
    """
    if x.ndim not in (2, 3) or weight.ndim != 2 or x.dims[-1] != weight.dims[1]:
        raise ShapeMismatchError("linear", x.dims, weight.dims)
    if bias is not None and bias.dims != (weight.dims[0],):
        raise ShapeMismatchError("linear", weight.dims, bias.dims, "bias must match out_features")

    xd, wd = x.data, weight.data
    out = np.matmul(xd, wd.T)
    if bias is not None:
        out = out + bias.data
    in_features = wd.shape[1]

    def backward(g: np.ndarray):
        g2 = g.reshape(-1, g.shape[-1])
        x2 = xd.reshape(-1, in_features)
        gx = np.matmul(g, wd)
        gw = np.matmul(g2.T, x2)
        gb = g2.sum(axis=0)
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return record("linear", out, inputs, backward)


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2-D cross-correlation with zero padding.

    Args:
        x: Input [N, C, H, W]
        kernel: Filters [F, C, k, k]
        bias: Optional per-filter offset [F]
        stride: Step between windows (>= 1)
        padding: Zero rows/columns added on every side (>= 0)

    Returns:
        Tensor [N, F, H', W'] with H' = (H + 2*padding - k) // stride + 1

    Raises:
        ValueError: If stride < 1, padding < 0, or the kernel exceeds the padded input
        ShapeMismatchError: If channel counts disagree
    """
    if stride < 1:
        raise ValueError(f"conv2d stride must be >= 1, got {stride}")
    if padding < 0:
        raise ValueError(f"conv2d padding must be >= 0, got {padding}")
    if x.ndim != 4 or kernel.ndim != 4 or x.dims[1] != kernel.dims[1]:
        raise ShapeMismatchError("conv2d", x.dims, kernel.dims)
    n, c, h, w = x.dims
    f, _, kh, kw = kernel.dims
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ValueError(
            f"conv2d kernel {kh}x{kw} is larger than the padded input "
            f"{h + 2 * padding}x{w + 2 * padding}"
        )
    if bias is not None and bias.dims != (f,):
        raise ShapeMismatchError("conv2d", kernel.dims, bias.dims, "bias must match filters")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = windows.shape[2], windows.shape[3]
    kd = kernel.data
    out = np.einsum("nchwij,fcij->nfhw", windows, kd, optimize=True)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    def backward(g: np.ndarray):
        gk = np.einsum("nchwij,nfhw->fcij", windows, g, optimize=True)
        gxp = np.zeros(xp.shape)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += np.einsum(
                    "nfhw,fc->nchw", g, kd[:, :, i, j], optimize=True
                )
        gx = gxp[:, :, padding : padding + h, padding : padding + w]
        if bias is not None:
            return gx, gk, g.sum(axis=(0, 2, 3))
        return gx, gk

    inputs = (x, kernel, bias) if bias is not None else (x, kernel)
    return record("conv2d", out, inputs, backward)


def relu(x: Tensor) -> Tensor:
    xd = x.data
    mask = xd > 0
    return record("relu", np.where(mask, xd, 0.0), (x,), lambda g: (g * mask,))


def max_pool2d(x: Tensor, size: int = 2) -> Tensor:
    """Non-overlapping max pooling over the last two axes of [N, C, H, W]."""
    if size < 1:
        raise ValueError(f"max_pool2d size must be >= 1, got {size}")
    if x.ndim != 4:
        raise ShapeMismatchError("max_pool2d", x.dims, (0, 0, 0, 0), "expected [N, C, H, W]")
    n, c, h, w = x.dims
    ho, wo = h // size, w // size
    if ho == 0 or wo == 0:
        raise ValueError(f"max_pool2d window {size} larger than input {h}x{w}")

    cropped = x.data[:, :, : ho * size, : wo * size]
    windows = (
        cropped.reshape(n, c, ho, size, wo, size)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, size * size)
    )
    idx = np.argmax(windows, axis=-1)[..., None]
    out = np.take_along_axis(windows, idx, axis=-1)[..., 0]

    def backward(g: np.ndarray):
        gw = np.zeros(windows.shape)
        np.put_along_axis(gw, idx, g[..., None], axis=-1)
        gc = gw.reshape(n, c, ho, wo, size, size).transpose(0, 1, 2, 4, 3, 5)
        full = np.zeros((n, c, h, w))
        full[:, :, : ho * size, : wo * size] = gc.reshape(n, c, ho * size, wo * size)
        return (full,)

    return record("max_pool2d", out, (x,), backward)


def mean_pool(x: Tensor, axis: int = 1) -> Tensor:
    """Average over ``axis`` (the patch axis for token sequences)."""
    return tensor_mean(x, axis=axis)


def softmax(x: Tensor) -> Tensor:
    """Softmax along the last (class) axis."""
    xd = x.data
    shifted = xd - np.max(xd, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return record("softmax", out, (x,), backward)


def log_softmax(x: Tensor) -> Tensor:
    """Log-softmax along the last (class) axis."""
    xd = x.data
    shifted = xd - np.max(xd, axis=-1, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def backward(g: np.ndarray):
        return (g - probs * np.sum(g, axis=-1, keepdims=True),)

    return record("log_softmax", out, (x,), backward)


def cosine_similarity(a: Tensor, b: Tensor) -> Tensor:
    """
    Cosine similarity between vectors.

    Rank-1 inputs give a scalar; rank-2 inputs [N, d] give one value per row.

    Raises:
        ShapeMismatchError: If the inputs differ in shape or rank is not 1 or 2
        DegenerateFeatureError: If any compared vector has zero norm
    """
    if a.dims != b.dims or a.ndim not in (1, 2):
        raise ShapeMismatchError("cosine_similarity", a.dims, b.dims)
    ad, bd = a.data, b.data
    na = np.linalg.norm(ad, axis=-1, keepdims=True)
    nb = np.linalg.norm(bd, axis=-1, keepdims=True)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise DegenerateFeatureError("cosine_similarity: zero-norm feature vector")
    dot = np.sum(ad * bd, axis=-1, keepdims=True)
    cos = dot / (na * nb)
    out = np.clip(cos[..., 0], -1.0, 1.0)

    def backward(g: np.ndarray):
        gk = np.asarray(g)[..., None]
        ga = gk * (bd / (na * nb) - cos * ad / (na * na))
        gb = gk * (ad / (na * nb) - cos * bd / (nb * nb))
        return ga, gb

    return record("cosine_similarity", out, (a, b), backward)


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """
    Elementwise projection onto [lo, hi].

    Raises:
        ValueError: If lo > hi
    """
    if lo > hi:
        raise ValueError(f"clamp bounds must satisfy lo <= hi, got lo={lo}, hi={hi}")
    xd = x.data
    inside = (xd >= lo) & (xd <= hi)
    return record("clamp", np.clip(xd, lo, hi), (x,), lambda g: (g * inside,))


def broadcast_batch(x: Tensor, n: int) -> Tensor:
    """Repeat ``x`` along a new leading batch axis of length ``n``."""
    if n < 1:
        raise ValueError(f"batch size must be >= 1, got {n}")
    out = np.broadcast_to(x.data, (n,) + x.dims).copy()
    return record("broadcast_batch", out, (x,), lambda g: (g.sum(axis=0),))


def nll_loss(log_probs: Tensor, labels: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under ``log_probs`` [N, K]."""
    labels = np.asarray(labels, dtype=np.int64)
    if log_probs.ndim != 2 or labels.shape != (log_probs.dims[0],):
        raise ShapeMismatchError("nll_loss", log_probs.dims, labels.shape)
    if labels.size and (labels.min() < 0 or labels.max() >= log_probs.dims[1]):
        raise ValueError(f"labels must lie in [0, {log_probs.dims[1]})")
    picked = getitem(log_probs, (np.arange(labels.shape[0]), labels))
    return -tensor_mean(picked)


def cross_entropy(logits: Tensor, labels: Union[np.ndarray, Sequence[int]]) -> Tensor:
    """Mean softmax cross-entropy of ``logits`` [N, K] against integer labels."""
    return nll_loss(log_softmax(logits), labels)
