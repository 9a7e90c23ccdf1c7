"""Layers used by the victim architectures.

A layer owns its parameter tensors under short local names (``weight``,
``bias``, ...). Parameters are immutable tensors; optimisers swap them through
``set_parameter``.
"""

import math
from typing import Dict, Tuple

import numpy as np

from ..autodiff import Tensor, conv2d, linear, matmul, max_pool2d, mean_pool, relu, softmax
from ..exceptions import ShapeMismatchError


def he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> Tensor:
    """Uniform in [-sqrt(6 / fan_in), sqrt(6 / fan_in)]."""
    bound = math.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape))


class Layer:
    """Base layer: no parameters, identity shape handling left to subclasses."""

    def __init__(self, name: str):
        self.name = name
        self._params: Dict[str, Tensor] = {}

    def parameters(self) -> Dict[str, Tensor]:
        return dict(self._params)

    def set_parameter(self, local_name: str, value: Tensor) -> None:
        current = self._params.get(local_name)
        if current is None:
            raise KeyError(f"{self.name} has no parameter '{local_name}'")
        if current.dims != value.dims:
            raise ShapeMismatchError(f"{self.name}.{local_name}", current.dims, value.dims)
        self._params[local_name] = value

    def __call__(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}={v.dims}" for k, v in self._params.items())
        return f"{type(self).__name__}({self.name}{': ' + shapes if shapes else ''})"


class Conv2d(Layer):
    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__(name)
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel_size * kernel_size
        self._params["weight"] = he_uniform(
            rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in
        )
        self._params["bias"] = Tensor(np.zeros(out_channels))

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(
            x, self._params["weight"], self._params["bias"], stride=self.stride, padding=self.padding
        )


class Linear(Layer):
    def __init__(self, name: str, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features
        self._params["weight"] = he_uniform(rng, (out_features, in_features), in_features)
        self._params["bias"] = Tensor(np.zeros(out_features))

    @property
    def weight(self) -> Tensor:
        return self._params["weight"]

    @property
    def bias(self) -> Tensor:
        return self._params["bias"]

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self._params["weight"], self._params["bias"])


class ReLU(Layer):
    def __call__(self, x: Tensor) -> Tensor:
        return relu(x)


class MaxPool2d(Layer):
    def __init__(self, name: str, size: int = 2):
        super().__init__(name)
        self.size = size

    def __call__(self, x: Tensor) -> Tensor:
        return max_pool2d(x, self.size)


class Flatten(Layer):
    def __call__(self, x: Tensor) -> Tensor:
        return x.reshape(x.dims[0], -1)


class MeanPool(Layer):
    """Average over the token axis of [N, P, D]."""

    def __call__(self, x: Tensor) -> Tensor:
        return mean_pool(x, axis=1)


class PatchEmbed(Layer):
    """Non-overlapping ``patch``x``patch`` patches projected to ``width`` channels.

    Output dims are [N, P, width] with patches in row-major order.
    """

    def __init__(
        self,
        name: str,
        in_channels: int,
        patch: int,
        width: int,
        rng: np.random.Generator,
    ):
        super().__init__(name)
        self.patch = patch
        self.width = width
        fan_in = in_channels * patch * patch
        self._params["weight"] = he_uniform(rng, (width, in_channels, patch, patch), fan_in)
        self._params["bias"] = Tensor(np.zeros(width))

    def __call__(self, x: Tensor) -> Tensor:
        if x.dims[2] % self.patch or x.dims[3] % self.patch:
            raise ShapeMismatchError(
                self.name, x.dims, (self.patch, self.patch), "side must be a multiple of the patch"
            )
        grid = conv2d(x, self._params["weight"], self._params["bias"], stride=self.patch)
        n = grid.dims[0]
        tokens = grid.reshape(n, self.width, grid.dims[2] * grid.dims[3])
        return tokens.transpose((0, 2, 1))


class SelfAttention(Layer):
    """Single-head scaled dot-product self-attention with a residual connection."""

    def __init__(self, name: str, width: int, rng: np.random.Generator):
        super().__init__(name)
        self.width = width
        for proj in ("query", "key", "value", "out"):
            self._params[f"{proj}.weight"] = he_uniform(rng, (width, width), width)
            self._params[f"{proj}.bias"] = Tensor(np.zeros(width))

    def _project(self, proj: str, x: Tensor) -> Tensor:
        return linear(x, self._params[f"{proj}.weight"], self._params[f"{proj}.bias"])

    def attention_weights(self, x: Tensor) -> Tensor:
        """Attention matrix [N, P, P]; each query row sums to 1."""
        q = self._project("query", x)
        k = self._project("key", x)
        scores = matmul(q, k.transpose((0, 2, 1))) * (1.0 / math.sqrt(self.width))
        return softmax(scores)

    def __call__(self, x: Tensor) -> Tensor:
        attended = matmul(self.attention_weights(x), self._project("value", x))
        return x + self._project("out", attended)
