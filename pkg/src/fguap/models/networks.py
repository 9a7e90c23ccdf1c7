"""Victim classifiers and the ``build`` factory.

Every model is a feature extractor followed by one final linear layer (the
head). The last-layer feature h(x) is the post-activation input of the head,
so ``logits == features @ W.T + b`` holds exactly.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autodiff import Tensor
from ..exceptions import ShapeMismatchError
from ..utils.validators import validate_arch, validate_seed
from .layers import (
    Conv2d,
    Flatten,
    Layer,
    Linear,
    MaxPool2d,
    MeanPool,
    PatchEmbed,
    ReLU,
    SelfAttention,
)

logger = logging.getLogger(__name__)

FEATURE_DIM = 48
MLP_HIDDEN = 128
ATTN_WIDTH = 32
PATCH_SIZE = 4
EVAL_BATCH_SIZE = 256
DEFAULT_INPUT_SHAPE = (1, 24, 24)


class Model:
    """Layered classifier exposing logits and the last-layer feature."""

    def __init__(
        self,
        arch: str,
        layers: Sequence[Layer],
        head: Linear,
        input_shape: Tuple[int, int, int],
        num_classes: int,
        seed: int = 0,
        metadata: Optional[Dict[str, str]] = None,
    ):
        if head.out_features != num_classes:
            raise ShapeMismatchError("head", (head.out_features,), (num_classes,))
        names = [layer.name for layer in layers] + [head.name]
        if len(set(names)) != len(names):
            raise ValueError(f"layer names must be unique, got {names}")
        self.arch = arch
        self.layers: List[Layer] = list(layers)
        self.head = head
        self.input_shape = tuple(int(d) for d in input_shape)
        self.num_classes = num_classes
        self.seed = seed
        self.metadata: Dict[str, str] = dict(metadata or {})

    @property
    def feature_dim(self) -> int:
        return self.head.in_features

    @property
    def model_id(self) -> str:
        return self.metadata.get("model_id", f"{self.arch}-s{self.seed}")

    def __repr__(self) -> str:
        return f"Model({self.model_id}, input={self.input_shape}, K={self.num_classes}, d={self.feature_dim})"

    # ------------------------------------------------------------------ #
    # Forward                                                              #
    # ------------------------------------------------------------------ #

    def _check_input(self, x: Tensor) -> None:
        if x.ndim != 4 or x.dims[1:] != self.input_shape:
            raise ShapeMismatchError(self.arch, x.dims, (-1,) + self.input_shape, "model input")

    def features(self, x: Tensor) -> Tensor:
        """Last-layer features [N, d] of a batch [N, C, H, W]."""
        self._check_input(x)
        for layer in self.layers:
            x = layer(x)
        return x

    def forward_with_features(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        """Return (logits [N, K], features [N, d])."""
        feats = self.features(x)
        return self.head(feats), feats

    def logits(self, x: Tensor) -> Tensor:
        return self.forward_with_features(x)[0]

    def _batched(self, images: np.ndarray, fn, width: int) -> np.ndarray:
        images = np.asarray(images, dtype=np.float64)
        if images.ndim == 3:
            images = images[None]
        chunks = [
            fn(Tensor(images[start : start + EVAL_BATCH_SIZE])).data
            for start in range(0, len(images), EVAL_BATCH_SIZE)
        ]
        return np.concatenate(chunks) if chunks else np.zeros((0, width))

    def predict_logits(self, images: np.ndarray) -> np.ndarray:
        """Logits for an array of images without recording gradients."""
        return self._batched(images, self.logits, self.num_classes)

    def extract_features(self, images: np.ndarray) -> np.ndarray:
        """Features [N, d] for an array of images."""
        return self._batched(images, self.features, self.feature_dim)

    def predict_batch(self, images: np.ndarray) -> np.ndarray:
        """Predicted class per image (lowest index wins ties)."""
        return np.argmax(self.predict_logits(images), axis=1)

    # ------------------------------------------------------------------ #
    # Parameters                                                           #
    # ------------------------------------------------------------------ #

    def _all_layers(self) -> List[Layer]:
        return self.layers + [self.head]

    def named_parameters(self) -> Dict[str, Tensor]:
        """Every parameter as ``layer.local`` -> Tensor, in layer order."""
        params: Dict[str, Tensor] = {}
        for layer in self._all_layers():
            for local, tensor in layer.parameters().items():
                params[f"{layer.name}.{local}"] = tensor
        return params

    def load_parameters(self, params: Dict[str, Union[Tensor, np.ndarray]]) -> None:
        """
        Replace parameters by name.

        Raises:
            KeyError: If a name is unknown or a parameter is missing
            ShapeMismatchError: If a shape differs
        """
        expected = self.named_parameters()
        missing = sorted(set(expected) - set(params))
        unknown = sorted(set(params) - set(expected))
        if missing or unknown:
            raise KeyError(f"parameter names differ: missing={missing} unknown={unknown}")
        by_name = {layer.name: layer for layer in self._all_layers()}
        for full_name, value in params.items():
            tensor = value if isinstance(value, Tensor) else Tensor(value)
            layer_name, _, local = full_name.partition(".")
            by_name[layer_name].set_parameter(local, tensor)

    def requires_grad_(self, flag: bool) -> "Model":
        """Re-wrap every parameter with the given ``requires_grad`` flag."""
        self.load_parameters(
            {name: Tensor(t.data, requires_grad=flag) for name, t in self.named_parameters().items()}
        )
        return self

    def num_parameters(self) -> int:
        return sum(t.size for t in self.named_parameters().values())


def _convnet(input_shape: Tuple[int, int, int], num_classes: int, rng: np.random.Generator) -> Tuple[List[Layer], Linear]:
    c, h, w = input_shape
    flat = 16 * (h // 2 // 2) * (w // 2 // 2)
    layers: List[Layer] = [
        Conv2d("conv1", c, 8, 3, rng, padding=1),
        ReLU("relu1"),
        MaxPool2d("pool1", 2),
        Conv2d("conv2", 8, 16, 3, rng, padding=1),
        ReLU("relu2"),
        MaxPool2d("pool2", 2),
        Flatten("flatten"),
        Linear("fc", flat, FEATURE_DIM, rng),
        ReLU("relu3"),
    ]
    return layers, Linear("head", FEATURE_DIM, num_classes, rng)


def _mlp(input_shape: Tuple[int, int, int], num_classes: int, rng: np.random.Generator) -> Tuple[List[Layer], Linear]:
    c, h, w = input_shape
    layers: List[Layer] = [
        Flatten("flatten"),
        Linear("fc1", c * h * w, MLP_HIDDEN, rng),
        ReLU("relu1"),
        Linear("fc2", MLP_HIDDEN, FEATURE_DIM, rng),
        ReLU("relu2"),
    ]
    return layers, Linear("head", FEATURE_DIM, num_classes, rng)


def _attnnet(input_shape: Tuple[int, int, int], num_classes: int, rng: np.random.Generator) -> Tuple[List[Layer], Linear]:
    c, h, w = input_shape
    if h % PATCH_SIZE or w % PATCH_SIZE:
        raise ValueError(f"attnnet needs sides divisible by {PATCH_SIZE}, got {h}x{w}")
    layers: List[Layer] = [
        PatchEmbed("patch", c, PATCH_SIZE, ATTN_WIDTH, rng),
        SelfAttention("attn", ATTN_WIDTH, rng),
        MeanPool("pool"),
        Linear("fc", ATTN_WIDTH, FEATURE_DIM, rng),
        ReLU("relu"),
    ]
    return layers, Linear("head", FEATURE_DIM, num_classes, rng)


_BUILDERS = {"convnet": _convnet, "mlp": _mlp, "attnnet": _attnnet}


def build(
    arch: str,
    num_classes: int,
    seed: int,
    input_shape: Tuple[int, int, int] = DEFAULT_INPUT_SHAPE,
) -> Model:
    """
    Build a freshly initialised victim model.

    Weights are He-uniform from ``numpy.random.default_rng(seed)`` drawn in
    layer order; biases start at zero.

    Args:
        arch: One of convnet, mlp, attnnet
        num_classes: Number of output classes K (>= 2)
        seed: Initialisation seed
        input_shape: Image dims (C, H, W)

    Raises:
        ValueError: If the architecture tag is unknown or the input shape unsupported
    """
    validate_arch(arch)
    validate_seed(seed)
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    input_shape = tuple(int(d) for d in input_shape)  # type: ignore[assignment]
    if len(input_shape) != 3 or min(input_shape) < 1:
        raise ValueError(f"input_shape must be (C, H, W), got {input_shape}")
    rng = np.random.default_rng(seed)
    layers, head = _BUILDERS[arch](input_shape, num_classes, rng)
    model = Model(arch, layers, head, input_shape, num_classes, seed)
    logger.debug(f"Built {model} with {model.num_parameters()} parameters")
    return model


def argmax_class(logits: Sequence[float]) -> int:
    """Index of the largest logit; ties go to the lowest index."""
    return int(np.argmax(np.asarray(logits, dtype=np.float64)))


def predict(m: Model, x: Union[Tensor, np.ndarray]) -> Union[int, np.ndarray]:
    """Class index for one image [C, H, W], or an array of indices for a batch."""
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if data.ndim == 3:
        return argmax_class(m.predict_logits(data)[0])
    return m.predict_batch(data)
