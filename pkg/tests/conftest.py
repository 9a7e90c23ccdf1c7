"""Shared fixtures: tiny datasets and models that train in seconds."""

import numpy as np
import pytest

from fguap.core.trainer import TrainConfig, train
from fguap.data.synthetic import generate_synthetic
from fguap.models.networks import build

TINY_CLASSES = 3
TINY_SIDE = 8
TINY_AMPLITUDE = 0.15


@pytest.fixture(scope="session")
def tiny_splits():
    """3 classes, 8x8 images, 12 train / 4 test per class, strong class patterns."""
    return generate_synthetic(
        seed=0,
        num_classes=TINY_CLASSES,
        per_class_train=12,
        per_class_test=4,
        side=TINY_SIDE,
        amplitude=TINY_AMPLITUDE,
    )


@pytest.fixture(scope="session")
def tiny_train(tiny_splits):
    return tiny_splits[0]


@pytest.fixture(scope="session")
def tiny_test(tiny_splits):
    return tiny_splits[1]


@pytest.fixture
def tiny_model():
    """Untrained 8x8 convnet (fresh per test; models are mutable)."""
    return build("convnet", TINY_CLASSES, seed=0, input_shape=(1, TINY_SIDE, TINY_SIDE))


@pytest.fixture(scope="session")
def tiny_trained_mlp(tiny_train):
    """MLP trained on the tiny split until it separates the classes; do not mutate."""
    model = build("mlp", TINY_CLASSES, seed=0, input_shape=(1, TINY_SIDE, TINY_SIDE))
    return train(model, tiny_train, TrainConfig(epochs=12, batch_size=8, lr=3e-3)).model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
