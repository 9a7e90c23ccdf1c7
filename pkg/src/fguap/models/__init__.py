"""Victim architectures and checkpoints."""

from .checkpoint import CHECKPOINT_MAGIC, load_checkpoint, save_checkpoint
from .layers import Conv2d, Flatten, Layer, Linear, MaxPool2d, MeanPool, PatchEmbed, ReLU, SelfAttention
from .networks import FEATURE_DIM, Model, argmax_class, build, predict

__all__ = [
    "Model",
    "build",
    "predict",
    "argmax_class",
    "FEATURE_DIM",
    "Layer",
    "Conv2d",
    "Linear",
    "ReLU",
    "MaxPool2d",
    "Flatten",
    "MeanPool",
    "PatchEmbed",
    "SelfAttention",
    "CHECKPOINT_MAGIC",
    "save_checkpoint",
    "load_checkpoint",
]
