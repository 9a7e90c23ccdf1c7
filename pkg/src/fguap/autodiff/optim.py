"""Adam optimiser for tensors held outside the tape."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from ..exceptions import ShapeMismatchError
from .tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moment accumulators for one optimised tensor."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(
        cls,
        param: Tensor,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> "AdamState":
        return cls(np.zeros(param.dims), np.zeros(param.dims), 0, beta1, beta2, eps)

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.m.shape


def adam_step(param: Tensor, grad: Tensor, state: AdamState, lr: float) -> Tensor:
    """
    One bias-corrected Adam descent step.

    Args:
        param: Current value
        grad: Gradient of the minimised objective at ``param``
        state: Moment accumulators; updated in place and ``step`` incremented
        lr: Step size (> 0)

    Returns:
        New parameter tensor with the same ``requires_grad`` flag as ``param``

    Raises:
        ShapeMismatchError: If grad or state is shaped differently from param
        ValueError: If lr is not positive
    """
    if grad.dims != param.dims:
        raise ShapeMismatchError("adam_step", param.dims, grad.dims, "gradient")
    if state.m.shape != param.dims or state.v.shape != param.dims:
        raise ShapeMismatchError("adam_step", param.dims, state.m.shape, "optimizer state")
    if lr <= 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")

    g = grad.data
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    updated = param.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return Tensor(updated, requires_grad=param.requires_grad)


@dataclass
class Adam:
    """Adam over a dictionary of named parameters with optional L2 weight decay."""

    lr: float = 1e-3
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: Dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")

    def step(
        self,
        params: Dict[str, Tensor],
        grads: Iterable[Tuple[str, Tensor]],
    ) -> Dict[str, Tensor]:
        """Return updated copies of ``params`` for every (name, grad) pair."""
        updated = dict(params)
        for name, grad in grads:
            param = params[name]
            state: Optional[AdamState] = self.states.get(name)
            if state is None:
                state = AdamState.zeros_like(param, self.beta1, self.beta2, self.eps)
                self.states[name] = state
            if self.weight_decay:
                grad = Tensor(grad.data + self.weight_decay * param.data)
            updated[name] = adam_step(param, grad, state, self.lr)
        return updated
