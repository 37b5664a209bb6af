"""Plain SGD and adaptive-moment parameter updates with global norm clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, StateError
from .params import ParamSet


@dataclass
class OptimState:
    """Optimizer hyperparameters and per-parameter moment accumulators."""

    lr: float = 1e-3
    method: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.method not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer method: {self.method}")


def global_grad_norm(params: ParamSet) -> float:
    total = 0.0
    for _, p in params.trainable_items():
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_global_norm(params: ParamSet, max_norm: float = 5.0) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for _, p in params.trainable_items():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def optimizer_step(params: ParamSet, state: OptimState) -> None:
    """Update all trainable parameters in place from their gradients.

    Frozen parameters are untouched; a trainable parameter without a
    gradient is a caller bug and raises StateError.
    """
    trainable = params.trainable_items()
    for name, p in trainable:
        if p.grad is None:
            raise StateError(f"missing gradient for trainable parameter {name}")
        if p.grad.shape != p.data.shape:
            raise StateError(f"gradient shape mismatch for {name}")
    state.step += 1
    if state.method == "sgd":
        for name, p in trainable:
            p.data = p.data - state.lr * p.grad
    else:
        b1, b2 = state.beta1, state.beta2
        bc1 = 1.0 - b1 ** state.step
        bc2 = 1.0 - b2 ** state.step
        for name, p in trainable:
            m = state.m.get(name)
            if m is None:
                m = np.zeros_like(p.data)
                state.v[name] = np.zeros_like(p.data)
            v = state.v[name]
            m = b1 * m + (1.0 - b1) * p.grad
            v = b2 * v + (1.0 - b2) * p.grad * p.grad
            state.m[name] = m
            state.v[name] = v
            p.data = p.data - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    params.version += 1
