"""Named parameter containers for models."""

from __future__ import annotations

import numpy as np

from ..errors import StateError
from .autograd import Tensor
from .rng import Rng


class ParamSet:
    """Ordered map of unique names to parameter tensors.

    Each entry is trainable (``requires_grad``) or frozen. A version
    counter is bumped on every optimizer update so that on-policy
    consumers can detect stale sampling.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self.version = 0

    def add(self, name: str, data, trainable: bool = True) -> Tensor:
        if name in self._params:
            raise StateError(f"duplicate parameter name: {name}")
        t = Tensor(np.asarray(data, dtype=np.float64), requires_grad=trainable)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def trainable_items(self):
        return [(n, p) for n, p in self._params.items() if p.requires_grad]

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def n_values(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def copy_values(self) -> dict[str, np.ndarray]:
        return {n: p.data.copy() for n, p in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for n, v in values.items():
            p = self._params[n]
            if p.data.shape != v.shape:
                raise StateError(f"shape mismatch for {n}: {p.data.shape} vs {v.shape}")
            p.data = v.astype(np.float64).copy()


def uniform_init(rng: Rng, shape, fan_in: int) -> np.ndarray:
    """Uniform in [-s, s] with s = 1/sqrt(fan_in)."""
    s = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-s, s, shape)
