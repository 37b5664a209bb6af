"""Reverse-mode automatic differentiation over float64 numpy arrays.

A ``Tensor`` wraps an ndarray and records the operations applied to it so
that ``backward()`` on a scalar result accumulates gradients into every
reachable tensor with ``requires_grad``. Only the operations this project
needs are implemented; all of them keep 64-bit precision and are
numerically stabilized where the naive formula would overflow.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError

_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables graph construction inside its body."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


def _stable_sigmoid(x):
    # evaluate both branches on clipped inputs so np.where never sees inf
    xp = np.clip(x, 0.0, None)
    xn = np.clip(x, None, 0.0)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-xp)), np.exp(xn) / (1.0 + np.exp(xn)))


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._grad_fn = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data.item())

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction ------------------------------------------------

    def backward(self):
        """Accumulate gradients of this scalar into all reachable tensors."""
        if self.data.size != 1:
            raise DimensionError("backward() requires a scalar tensor")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p._grad_fn is not None or p.requires_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._grad_fn is None:
                continue
            grads = node._grad_fn(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                g = _unbroadcast(np.asarray(g), parent.data.shape)
                parent.grad = g if parent.grad is None else parent.grad + g

    # -- operators ----------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, -_as_tensor(other))

    def __rsub__(self, other):
        return add(_as_tensor(other), -self)

    def __truediv__(self, other):
        return div(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self):
        return mean(self)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, grad_fn):
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._grad_fn = grad_fn
    return out


# -- elementwise arithmetic ---------------------------------------------------


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    return _node(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def div(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    return _node(a.data / b.data, (a, b),
                 lambda g: (g / b.data, -g * a.data / (b.data * b.data)))


def power(a, p: float):
    a = _as_tensor(a)
    return _node(a.data ** p, (a,), lambda g: (g * p * a.data ** (p - 1),))


# -- reductions ---------------------------------------------------------------


def tsum(a, axis=None):
    a = _as_tensor(a)
    out = a.data.sum(axis=axis)

    def bw(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape),)

    return _node(out, (a,), bw)


def mean(a):
    a = _as_tensor(a)
    n = a.data.size
    return _node(a.data.mean(), (a,), lambda g: (np.broadcast_to(g / n, a.data.shape),))


# -- matrix product -----------------------------------------------------------


def matmul(a, b):
    """Product of a 1-D or 2-D tensor with a 2-D weight matrix."""
    a, b = _as_tensor(a), _as_tensor(b)
    if b.data.ndim != 2 or a.data.ndim not in (1, 2):
        raise DimensionError(f"matmul supports (B,d)@(d,k) or (d,)@(d,k); got {a.shape}@{b.shape}")
    if a.data.shape[-1] != b.data.shape[0]:
        raise DimensionError(f"matmul inner dims differ: {a.shape} vs {b.shape}")
    out = a.data @ b.data

    def bw(g):
        ga = g @ b.data.T
        if a.data.ndim == 1:
            gb = np.outer(a.data, g)
        else:
            gb = a.data.T @ g
        return (ga, gb)

    return _node(out, (a, b), bw)


# -- nonlinearities -----------------------------------------------------------


def exp(a):
    a = _as_tensor(a)
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def log(a):
    a = _as_tensor(a)
    return _node(np.log(a.data), (a,), lambda g: (g / a.data,))


def tanh(a):
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a):
    a = _as_tensor(a)
    out = _stable_sigmoid(a.data)
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a):
    """Elementwise ln(1 + e^x), safe for large |x|; output strictly positive."""
    a = _as_tensor(a)
    out = np.logaddexp(0.0, a.data)
    return _node(out, (a,), lambda g: (g * _stable_sigmoid(a.data),))


def softmax(a, axis=-1):
    """Shift-invariant softmax along `axis`; rows sum to 1 within 1e-12."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return _node(out, (a,), bw)


def log_softmax(a, axis=-1):
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def bw(g):
        p = np.exp(out)
        return (g - p * g.sum(axis=axis, keepdims=True),)

    return _node(out, (a,), bw)


# -- structural ops -----------------------------------------------------------


def narrow(a, start: int, size: int):
    """Contiguous slice [start, start+size) along the last axis."""
    a = _as_tensor(a)
    out = a.data[..., start:start + size]

    def bw(g):
        full = np.zeros_like(a.data)
        full[..., start:start + size] = g
        return (full,)

    return _node(out, (a,), bw)


def embedding(table, indices):
    """Select rows `indices` (int array or scalar) from a 2-D table."""
    table = _as_tensor(table)
    idx = np.asarray(indices)
    out = table.data[idx]

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    return _node(out, (table,), bw)


def pick(a, indices):
    """Per-row selection along the last axis: out[b] = a[b, indices[b]]."""
    a = _as_tensor(a)
    idx = np.asarray(indices)
    if a.data.ndim == 1:
        out = a.data[idx]
    else:
        rows = np.arange(a.data.shape[0])
        out = a.data[rows, idx]

    def bw(g):
        full = np.zeros_like(a.data)
        if a.data.ndim == 1:
            np.add.at(full, idx, g)
        else:
            np.add.at(full, (np.arange(a.data.shape[0]), idx), g)
        return (full,)

    return _node(out, (a,), bw)
