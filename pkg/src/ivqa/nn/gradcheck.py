"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from ..errors import EvaluationError
from .autograd import no_grad
from .params import ParamSet


def grad_check(loss_fn, params: ParamSet, eps: float = 1e-5) -> float:
    """Compare backward() gradients against central differences.

    `loss_fn` must be a deterministic scalar function of the current
    parameter values (re-seed any internal randomness per call). Returns
    max over all trainable entries of
    |analytic - numeric| / max(1, |analytic| + |numeric|).
    """
    params.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.data):
        raise EvaluationError("loss is not finite at the evaluation point")
    loss.backward()
    analytic = {}
    for name, p in params.trainable_items():
        analytic[name] = np.zeros_like(p.data) if p.grad is None else p.grad.copy()

    worst = 0.0
    for name, p in params.trainable_items():
        flat = p.data.reshape(-1)
        ref = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            with no_grad():
                flat[i] = orig + eps
                hi = loss_fn().item()
                flat[i] = orig - eps
                lo = loss_fn().item()
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise EvaluationError(f"non-finite loss while perturbing {name}[{i}]")
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(ref[i] - numeric) / max(1.0, abs(ref[i]) + abs(numeric))
            worst = max(worst, err)
    return worst
