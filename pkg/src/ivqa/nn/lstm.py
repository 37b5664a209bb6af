"""Single LSTM cell plus the small distributional ops used by the models."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, DomainError
from . import autograd as ag
from .autograd import Tensor
from .params import ParamSet, uniform_init
from .rng import Rng


def add_lstm_params(params: ParamSet, rng: Rng, d_in: int, d_h: int, prefix: str) -> None:
    """Register fused-gate LSTM weights (gate order i, f, g, o).

    Forget-gate bias starts at 1 so freshly initialized cells retain state.
    """
    params.add(prefix + ".w_x", uniform_init(rng, (d_in, 4 * d_h), d_in))
    params.add(prefix + ".w_h", uniform_init(rng, (d_h, 4 * d_h), d_h))
    bias = np.zeros(4 * d_h)
    bias[d_h:2 * d_h] = 1.0
    params.add(prefix + ".b", bias)


def lstm_step(x: Tensor, h: Tensor, c: Tensor, w: ParamSet, prefix: str = "lstm"):
    """One LSTM state update; accepts a single vector or a batch of rows.

    Gates i/f/o are sigmoid, the candidate is tanh:
    c' = f*c + i*g and h' = o*tanh(c').
    """
    w_x, w_h, b = w[prefix + ".w_x"], w[prefix + ".w_h"], w[prefix + ".b"]
    d_h = w_h.data.shape[0]
    if x.data.shape[-1] != w_x.data.shape[0] or h.data.shape[-1] != d_h or c.data.shape[-1] != d_h:
        raise DimensionError(
            f"lstm_step shapes inconsistent: x{x.shape} h{h.shape} c{c.shape} "
            f"w_x{w_x.shape} w_h{w_h.shape}")
    a = ag.matmul(x, w_x) + ag.matmul(h, w_h) + b
    i = ag.sigmoid(ag.narrow(a, 0, d_h))
    f = ag.sigmoid(ag.narrow(a, d_h, d_h))
    g = ag.tanh(ag.narrow(a, 2 * d_h, d_h))
    o = ag.sigmoid(ag.narrow(a, 3 * d_h, d_h))
    c_next = f * c + i * g
    h_next = o * ag.tanh(c_next)
    return h_next, c_next


def kl_standard_normal(mu: Tensor, sigma: Tensor) -> Tensor:
    """KL( N(mu, diag(sigma^2)) || N(0, I) ) in closed form.

    Returns sum_i 0.5*(mu_i^2 + sigma_i^2 - 1 - ln sigma_i^2); non-negative,
    zero exactly when mu=0 and sigma=1.
    """
    if np.any(sigma.data <= 0):
        raise DomainError("kl_standard_normal requires strictly positive sigma")
    var = sigma * sigma
    per_dim = mu * mu + var - 1.0 - ag.log(var)
    return ag.tsum(per_dim) * 0.5


def reparameterize(mu: Tensor, sigma: Tensor, rng: Rng) -> Tensor:
    """z = mu + sigma * u with u ~ N(0,1); u is constant for the gradient."""
    u = rng.normal(mu.data.shape)
    return mu + sigma * Tensor(u)
