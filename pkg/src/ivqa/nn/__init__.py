"""Differentiable computation kernel: tensors, LSTM cell, optimizers, RNG."""

from .autograd import (
    Tensor,
    add,
    div,
    embedding,
    exp,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    narrow,
    no_grad,
    pick,
    power,
    sigmoid,
    softmax,
    softplus,
    tanh,
    tsum,
)
from .checkpoint import FORMAT_VERSION, MAGIC, load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .lstm import add_lstm_params, kl_standard_normal, lstm_step, reparameterize
from .optim import OptimState, clip_global_norm, global_grad_norm, optimizer_step
from .params import ParamSet, uniform_init
from .rng import Rng

__all__ = [
    "Tensor", "add", "div", "embedding", "exp", "log", "log_softmax", "matmul",
    "mean", "mul", "narrow", "no_grad", "pick", "power", "sigmoid", "softmax",
    "softplus", "tanh", "tsum",
    "FORMAT_VERSION", "MAGIC", "load_checkpoint", "save_checkpoint",
    "grad_check",
    "add_lstm_params", "kl_standard_normal", "lstm_step", "reparameterize",
    "OptimState", "clip_global_norm", "global_grad_norm", "optimizer_step",
    "ParamSet", "uniform_init",
    "Rng",
]
