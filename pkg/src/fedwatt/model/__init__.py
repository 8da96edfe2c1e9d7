"""Seq2point model: spec, flat parameters, forward/loss/gradient, checkpoints.

The recurrence kernels come from a compiled extension when available and from
a numpy fallback otherwise; :func:`backend_name` reports which one is active.
"""

from ._backend import backend_name
from .checkpoint import load_checkpoint, save_checkpoint
from .core import (
    Batch,
    ModelSpec,
    check_params,
    forward,
    grad,
    init_params,
    loss,
    loss_and_grad,
    param_count,
)
from .gradcheck import GradCheckResult, directional_error, gradient_check_suite

__all__ = [
    "Batch",
    "ModelSpec",
    "GradCheckResult",
    "backend_name",
    "check_params",
    "directional_error",
    "forward",
    "grad",
    "gradient_check_suite",
    "init_params",
    "load_checkpoint",
    "loss",
    "loss_and_grad",
    "param_count",
    "save_checkpoint",
]
