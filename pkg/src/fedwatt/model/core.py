"""The seq2point regressor: spec, parameter layout, forward, loss, gradient.

The network maps a length-2T window of the normalized aggregate signal to the
A-vector of appliance powers at the window midpoint: a gated recurrent layer
consumes the window one scalar per step, its final hidden state feeds a dense
stack with LeakyReLU, and a linear head produces the outputs.  All parameters
live in one flat float64 vector so that averaging and meta-updates are plain
vector arithmetic.

``forward``/``loss``/``grad``/``loss_and_grad``/``init_params`` dispatch on
the spec type, so test suites can register lightweight surrogate models with
closed-form gradients next to the real network.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from ..errors import ValidationError
from ..seeding import derive_rng
from ._backend import kernels

__all__ = [
    "ModelSpec",
    "Batch",
    "param_count",
    "init_params",
    "forward",
    "loss",
    "grad",
    "loss_and_grad",
    "check_params",
]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description; fixes the parameter count d.

    ``input_len`` is the window width 2T, ``output_len`` the appliance count.
    Defaults mirror the reference configuration: hidden size 64, one dense
    layer of width 480, LeakyReLU slope 0.01.
    """

    input_len: int
    output_len: int
    recurrent_hidden: int = 64
    dense_widths: tuple[int, ...] = (480,)
    leaky_slope: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "dense_widths", tuple(int(w) for w in self.dense_widths))
        if self.input_len < 2 or self.input_len % 2:
            raise ValidationError("input_len must be an even integer >= 2")
        if self.output_len < 1:
            raise ValidationError("output_len must be >= 1")
        if self.recurrent_hidden < 1:
            raise ValidationError("recurrent_hidden must be >= 1")
        if any(w < 1 for w in self.dense_widths):
            raise ValidationError("dense widths must all be >= 1")
        if not np.isfinite(self.leaky_slope) or self.leaky_slope < 0:
            raise ValidationError("leaky_slope must be finite and >= 0")


@dataclass(frozen=True)
class Batch:
    """A stacked minibatch: inputs (n, 2T) and targets (n, A)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise ValidationError("batch inputs and targets must be 2-D")
        if inputs.shape[0] != targets.shape[0]:
            raise ValidationError(
                f"batch row counts differ: {inputs.shape[0]} vs {targets.shape[0]}"
            )
        if inputs.shape[0] == 0:
            raise ValidationError("batch must contain at least one row")
        if not np.all(np.isfinite(inputs)) or not np.all(np.isfinite(targets)):
            raise ValidationError("batch contains non-finite values")

    @classmethod
    def from_samples(cls, samples) -> "Batch":
        if not samples:
            raise ValidationError("cannot build a batch from zero samples")
        return cls(
            inputs=np.stack([s.input for s in samples]),
            targets=np.stack([s.target for s in samples]),
        )

    def __len__(self) -> int:
        return self.inputs.shape[0]


# --- flat parameter layout ------------------------------------------------
#
#   [ wx (3*H) | u (3*H*H) | b (3*H) | per dense layer: W (out*in), b (out)
#     | head W (A*last), head b (A) ]
#
# Gate order within the leading-3 axes is [update, reset, candidate].


def _layer_dims(spec: ModelSpec) -> list[tuple[int, int]]:
    dims = []
    prev = spec.recurrent_hidden
    for w in spec.dense_widths:
        dims.append((w, prev))
        prev = w
    dims.append((spec.output_len, prev))
    return dims


@singledispatch
def param_count(spec) -> int:
    """Total number of parameters d for a spec."""
    raise TypeError(f"no model registered for spec type {type(spec).__name__}")


@param_count.register
def _(spec: ModelSpec) -> int:
    h = spec.recurrent_hidden
    count = 3 * h + 3 * h * h + 3 * h
    for out, inp in _layer_dims(spec):
        count += out * inp + out
    return count


def _unflatten(spec: ModelSpec, w: np.ndarray):
    """Views into the flat vector: (wx, u, b, [(W, b) per dense/head layer])."""
    h = spec.recurrent_hidden
    pos = 0

    def take(count, shape):
        nonlocal pos
        view = w[pos : pos + count].reshape(shape)
        pos += count
        return view

    wx = take(3 * h, (3, h))
    u = take(3 * h * h, (3, h, h))
    b = take(3 * h, (3, h))
    layers = []
    for out, inp in _layer_dims(spec):
        weight = take(out * inp, (out, inp))
        bias = take(out, (out,))
        layers.append((weight, bias))
    if pos != len(w):
        raise ValidationError(
            f"parameter vector has length {len(w)}, spec requires {param_count(spec)}"
        )
    return wx, u, b, layers


def check_params(spec, w: np.ndarray) -> np.ndarray:
    """Validate and canonicalize a flat parameter vector for the spec."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValidationError("parameter vector must be 1-D")
    d = param_count(spec)
    if len(w) != d:
        raise ValidationError(f"parameter vector has length {len(w)}, expected {d}")
    if not np.all(np.isfinite(w)):
        raise ValidationError("parameter vector contains non-finite entries")
    return w


@singledispatch
def init_params(spec, seed: int) -> np.ndarray:
    raise TypeError(f"no model registered for spec type {type(spec).__name__}")


@init_params.register
def _(spec: ModelSpec, seed: int) -> np.ndarray:
    rng = derive_rng(seed, "model-init")
    w = np.zeros(param_count(spec))
    wx, u, b, layers = _unflatten(spec, w)
    del b  # biases stay zero
    s = 1.0 / np.sqrt(spec.recurrent_hidden + 1)  # cell fan-in: hidden + scalar input
    wx[:] = rng.uniform(-s, s, wx.shape)
    u[:] = rng.uniform(-s, s, u.shape)
    for weight, _bias in layers:
        s = 1.0 / np.sqrt(weight.shape[1])
        weight[:] = rng.uniform(-s, s, weight.shape)
    return w


def _dense_forward(spec: ModelSpec, layers, hidden_out, want_cache: bool):
    activations = [hidden_out]
    pre = []
    out = hidden_out
    for weight, bias in layers[:-1]:
        a = out @ weight.T + bias
        out = np.where(a > 0, a, spec.leaky_slope * a)
        if want_cache:
            pre.append(a)
            activations.append(out)
    head_w, head_b = layers[-1]
    pred = out @ head_w.T + head_b
    return pred, (activations, pre)


@singledispatch
def forward(spec, w: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    raise TypeError(f"no model registered for spec type {type(spec).__name__}")


@forward.register
def _(spec: ModelSpec, w: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    w = check_params(spec, w)
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_len:
        raise ValidationError(
            f"inputs must have shape (n, {spec.input_len}), got {inputs.shape}"
        )
    wx, u, b, layers = _unflatten(spec, w)
    hidden = kernels.gru_forward(wx, u, b, inputs)
    pred, _ = _dense_forward(spec, layers, hidden, want_cache=False)
    return pred


@singledispatch
def loss(spec, w: np.ndarray, batch: Batch) -> float:
    raise TypeError(f"no model registered for spec type {type(spec).__name__}")


@loss.register
def _(spec: ModelSpec, w: np.ndarray, batch: Batch) -> float:
    pred = forward(spec, w, batch.inputs)
    _check_targets(spec, batch)
    diff = pred - batch.targets
    return float(np.mean(diff * diff))


@singledispatch
def loss_and_grad(spec, w: np.ndarray, batch: Batch) -> tuple[float, np.ndarray]:
    """Default: compose the separately registered loss and grad."""
    return loss(spec, w, batch), grad(spec, w, batch)


@singledispatch
def grad(spec, w: np.ndarray, batch: Batch) -> np.ndarray:
    raise TypeError(f"no model registered for spec type {type(spec).__name__}")


@grad.register
def _(spec: ModelSpec, w: np.ndarray, batch: Batch) -> np.ndarray:
    return _backprop(spec, w, batch)[1]


@loss_and_grad.register
def _(spec: ModelSpec, w: np.ndarray, batch: Batch) -> tuple[float, np.ndarray]:
    return _backprop(spec, w, batch)


def _check_targets(spec: ModelSpec, batch: Batch) -> None:
    if batch.targets.shape[1] != spec.output_len:
        raise ValidationError(
            f"targets must have shape (n, {spec.output_len}), got {batch.targets.shape}"
        )


def _backprop(spec: ModelSpec, w: np.ndarray, batch: Batch) -> tuple[float, np.ndarray]:
    """One reverse-mode pass; returns (mse, flat gradient)."""
    w = check_params(spec, w)
    _check_targets(spec, batch)
    inputs, targets = batch.inputs, batch.targets
    if inputs.shape[1] != spec.input_len:
        raise ValidationError(
            f"inputs must have shape (n, {spec.input_len}), got {inputs.shape}"
        )
    wx, u, b, layers = _unflatten(spec, w)
    hidden, cache = kernels.gru_forward_cached(wx, u, b, inputs)
    pred, (activations, pre) = _dense_forward(spec, layers, hidden, want_cache=True)

    n, a = targets.shape
    diff = pred - targets
    mse = float(np.mean(diff * diff))

    g = np.zeros_like(w)
    g_wx, g_u, g_b, g_layers = _unflatten(spec, g)

    g_out = (2.0 / (n * a)) * diff
    head_w, _ = layers[-1]
    gw, gb = g_layers[-1]
    gw[:] = g_out.T @ activations[-1]
    gb[:] = g_out.sum(axis=0)
    g_act = g_out @ head_w
    for idx in range(len(layers) - 2, -1, -1):
        slope_mask = np.where(pre[idx] > 0, 1.0, spec.leaky_slope)
        g_a = g_act * slope_mask
        weight, _ = layers[idx]
        gw, gb = g_layers[idx]
        gw[:] = g_a.T @ activations[idx]
        gb[:] = g_a.sum(axis=0)
        g_act = g_a @ weight
    k_wx, k_u, k_b = kernels.gru_backward(wx, u, inputs, cache, np.ascontiguousarray(g_act))
    g_wx[:] = k_wx
    g_u[:] = k_u
    g_b[:] = k_b
    return mse, g
