"""Parameter checkpoint files: spec header + flat vector, exact round trip."""

from __future__ import annotations

import os

import numpy as np

from ..errors import ValidationError
from .core import ModelSpec, check_params

__all__ = ["save_checkpoint", "load_checkpoint"]

_FORMAT = "fedwatt-checkpoint"
_VERSION = 1


def save_checkpoint(path: str | os.PathLike, spec: ModelSpec, w: np.ndarray) -> None:
    w = check_params(spec, w)
    np.savez(
        path,
        format=_FORMAT,
        version=_VERSION,
        input_len=spec.input_len,
        output_len=spec.output_len,
        recurrent_hidden=spec.recurrent_hidden,
        dense_widths=np.asarray(spec.dense_widths, dtype=np.int64),
        leaky_slope=spec.leaky_slope,
        values=w,
    )


def load_checkpoint(path: str | os.PathLike) -> tuple[ModelSpec, np.ndarray]:
    if not os.path.exists(path):
        raise ValidationError(f"no such checkpoint: {path}")
    with np.load(path) as data:
        try:
            fmt = str(data["format"])
            version = int(data["version"])
        except KeyError:
            raise ValidationError(f"{path}: not a fedwatt checkpoint") from None
        if fmt != _FORMAT:
            raise ValidationError(f"{path}: unknown format {fmt!r}")
        if version != _VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        spec = ModelSpec(
            input_len=int(data["input_len"]),
            output_len=int(data["output_len"]),
            recurrent_hidden=int(data["recurrent_hidden"]),
            dense_widths=tuple(int(x) for x in data["dense_widths"]),
            leaky_slope=float(data["leaky_slope"]),
        )
        w = check_params(spec, data["values"])
    return spec, w
