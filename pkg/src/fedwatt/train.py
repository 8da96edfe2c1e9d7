"""Local update loop: E epochs of mini-batch SGD on one dataset.

This is the single training primitive shared by every regime — federated
clients, meta-learning task adaptation, fine-tuning, and the centralized or
local baselines all call :func:`local_update` with different data and
configs.  The input parameter vector is never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import model
from .data import Seq2PointSample
from .errors import TrainingDivergedError, ValidationError
from .seeding import derive_rng

__all__ = ["LocalTrainConfig", "local_update", "evaluate"]

_EVAL_CHUNK = 1024


@dataclass(frozen=True)
class LocalTrainConfig:
    """Step size, epoch count, batch size, and shuffle seed for one update loop."""

    gamma: float
    epochs: int = 1
    batch_size: int = 64
    shuffle_seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValidationError("gamma must be finite and >= 0")
        if int(self.epochs) < 1:
            raise ValidationError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise ValidationError("batch_size must be >= 1")


def _stack(data: Sequence[Seq2PointSample]) -> tuple[np.ndarray, np.ndarray]:
    if len(data) == 0:
        raise ValidationError("dataset is empty")
    inputs = np.stack([s.input for s in data])
    targets = np.stack([s.target for s in data])
    return inputs, targets


def local_update(
    spec,
    w: np.ndarray,
    data: Sequence[Seq2PointSample],
    cfg: LocalTrainConfig,
) -> np.ndarray:
    """Run ``cfg.epochs`` passes of mini-batch SGD starting from ``w``.

    Each epoch reshuffles with a seed derived from (shuffle_seed, epoch),
    then steps through batches of ``cfg.batch_size`` (the last batch may be
    short).  Returns the updated parameter vector; raises
    TrainingDivergedError as soon as a non-finite loss or gradient appears.
    """
    inputs, targets = _stack(data)
    n = inputs.shape[0]
    w = np.array(w, dtype=np.float64)
    step = 0
    for epoch in range(int(cfg.epochs)):
        order = derive_rng(cfg.shuffle_seed, "shuffle", epoch).permutation(n)
        for batch_index, start in enumerate(range(0, n, int(cfg.batch_size))):
            idx = order[start : start + int(cfg.batch_size)]
            batch = model.Batch(inputs=inputs[idx], targets=targets[idx])
            batch_loss, g = model.loss_and_grad(spec, w, batch)
            if not np.isfinite(batch_loss) or not np.all(np.isfinite(g)):
                raise TrainingDivergedError(
                    f"non-finite loss at step {step} "
                    f"(epoch {epoch}, batch {batch_index}); reduce gamma"
                )
            w = w - cfg.gamma * g
            step += 1
    return w


def evaluate(spec, w: np.ndarray, data: Sequence[Seq2PointSample]) -> float:
    """Mean MSE of the model over all samples; no parameter change."""
    inputs, targets = _stack(data)
    n = inputs.shape[0]
    total = 0.0
    for start in range(0, n, _EVAL_CHUNK):
        chunk = model.Batch(
            inputs=inputs[start : start + _EVAL_CHUNK],
            targets=targets[start : start + _EVAL_CHUNK],
        )
        total += model.loss(spec, w, chunk) * len(chunk)
    return total / n
