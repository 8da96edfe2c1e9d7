"""Finite-difference verification of the analytic gradient.

The check compares the analytic directional derivative g . v against the
central difference (L(w + h v) - L(w - h v)) / 2h along random unit
directions, on reduced architectures small enough for the difference
quotient to be trustworthy.  This is the independent oracle for the
reverse-mode pass; the CLI exposes it as ``fedwatt gradcheck``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import derive_rng
from .core import Batch, ModelSpec, init_params, grad, loss

__all__ = ["directional_error", "gradient_check_suite", "GradCheckResult"]

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


def directional_error(spec, w, batch, direction, step=DEFAULT_STEP) -> float:
    """Relative disagreement between analytic and central-difference slopes."""
    v = np.asarray(direction, dtype=np.float64)
    v = v / np.linalg.norm(v)
    analytic = float(grad(spec, w, batch) @ v)
    plus = loss(spec, w + step * v, batch)
    minus = loss(spec, w - step * v, batch)
    numeric = (plus - minus) / (2.0 * step)
    scale = max(abs(analytic), abs(numeric), 1e-12)
    return abs(analytic - numeric) / scale


@dataclass(frozen=True)
class GradCheckResult:
    max_relative_error: float
    trials: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def gradient_check_suite(
    n_trials: int = 20,
    seed: int = 0,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradCheckResult:
    """Run ``n_trials`` random (spec, w, batch) checks on reduced architectures."""
    rng = derive_rng(seed, "gradcheck")
    worst = 0.0
    for trial in range(n_trials):
        spec = ModelSpec(
            input_len=2 * int(rng.integers(1, 5)),
            output_len=int(rng.integers(1, 3)),
            recurrent_hidden=int(rng.integers(1, 5)),
            dense_widths=tuple(
                int(rng.integers(1, 6)) for _ in range(int(rng.integers(0, 3)))
            ),
            leaky_slope=0.01,
        )
        w = init_params(spec, seed=int(rng.integers(0, 2**31)))
        n_rows = int(rng.integers(1, 6))
        batch = Batch(
            inputs=rng.uniform(0.0, 1.0, (n_rows, spec.input_len)),
            targets=rng.uniform(0.0, 1.0, (n_rows, spec.output_len)),
        )
        direction = rng.normal(size=len(w))
        err = directional_error(spec, w, batch, direction, step=step)
        worst = max(worst, err)
    return GradCheckResult(max_relative_error=worst, trials=n_trials, tolerance=tolerance)
