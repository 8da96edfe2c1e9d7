"""Event detection and disaggregation quality metrics.

All metrics operate on normalized signals.  An appliance is counted ON at a
timestep when its predicted (or true) power is strictly greater than the
appliance's threshold; the default threshold is a fixed fraction of the
appliance's maximum power over the training split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import TaskDataset
from .errors import ValidationError

__all__ = [
    "DEFAULT_THRESHOLD_FRACTION",
    "ThresholdSpec",
    "MetricsReport",
    "detect_on_off",
    "mae",
    "sae",
    "f1_accuracy",
    "appliance_report",
    "average_metrics",
]

DEFAULT_THRESHOLD_FRACTION = 0.1


@dataclass(frozen=True)
class ThresholdSpec:
    """One ON/OFF detection threshold per appliance, in normalized units."""

    appliance_names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "appliance_names", tuple(self.appliance_names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.appliance_names:
            raise ValidationError("threshold spec needs at least one appliance")
        if len(set(self.appliance_names)) != len(self.appliance_names):
            raise ValidationError(f"duplicate appliance names: {self.appliance_names}")
        if len(self.values) != len(self.appliance_names):
            raise ValidationError(
                f"{len(self.values)} thresholds for {len(self.appliance_names)} appliances"
            )
        for name, v in zip(self.appliance_names, self.values):
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"threshold for {name!r} must be finite and >= 0")

    @classmethod
    def from_training(
        cls,
        tasks: Sequence[TaskDataset],
        fraction: float = DEFAULT_THRESHOLD_FRACTION,
        overrides: Mapping[str, float] | None = None,
    ) -> "ThresholdSpec":
        """Derive thresholds as ``fraction`` of each appliance's train-split peak.

        All tasks must share the same appliance names; the peak is taken over
        the union of their train splits.  ``overrides`` replaces the derived
        value for the named appliances.
        """
        if not tasks:
            raise ValidationError("need at least one task to derive thresholds")
        if not np.isfinite(fraction) or fraction < 0:
            raise ValidationError("threshold fraction must be finite and >= 0")
        names = tasks[0].appliance_names
        for t in tasks:
            if t.appliance_names != names:
                raise ValidationError(
                    f"task {t.task_id!r} appliance names {t.appliance_names} "
                    f"differ from {names}"
                )
        peaks = np.zeros(len(names))
        for t in tasks:
            for s in t.train:
                np.maximum(peaks, s.target, out=peaks)
        values = [fraction * p for p in peaks]
        if overrides:
            unknown = set(overrides) - set(names)
            if unknown:
                raise ValidationError(f"threshold overrides for unknown appliances: {sorted(unknown)}")
            values = [
                float(overrides.get(name, v)) for name, v in zip(names, values)
            ]
        return cls(appliance_names=names, values=tuple(values))

    def for_appliance(self, name: str) -> float:
        try:
            return self.values[self.appliance_names.index(name)]
        except ValueError:
            raise ValidationError(f"no threshold for appliance {name!r}") from None


def detect_on_off(predictions: np.ndarray, thresholds: ThresholdSpec) -> np.ndarray:
    """ON/OFF state matrix: ON iff the value strictly exceeds the threshold."""
    pred = np.asarray(predictions, dtype=np.float64)
    if pred.ndim != 2:
        raise ValidationError(f"predictions must be 2-D (steps, appliances), got {pred.ndim}-D")
    if pred.shape[1] != len(thresholds.appliance_names):
        raise ValidationError(
            f"predictions have {pred.shape[1]} columns but "
            f"{len(thresholds.appliance_names)} thresholds are defined"
        )
    return pred > np.asarray(thresholds.values)[None, :]


def _as_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.ndim != 1 or t.ndim != 1:
        raise ValidationError("metric inputs must be 1-D vectors")
    if len(p) != len(t):
        raise ValidationError(f"length mismatch: {len(p)} predictions vs {len(t)} truths")
    if len(p) == 0:
        raise ValidationError("metric inputs must be non-empty")
    return p, t


def mae(pred, truth) -> float:
    """Mean absolute error (1/L) * sum |pred - truth|."""
    p, t = _as_pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def sae(pred, truth) -> float:
    """Signal aggregate error |E_pred - E_true| / max(E_true, E_pred).

    Both energy sums zero is defined as 0 (a perfectly predicted always-off
    appliance).  Negative energy sums are rejected; power traces are expected
    to be non-negative.
    """
    p, t = _as_pair(pred, truth)
    e_pred = float(np.sum(p))
    e_true = float(np.sum(t))
    hi = max(e_pred, e_true)
    if hi == 0.0 and min(e_pred, e_true) == 0.0:
        return 0.0
    if hi <= 0.0:
        raise ValidationError("energy sums must not be negative")
    return abs(e_pred - e_true) / hi


def f1_accuracy(pred_states, true_states) -> tuple[float, float]:
    """F1 score and per-timestep classification accuracy from ON/OFF states.

    F1 is defined as 0 when there are no true or predicted positives.
    """
    p = np.asarray(pred_states)
    t = np.asarray(true_states)
    if p.ndim != 1 or t.ndim != 1:
        raise ValidationError("state inputs must be 1-D vectors")
    if len(p) != len(t):
        raise ValidationError(f"length mismatch: {len(p)} predictions vs {len(t)} truths")
    if len(p) == 0:
        raise ValidationError("state inputs must be non-empty")
    p = p.astype(bool)
    t = t.astype(bool)
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    tn = int(np.sum(~p & ~t))
    denom = 2 * tp + fp + fn
    f1 = 2.0 * tp / denom if denom else 0.0
    accuracy = (tp + tn) / len(p)
    return f1, accuracy


@dataclass(frozen=True)
class MetricsReport:
    """Metrics for one (algorithm, task, appliance) triple."""

    algorithm: str
    task_id: str
    appliance: str
    f1: float
    accuracy: float
    mae: float
    sae: float
    tp: int
    fp: int
    fn: int
    tn: int
    sample_count: int
    predicted_energy: float
    actual_energy: float
    seed: int
    config_hash: str

    def __post_init__(self):
        if not 0.0 <= self.f1 <= 1.0:
            raise ValidationError(f"f1 {self.f1} outside [0, 1]")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.mae < 0:
            raise ValidationError(f"mae {self.mae} is negative")
        if not 0.0 <= self.sae <= 1.0:
            raise ValidationError(f"sae {self.sae} outside [0, 1]")
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("state counts must be non-negative")
        if self.tp + self.fp + self.fn + self.tn != self.sample_count:
            raise ValidationError(
                f"state counts sum to {self.tp + self.fp + self.fn + self.tn}, "
                f"expected {self.sample_count}"
            )


def appliance_report(
    *,
    algorithm: str,
    task_id: str,
    appliance: str,
    pred: np.ndarray,
    truth: np.ndarray,
    threshold: float,
    seed: int,
    config_hash: str,
) -> MetricsReport:
    """Assemble the full report row for one appliance's prediction trace."""
    p, t = _as_pair(pred, truth)
    pred_on = p > threshold
    true_on = t > threshold
    tp = int(np.sum(pred_on & true_on))
    fp = int(np.sum(pred_on & ~true_on))
    fn = int(np.sum(~pred_on & true_on))
    tn = int(np.sum(~pred_on & ~true_on))
    f1, accuracy = f1_accuracy(pred_on, true_on)
    return MetricsReport(
        algorithm=algorithm,
        task_id=task_id,
        appliance=appliance,
        f1=f1,
        accuracy=accuracy,
        mae=mae(p, t),
        sae=sae(p, t),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        sample_count=len(p),
        predicted_energy=float(np.sum(p)),
        actual_energy=float(np.sum(t)),
        seed=seed,
        config_hash=config_hash,
    )


def average_metrics(reports: Sequence[MetricsReport]) -> dict[str, dict[str, float]]:
    """Per-algorithm means of the four metrics, keyed by algorithm name."""
    grouped: dict[str, list[MetricsReport]] = {}
    for r in reports:
        grouped.setdefault(r.algorithm, []).append(r)
    out = {}
    for alg in sorted(grouped):
        rows = grouped[alg]
        out[alg] = {
            "f1": float(np.mean([r.f1 for r in rows])),
            "accuracy": float(np.mean([r.accuracy for r in rows])),
            "mae": float(np.mean([r.mae for r in rows])),
            "sae": float(np.mean([r.sae for r in rows])),
            "rows": len(rows),
        }
    return out
