"""Household time-series model, normalization, windowing, and splitting.

A household is an aligned set of power channels: one aggregate meter signal
plus one channel per appliance.  Supervised samples pair a fixed-length
window of the normalized aggregate with the appliance vector at the window
midpoint.  Splits are chronological: windows overlap, so a random split would
leak test information into training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "HouseholdSeries",
    "NormalizationSpec",
    "Seq2PointSample",
    "TaskDataset",
    "fit_normalization",
    "windowize",
    "split_dataset",
    "build_task",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class HouseholdSeries:
    """Aligned aggregate and per-appliance power readings for one household.

    Attributes
    ----------
    household_id : str
        Identifier, unique within a dataset.
    timestamps : np.ndarray
        Strictly increasing epoch seconds, int64, one per step.
    aggregate : np.ndarray
        Total meter reading in watts per step.
    appliances : tuple of (name, values) pairs
        Per-appliance power in watts per step; values are non-negative.
    sample_interval : int
        Nominal seconds between consecutive readings.
    """

    household_id: str
    timestamps: np.ndarray
    aggregate: np.ndarray
    appliances: tuple[tuple[str, np.ndarray], ...]
    sample_interval: int

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        agg = np.asarray(self.aggregate, dtype=np.float64)
        apps = tuple(
            (str(name), np.asarray(vals, dtype=np.float64))
            for name, vals in self.appliances
        )
        object.__setattr__(self, "timestamps", _readonly(ts))
        object.__setattr__(self, "aggregate", _readonly(agg))
        object.__setattr__(
            self, "appliances", tuple((n, _readonly(v)) for n, v in apps)
        )
        n = len(self.aggregate)
        if n < 1:
            raise ValidationError("household series must contain at least one step")
        if self.timestamps.shape != (n,):
            raise ValidationError("timestamps and aggregate lengths differ")
        if np.any(np.diff(self.timestamps) <= 0):
            bad = int(np.argmax(np.diff(self.timestamps) <= 0)) + 1
            raise ValidationError(f"timestamps not strictly increasing at index {bad}")
        if len(self.appliances) < 1:
            raise ValidationError("at least one appliance channel is required")
        names = [name for name, _ in self.appliances]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate appliance names: {sorted(names)}")
        if not np.all(np.isfinite(self.aggregate)):
            bad = int(np.argmin(np.isfinite(self.aggregate)))
            raise ValidationError(f"non-finite aggregate value at index {bad}")
        for name, vals in self.appliances:
            if vals.shape != (n,):
                raise ValidationError(f"appliance {name!r} length differs from aggregate")
            if not np.all(np.isfinite(vals)):
                bad = int(np.argmin(np.isfinite(vals)))
                raise ValidationError(f"non-finite value for {name!r} at index {bad}")
            if np.any(vals < 0):
                bad = int(np.argmax(vals < 0))
                raise ValidationError(f"negative power for {name!r} at index {bad}")
        if int(self.sample_interval) <= 0:
            raise ValidationError("sample_interval must be a positive integer")
        object.__setattr__(self, "sample_interval", int(self.sample_interval))

    def __len__(self) -> int:
        return len(self.aggregate)

    @property
    def appliance_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.appliances)

    @property
    def appliance_matrix(self) -> np.ndarray:
        """Appliance channels stacked to shape (A, n)."""
        return np.stack([vals for _, vals in self.appliances])

    def residual(self) -> np.ndarray:
        """Aggregate minus the appliance sum (the unmetered noise channel)."""
        return self.aggregate - self.appliance_matrix.sum(axis=0)


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine map of a power range onto [0, 1].

    A degenerate range (hi == lo) maps every value to 0; constant channels
    carry no information.  One spec per household is shared by the aggregate
    and all appliance channels so the additive channel structure survives the
    rescaling.
    """

    lo: float
    hi: float
    zero_range_policy: str = "MapToZero"

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValidationError("normalization bounds must be finite")
        if self.hi < self.lo:
            raise ValidationError(f"hi ({self.hi}) < lo ({self.lo})")
        if self.zero_range_policy != "MapToZero":
            raise ValidationError(f"unknown zero_range_policy {self.zero_range_policy!r}")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def normalize(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.span == 0.0:
            return np.zeros_like(values)
        return (values - self.lo) / self.span

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.span == 0.0:
            return np.full_like(values, self.lo)
        return self.lo + values * self.span


@dataclass(frozen=True)
class Seq2PointSample:
    """One supervised sample: aggregate window in, midpoint appliance vector out.

    ``input`` has even length 2T (normalized aggregate over [t, t+2T)),
    ``target`` the normalized appliance vector at step t+T, and
    ``source_index`` the window start t in the originating series.
    """

    input: np.ndarray
    target: np.ndarray
    source_index: int

    def __post_init__(self):
        inp = np.asarray(self.input, dtype=np.float64)
        tgt = np.asarray(self.target, dtype=np.float64)
        object.__setattr__(self, "input", _readonly(inp))
        object.__setattr__(self, "target", _readonly(tgt))
        if self.input.ndim != 1 or len(self.input) == 0 or len(self.input) % 2:
            raise ValidationError("sample input must be a non-empty even-length vector")
        if self.target.ndim != 1 or len(self.target) == 0:
            raise ValidationError("sample target must be a non-empty vector")
        if not np.all(np.isfinite(self.input)) or not np.all(np.isfinite(self.target)):
            raise ValidationError("sample contains non-finite values")
        object.__setattr__(self, "source_index", int(self.source_index))


@dataclass(frozen=True)
class TaskDataset:
    """A named sample collection with chronological train/validation/test splits.

    The same type serves both meta-learning tasks and federated clients; a
    client is simply a task with a larger train split.
    """

    task_id: str
    train: tuple[Seq2PointSample, ...]
    validation: tuple[Seq2PointSample, ...]
    test: tuple[Seq2PointSample, ...]
    appliance_names: tuple[str, ...]
    normalization: NormalizationSpec

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "validation", tuple(self.validation))
        object.__setattr__(self, "test", tuple(self.test))
        object.__setattr__(self, "appliance_names", tuple(self.appliance_names))
        a = len(self.appliance_names)
        if a < 1:
            raise ValidationError("task needs at least one appliance name")
        splits = {"train": self.train, "validation": self.validation, "test": self.test}
        seen: dict[int, str] = {}
        for split_name, split in splits.items():
            for s in split:
                if len(s.target) != a:
                    raise ValidationError(
                        f"{split_name} sample target length {len(s.target)} != {a}"
                    )
                if s.source_index in seen:
                    raise ValidationError(
                        f"source index {s.source_index} appears in both "
                        f"{seen[s.source_index]} and {split_name}"
                    )
                seen[s.source_index] = split_name

    @property
    def n_appliances(self) -> int:
        return len(self.appliance_names)

    def all_samples(self) -> tuple[Seq2PointSample, ...]:
        return self.train + self.validation + self.test


def fit_normalization(series: HouseholdSeries) -> NormalizationSpec:
    """Fit the [0, 1] scaling to the household's aggregate channel.

    The same spec is applied to the appliance channels so that the additive
    relation between channels is preserved up to the affine map.
    """
    agg = series.aggregate
    finite = np.isfinite(agg)
    if not finite.all():
        raise ValidationError(f"non-finite aggregate value at index {int(np.argmin(finite))}")
    return NormalizationSpec(lo=float(agg.min()), hi=float(agg.max()))


def windowize(
    series: HouseholdSeries,
    spec: NormalizationSpec,
    half_window: int,
    stride: int = 1,
) -> list[Seq2PointSample]:
    """Slice the series into normalized (window, midpoint) samples.

    Emits one sample per start index t = 0, stride, 2*stride, ... while the
    window [t, t+2T) fits; boundary windows are dropped, never padded.
    """
    t_half = int(half_window)
    stride = int(stride)
    if t_half < 1:
        raise ValidationError("half_window must be a positive integer")
    if stride < 1:
        raise ValidationError("stride must be a positive integer")
    n = len(series)
    width = 2 * t_half
    if n < width:
        raise ValidationError(
            f"series of length {n} is shorter than one window; need at least {width} steps"
        )
    norm_agg = spec.normalize(series.aggregate)
    norm_app = spec.normalize(series.appliance_matrix)
    samples = []
    for t in range(0, n - width + 1, stride):
        samples.append(
            Seq2PointSample(
                input=norm_agg[t : t + width],
                target=norm_app[:, t + t_half],
                source_index=t,
            )
        )
    return samples


def split_dataset(
    samples: list[Seq2PointSample],
    fractions: tuple[float, float, float],
    seed: int = 0,
    *,
    task_id: str = "task",
    appliance_names: tuple[str, ...] | None = None,
    normalization: NormalizationSpec | None = None,
) -> TaskDataset:
    """Split samples chronologically into a TaskDataset.

    Counts are floor(fraction * n) for train and validation with the
    remainder going to test, so the latest windows are always held out.
    ``seed`` is reserved for alternative split protocols; the chronological
    protocol is deterministic and ignores it.
    """
    del seed
    f_train, f_val, f_test = (float(f) for f in fractions)
    if min(f_train, f_val, f_test) <= 0:
        raise ValidationError("all three split fractions must be positive")
    if abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise ValidationError(f"split fractions sum to {f_train + f_val + f_test}, not 1")
    n = len(samples)
    if n < 3:
        raise ValidationError(f"need at least 3 samples to split, got {n}")
    ordered = sorted(samples, key=lambda s: s.source_index)
    n_train = int(np.floor(f_train * n))
    n_val = int(np.floor(f_val * n))
    if appliance_names is None:
        appliance_names = tuple(f"appliance_{j}" for j in range(len(ordered[0].target)))
    if normalization is None:
        normalization = NormalizationSpec(lo=0.0, hi=1.0)
    return TaskDataset(
        task_id=task_id,
        train=tuple(ordered[:n_train]),
        validation=tuple(ordered[n_train : n_train + n_val]),
        test=tuple(ordered[n_train + n_val :]),
        appliance_names=appliance_names,
        normalization=normalization,
    )


def build_task(
    series: HouseholdSeries,
    half_window: int,
    fractions: tuple[float, float, float],
    *,
    stride: int = 1,
    task_id: str | None = None,
) -> TaskDataset:
    """Fit normalization, windowize, and split one household into a task."""
    spec = fit_normalization(series)
    samples = windowize(series, spec, half_window, stride)
    return split_dataset(
        samples,
        fractions,
        task_id=task_id if task_id is not None else series.household_id,
        appliance_names=series.appliance_names,
        normalization=spec,
    )
