"""Synthetic multi-appliance household generator.

Each appliance runs an independent ON/OFF renewal process: exponential OFF
gaps, geometric event durations, a trapezoidal power ramp at the event edges,
and per-event power jitter.  The aggregate channel is the appliance sum plus
zero-mean Gaussian meter noise, clipped at zero.  Every appliance draws from
its own RNG sub-stream, so appending an appliance to the profile list leaves
the existing channels bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import HouseholdSeries
from .errors import ValidationError
from .seeding import derive_rng

__all__ = ["ApplianceProfile", "SynthConfig", "generate"]

_NOISE_STREAM = "meter-noise"


@dataclass(frozen=True)
class ApplianceProfile:
    """Event statistics for one simulated appliance.

    ``mean_events_per_day`` controls how often the appliance switches on,
    ``mean_event_duration`` (in steps) how long it stays on, and
    ``ramp_steps`` how many steps the power takes to ramp up and down at the
    event edges.  Per-event power is ``on_power_mean`` plus a uniform draw in
    ``[-on_power_jitter, +on_power_jitter]``.
    """

    name: str
    on_power_mean: float
    on_power_jitter: float = 0.0
    mean_event_duration: int = 30
    mean_events_per_day: float = 8.0
    ramp_steps: int = 0

    def __post_init__(self):
        if self.on_power_mean <= 0:
            raise ValidationError(f"{self.name!r}: on_power_mean must be > 0")
        if not 0 <= self.on_power_jitter < self.on_power_mean:
            raise ValidationError(
                f"{self.name!r}: need on_power_mean > on_power_jitter >= 0"
            )
        if int(self.mean_event_duration) < 1:
            raise ValidationError(f"{self.name!r}: mean_event_duration must be >= 1")
        if self.mean_events_per_day < 0:
            raise ValidationError(f"{self.name!r}: mean_events_per_day must be >= 0")
        if int(self.ramp_steps) < 0:
            raise ValidationError(f"{self.name!r}: ramp_steps must be >= 0")


@dataclass(frozen=True)
class SynthConfig:
    profiles: tuple[ApplianceProfile, ...]
    days: int = 1
    sample_interval: int = 60
    noise_sigma: float = 0.0
    seed: int = 0
    household_id: str = "synth"

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if len(self.profiles) < 1:
            raise ValidationError("at least one appliance profile is required")
        names = [p.name for p in self.profiles]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate appliance names: {sorted(names)}")
        if int(self.days) < 1:
            raise ValidationError("days must be a positive integer")
        if int(self.sample_interval) < 1:
            raise ValidationError("sample_interval must be a positive integer")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")

    @property
    def steps_per_day(self) -> int:
        return 86400 // int(self.sample_interval)

    @property
    def n_steps(self) -> int:
        return int(self.days) * self.steps_per_day


def _event_shape(duration: int, ramp_steps: int) -> np.ndarray:
    """Unit-power envelope of one event: ramp up, plateau, ramp down."""
    shape = np.ones(duration)
    ramp = min(ramp_steps, duration // 2)
    if ramp > 0:
        # fractional heights so a 1-step ramp is half power, not instant-on
        edge = (np.arange(1, ramp + 1)) / (ramp + 1)
        shape[:ramp] = edge
        shape[duration - ramp :] = edge[::-1]
    return shape


def _simulate_channel(profile: ApplianceProfile, n_steps: int, steps_per_day: int,
                      rng: np.random.Generator) -> np.ndarray:
    values = np.zeros(n_steps)
    if profile.mean_events_per_day == 0:
        return values
    duration_mean = int(profile.mean_event_duration)
    # OFF gaps sized so that duty cycle matches events_per_day * duration / day
    mean_gap = max(steps_per_day / profile.mean_events_per_day - duration_mean, 1.0)
    t = rng.exponential(mean_gap)
    while t < n_steps:
        start = int(t)
        duration = rng.geometric(1.0 / duration_mean)
        power = profile.on_power_mean
        if profile.on_power_jitter > 0:
            power += rng.uniform(-profile.on_power_jitter, profile.on_power_jitter)
        stop = min(start + duration, n_steps)
        values[start:stop] += power * _event_shape(duration, profile.ramp_steps)[: stop - start]
        t = start + duration + rng.exponential(mean_gap)
    return values


def generate(config: SynthConfig) -> HouseholdSeries:
    """Simulate one household; deterministic given ``config.seed``."""
    n = config.n_steps
    channels = []
    for j, profile in enumerate(config.profiles):
        rng = derive_rng(config.seed, j)
        channels.append((profile.name, _simulate_channel(
            profile, n, config.steps_per_day, rng)))
    aggregate = np.sum([vals for _, vals in channels], axis=0)
    if config.noise_sigma > 0:
        noise_rng = derive_rng(config.seed, _NOISE_STREAM)
        aggregate = np.clip(aggregate + noise_rng.normal(0.0, config.noise_sigma, n), 0.0, None)
    timestamps = np.arange(n, dtype=np.int64) * int(config.sample_interval)
    return HouseholdSeries(
        household_id=config.household_id,
        timestamps=timestamps,
        aggregate=aggregate,
        appliances=tuple(channels),
        sample_interval=int(config.sample_interval),
    )
