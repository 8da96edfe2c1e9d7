import numpy as np
import pytest

from fedwatt.errors import ValidationError
from fedwatt.synth import ApplianceProfile, SynthConfig, generate


FRIDGE = ApplianceProfile(
    name="fridge",
    on_power_mean=120.0,
    on_power_jitter=20.0,
    mean_event_duration=25,
    mean_events_per_day=30.0,
    ramp_steps=1,
)
KETTLE = ApplianceProfile(
    name="kettle",
    on_power_mean=2000.0,
    on_power_jitter=150.0,
    mean_event_duration=3,
    mean_events_per_day=6.0,
    ramp_steps=0,
)


def test_shape_and_timestamps():
    cfg = SynthConfig(profiles=(FRIDGE,), days=1, sample_interval=60, seed=0)
    series = generate(cfg)
    assert len(series) == 1440
    assert series.timestamps[0] == 0
    assert series.timestamps[1] == 60
    assert np.all(np.diff(series.timestamps) == 60)
    assert series.sample_interval == 60
    assert series.appliance_names == ("fridge",)


def test_deterministic_given_seed():
    cfg = SynthConfig(profiles=(FRIDGE, KETTLE), days=1, noise_sigma=5.0, seed=42)
    a = generate(cfg)
    b = generate(cfg)
    assert np.array_equal(a.aggregate, b.aggregate)
    for (_, va), (_, vb) in zip(a.appliances, b.appliances):
        assert np.array_equal(va, vb)


def test_different_seeds_differ():
    a = generate(SynthConfig(profiles=(FRIDGE,), seed=0))
    b = generate(SynthConfig(profiles=(FRIDGE,), seed=1))
    assert not np.array_equal(a.aggregate, b.aggregate)


def test_noiseless_aggregate_is_exact_channel_sum():
    cfg = SynthConfig(profiles=(FRIDGE, KETTLE), days=1, noise_sigma=0.0, seed=7)
    series = generate(cfg)
    assert np.array_equal(series.aggregate, series.appliance_matrix.sum(axis=0))
    assert np.array_equal(series.residual(), np.zeros(len(series)))


def test_appending_appliance_preserves_existing_channels():
    # each appliance has its own RNG sub-stream keyed by its position
    one = generate(SynthConfig(profiles=(FRIDGE,), seed=5))
    two = generate(SynthConfig(profiles=(FRIDGE, KETTLE), seed=5))
    assert np.array_equal(one.appliances[0][1], two.appliances[0][1])


def test_zero_event_rate_yields_all_zero_channel():
    silent = ApplianceProfile(name="off", on_power_mean=500.0, mean_events_per_day=0.0)
    series = generate(SynthConfig(profiles=(silent,), seed=3))
    assert np.array_equal(series.appliances[0][1], np.zeros(len(series)))


def test_power_levels_within_jitter_band():
    flat = ApplianceProfile(
        name="flat",
        on_power_mean=100.0,
        on_power_jitter=10.0,
        mean_event_duration=20,
        mean_events_per_day=10.0,
        ramp_steps=0,
    )
    series = generate(SynthConfig(profiles=(flat,), days=2, seed=1))
    vals = series.appliances[0][1]
    on = vals[vals > 0]
    assert len(on) > 0
    # events may overlap and stack, so values are sums of per-event powers,
    # each of which lies in [90, 110]
    assert on.min() >= 90.0


def test_on_fraction_tracks_requested_duty_cycle():
    # duty cycle = events_per_day * duration / steps_per_day = 12*36/1440 = 0.3
    profile = ApplianceProfile(
        name="duty",
        on_power_mean=100.0,
        on_power_jitter=0.0,
        mean_event_duration=36,
        mean_events_per_day=12.0,
        ramp_steps=0,
    )
    fractions = []
    for seed in range(100):
        series = generate(SynthConfig(profiles=(profile,), days=2, seed=seed))
        vals = series.appliances[0][1]
        fractions.append(np.mean(vals > 0))
    mean_fraction = float(np.mean(fractions))
    assert 0.24 <= mean_fraction <= 0.36


def test_noise_perturbs_aggregate_but_not_channels():
    clean = generate(SynthConfig(profiles=(FRIDGE,), noise_sigma=0.0, seed=9))
    noisy = generate(SynthConfig(profiles=(FRIDGE,), noise_sigma=5.0, seed=9))
    assert np.array_equal(clean.appliances[0][1], noisy.appliances[0][1])
    assert not np.array_equal(clean.aggregate, noisy.aggregate)
    assert np.all(noisy.aggregate >= 0.0)


def test_ramp_shapes_event_edges():
    # a long event with a 2-step ramp starts at fractional power
    profile = ApplianceProfile(
        name="ramped",
        on_power_mean=300.0,
        on_power_jitter=0.0,
        mean_event_duration=40,
        mean_events_per_day=4.0,
        ramp_steps=2,
    )
    series = generate(SynthConfig(profiles=(profile,), days=2, seed=2))
    vals = series.appliances[0][1]
    # ramp heights are k/(ramp+1) * power: 100 and 200 for a 2-step ramp
    assert np.any((vals > 0) & (vals < 300.0))


def test_profile_validation():
    with pytest.raises(ValidationError):
        ApplianceProfile(name="bad", on_power_mean=0.0)
    with pytest.raises(ValidationError):
        ApplianceProfile(name="bad", on_power_mean=100.0, on_power_jitter=100.0)
    with pytest.raises(ValidationError):
        ApplianceProfile(name="bad", on_power_mean=100.0, mean_event_duration=0)
    with pytest.raises(ValidationError):
        ApplianceProfile(name="bad", on_power_mean=100.0, mean_events_per_day=-1.0)


def test_config_validation():
    with pytest.raises(ValidationError):
        SynthConfig(profiles=())
    with pytest.raises(ValidationError):
        SynthConfig(profiles=(FRIDGE, FRIDGE))
    with pytest.raises(ValidationError):
        SynthConfig(profiles=(FRIDGE,), days=0)
    with pytest.raises(ValidationError):
        SynthConfig(profiles=(FRIDGE,), noise_sigma=-1.0)
