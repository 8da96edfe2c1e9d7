import numpy as np
import pytest

from fedwatt.csvio import read_csv, write_csv
from fedwatt.data import HouseholdSeries
from fedwatt.errors import ValidationError
from fedwatt.synth import ApplianceProfile, SynthConfig, generate


def test_parse_three_row_file(tmp_path):
    path = tmp_path / "house.csv"
    path.write_text(
        "timestamp,aggregate,fridge,kettle\n"
        "0,130.5,120.0,0.0\n"
        "60,2150.0,110.0,2000.0\n"
        "120,95.25,95.25,0.0\n"
    )
    series = read_csv(path)
    assert series.household_id == "house"
    assert len(series) == 3
    assert series.appliance_names == ("fridge", "kettle")
    assert np.array_equal(series.timestamps, [0, 60, 120])
    assert np.array_equal(series.aggregate, [130.5, 2150.0, 95.25])
    assert np.array_equal(series.appliances[0][1], [120.0, 110.0, 95.25])
    assert np.array_equal(series.appliances[1][1], [0.0, 2000.0, 0.0])
    assert series.sample_interval == 60


def test_round_trip_is_exact(tmp_path):
    cfg = SynthConfig(
        profiles=(
            ApplianceProfile(name="fridge", on_power_mean=120.0, on_power_jitter=20.0),
            ApplianceProfile(name="kettle", on_power_mean=2000.0, mean_event_duration=3),
        ),
        days=1,
        noise_sigma=5.0,
        seed=11,
    )
    original = generate(cfg)
    path = tmp_path / "rt.csv"
    write_csv(original, path)
    loaded = read_csv(path)
    assert np.array_equal(loaded.timestamps, original.timestamps)
    assert np.array_equal(loaded.aggregate, original.aggregate)
    for (na, va), (nb, vb) in zip(loaded.appliances, original.appliances):
        assert na == nb
        assert np.array_equal(va, vb)


def test_written_file_shape(tmp_path):
    ts = np.arange(10, dtype=np.int64) * 60
    series = HouseholdSeries(
        household_id="h",
        timestamps=ts,
        aggregate=np.linspace(0.0, 9.0, 10),
        appliances=(
            ("a", np.zeros(10)),
            ("b", np.ones(10)),
        ),
        sample_interval=60,
    )
    path = tmp_path / "shape.csv"
    write_csv(series, path)
    lines = path.read_text().splitlines()
    # header plus ten data rows; 2 appliances means 4 columns per row
    assert len(lines) == 11
    assert lines[0] == "timestamp,aggregate,a,b"
    assert all(len(line.split(",")) == 4 for line in lines)


def test_missing_file_error_names_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(ValidationError, match="nope.csv"):
        read_csv(missing)


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,aggregate,dev\n0,1.0,1.0\n")
    with pytest.raises(ValidationError, match="line 1"):
        read_csv(path)


def test_column_count_mismatch_names_line(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("timestamp,aggregate,dev\n0,1.0,1.0\n60,2.0\n")
    with pytest.raises(ValidationError, match="line 3"):
        read_csv(path)


def test_timestamp_regression_names_line(tmp_path):
    path = tmp_path / "ts.csv"
    path.write_text(
        "timestamp,aggregate,dev\n0,1.0,1.0\n60,2.0,2.0\n60,3.0,3.0\n"
    )
    with pytest.raises(ValidationError, match="line 4"):
        read_csv(path)


def test_unparsable_value_names_line(tmp_path):
    path = tmp_path / "num.csv"
    path.write_text("timestamp,aggregate,dev\n0,1.0,oops\n")
    with pytest.raises(ValidationError, match="line 2"):
        read_csv(path)


def test_no_data_rows_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("timestamp,aggregate,dev\n")
    with pytest.raises(ValidationError, match="no data rows"):
        read_csv(path)


def test_comma_in_appliance_name_rejected(tmp_path):
    series = HouseholdSeries(
        household_id="h",
        timestamps=np.array([0], dtype=np.int64),
        aggregate=np.array([1.0]),
        appliances=(("a,b", np.array([1.0])),),
        sample_interval=60,
    )
    with pytest.raises(ValidationError, match="a,b"):
        write_csv(series, tmp_path / "x.csv")
