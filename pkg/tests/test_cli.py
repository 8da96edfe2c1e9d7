import json

import numpy as np
import pytest

import helpers
from fedwatt.cli import main
from fedwatt.config import document_toml, load_config
from fedwatt.model import load_checkpoint


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = root / "tiny.toml"
    config.write_text(document_toml(helpers.tiny_document()))
    return root


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_command_is_usage_error(capsys):
    assert main(["disaggregate"]) == 1


def test_unknown_flag_is_usage_error(capsys):
    assert main(["bench", "--verbose"]) == 1


def test_print_config_emits_loadable_toml(tmp_path, capsys):
    assert main(["bench", "--print-config"]) == 0
    text = capsys.readouterr().out
    assert "[experiment]" in text
    assert "[[dataset.synth.appliances]]" in text
    path = tmp_path / "defaults.toml"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.seed == 0


def test_missing_config_file_names_path(capsys):
    assert main(["bench", "--config", "no/such/file.toml"]) == 1
    assert "file.toml" in capsys.readouterr().err


def test_gradcheck_passes(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "max relative error" in out
    assert "over 20 trials" in out


def test_synth_writes_households_and_config(workdir, capsys):
    out = workdir / "data"
    rc = main(["synth", "--config", str(workdir / "tiny.toml"), "--out", str(out)])
    assert rc == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "bench.toml",
        "client00.csv",
        "client01.csv",
        "client02.csv",
        "task00.csv",
        "task01.csv",
        "test00.csv",
        "test01.csv",
    ]
    generated = load_config(out / "bench.toml")
    assert generated.dataset_mode == "csv"
    assert len(generated.document["dataset"]["csv"]["clients"]) == 3


def test_bench_on_synth_output_produces_full_report(workdir, capsys):
    out = workdir / "bench-out"
    rc = main(["bench", "--config", str(workdir / "data" / "bench.toml"), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    combos = {(r["algorithm"], r["task_id"], r["appliance"]) for r in report["rows"]}
    assert combos == {
        (alg, task, app)
        for alg in ("central", "local", "fedavg", "fedmeta")
        for task in ("test00", "test01")
        for app in ("fridge", "kettle", "washer")
    }
    assert report["failures"] == []
    stdout = capsys.readouterr().out
    for alg in ("central", "local", "fedavg", "fedmeta"):
        assert f"{alg}: f1=" in stdout
    assert "wrote" in stdout


def test_bench_seed_flag_overrides_config(workdir):
    out = workdir / "seed-out"
    rc = main(
        [
            "bench",
            "--config",
            str(workdir / "tiny.toml"),
            "--seed",
            "42",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 42


def test_train_central_writes_checkpoint(workdir, capsys):
    out = workdir / "train-central"
    rc = main(
        [
            "train",
            "--algorithm",
            "central",
            "--config",
            str(workdir / "tiny.toml"),
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    spec, w = load_checkpoint(out / "model.npz")
    assert spec.input_len == 8  # half_window 4
    assert spec.output_len == 3
    assert np.all(np.isfinite(w))


def test_train_local_requires_task(workdir, capsys):
    args = [
        "train",
        "--algorithm",
        "local",
        "--config",
        str(workdir / "tiny.toml"),
        "--out",
        str(workdir / "train-local"),
    ]
    assert main(args) == 1
    assert "--task" in capsys.readouterr().err
    assert main(args + ["--task", "nope"]) == 1
    assert "test00" in capsys.readouterr().err  # error lists the valid ids
    assert main(args + ["--task", "test01"]) == 0
    assert (workdir / "train-local" / "model.npz").exists()


def test_train_fedavg_writes_run_log(workdir):
    out = workdir / "train-fedavg"
    rc = main(
        [
            "train",
            "--algorithm",
            "fedavg",
            "--config",
            str(workdir / "tiny.toml"),
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = (out / "runlog.jsonl").read_text().splitlines()
    records = [json.loads(line) for line in lines]
    assert len(records) == 2  # rounds * main_rounds for the tiny config
    assert all(r["phase"] == "fed" for r in records)


def test_eval_scores_checkpoint_on_csv(workdir, capsys):
    out = workdir / "eval-out"
    rc = main(
        [
            "eval",
            "--checkpoint",
            str(workdir / "train-central" / "model.npz"),
            "--csv",
            str(workdir / "data" / "test00.csv"),
            "--config",
            str(workdir / "tiny.toml"),
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    payload = json.loads((out / "eval.json").read_text())
    assert len(payload["rows"]) == 3
    assert {r["appliance"] for r in payload["rows"]} == {"fridge", "kettle", "washer"}
    stdout = capsys.readouterr().out
    assert "test00/fridge: f1=" in stdout


def test_eval_rejects_appliance_count_mismatch(workdir, tmp_path, capsys):
    # a checkpoint for 3 appliances cannot score a 1-appliance household
    from fedwatt.csvio import read_csv, write_csv
    from fedwatt.data import HouseholdSeries

    full = read_csv(workdir / "data" / "test00.csv")
    one = HouseholdSeries(
        household_id="one",
        timestamps=full.timestamps,
        aggregate=full.aggregate,
        appliances=full.appliances[:1],
        sample_interval=full.sample_interval,
    )
    csv_path = tmp_path / "one.csv"
    write_csv(one, csv_path)
    rc = main(
        [
            "eval",
            "--checkpoint",
            str(workdir / "train-central" / "model.npz"),
            "--csv",
            str(csv_path),
            "--config",
            str(workdir / "tiny.toml"),
            "--out",
            str(tmp_path / "eval-out"),
        ]
    )
    assert rc == 1
    assert "appliance" in capsys.readouterr().err


def test_synth_rejects_csv_mode_config(workdir, capsys):
    rc = main(
        [
            "synth",
            "--config",
            str(workdir / "data" / "bench.toml"),
            "--out",
            str(workdir / "resynth"),
        ]
    )
    assert rc == 1
    assert "synth" in capsys.readouterr().err
