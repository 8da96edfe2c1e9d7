"""Acceptance gate: the eight release criteria, one test per criterion.

Each test prints a single summary line with the measured quantities so a
``pytest -v -s tests/test_acceptance.py`` run reads as a checklist.
"""

import json

import numpy as np
import pytest

import helpers
from fedwatt import model
from fedwatt.bench import build_datasets, run_benchmark, train_fedmeta_global
from fedwatt.cli import main
from fedwatt.config import ExperimentConfig, document_toml
from fedwatt.data import NormalizationSpec, Seq2PointSample, TaskDataset, build_task
from fedwatt.federated import ClientPool, FedConfig, run_fedavg
from fedwatt.meta import (
    FedMetaConfig,
    MetaConfig,
    ORDER_FIRST,
    ORDER_FULL_SECOND,
    meta_gradient,
    run_fedmeta,
)
from fedwatt.metrics import average_metrics, f1_accuracy, mae, sae
from fedwatt.model import Batch, ModelSpec, gradient_check_suite, init_params, param_count
from fedwatt.seeding import derive_rng, subseed
from fedwatt.synth import ApplianceProfile, SynthConfig, generate
from fedwatt.train import LocalTrainConfig, evaluate, local_update


def test_criterion_1_gradient_correctness():
    # >= 20 random reduced-architecture triples, central differences at 1e-5
    result = gradient_check_suite(n_trials=20, seed=0, step=1e-5)
    assert result.trials >= 20
    assert result.max_relative_error < 1e-4
    print(
        f"criterion 1 PASS: max relative gradient error "
        f"{result.max_relative_error:.3e} over {result.trials} trials (< 1e-4)"
    )


def test_criterion_2_one_client_fedavg_oracle():
    # a 5-round run over a single client must equal 5 chained local updates
    profile = ApplianceProfile(
        name="dev",
        on_power_mean=200.0,
        on_power_jitter=30.0,
        mean_event_duration=20,
        mean_events_per_day=20.0,
    )
    series = generate(
        SynthConfig(profiles=(profile,), days=1, noise_sigma=3.0, seed=11)
    )
    task = build_task(series, half_window=2, fractions=(0.7, 0.15, 0.15), stride=12)
    spec = ModelSpec(input_len=4, output_len=1, recurrent_hidden=3, dense_widths=(4,))
    w0 = init_params(spec, seed=0)
    local = LocalTrainConfig(gamma=1e-3, epochs=2, batch_size=16, shuffle_seed=3)
    cfg = FedConfig(rounds=5, clients_per_round=1, local=local)
    fed = run_fedavg(spec, w0, ClientPool(clients=(task,)), cfg)
    chained = np.array(w0)
    for _ in range(5):
        chained = local_update(spec, chained, task.train, local)
    assert np.array_equal(fed, chained)
    print(
        "criterion 2 PASS: 5-round single-client federated run is bitwise equal "
        "to 5 chained local updates"
    )


def test_criterion_3_meta_gradient_closed_form():
    qspec = helpers.QuadraticSpec(dim=3)

    def make_task(train_centers, val_centers):
        def split(centers, offset):
            return tuple(
                Seq2PointSample(
                    input=np.zeros(2),
                    target=np.asarray(c, dtype=np.float64),
                    source_index=offset + i,
                )
                for i, c in enumerate(centers)
            )

        return TaskDataset(
            task_id="quad",
            train=split(train_centers, 0),
            validation=split(val_centers, 1000),
            test=split(val_centers, 2000),
            appliance_names=("c0", "c1", "c2"),
            normalization=NormalizationSpec(0.0, 1.0),
        )

    train_centers = [[0.2, -1.0, 0.5], [1.8, 0.4, -0.7]]
    val_centers = [[1.0, 1.0, 0.0], [-0.4, 0.8, 2.0], [0.3, 0.3, 0.3]]
    task = make_task(train_centers, val_centers)
    w = np.array([2.0, -0.5, 1.3])
    m_train = np.mean(train_centers, axis=0)
    m_val = np.mean(val_centers, axis=0)

    def cfg(gamma, order):
        return MetaConfig(
            beta=0.1,
            maml_rounds=1,
            tasks_per_round=1,
            inner=LocalTrainConfig(gamma=gamma, epochs=1, batch_size=64),
            order=order,
        )

    worst = 0.0
    for gamma in (0.1, 0.25, 0.4):
        adapted = w - gamma * 2.0 * (w - m_train)
        closed = (1.0 - 2.0 * gamma) * 2.0 * (adapted - m_val)
        got = meta_gradient(qspec, w, [task], cfg(gamma, ORDER_FULL_SECOND))
        worst = max(worst, float(np.max(np.abs(got - closed))))
        assert np.allclose(got, closed, atol=1e-6)

    tiny = 1e-8
    first = meta_gradient(qspec, w, [task], cfg(tiny, ORDER_FIRST))
    second = meta_gradient(qspec, w, [task], cfg(tiny, ORDER_FULL_SECOND))
    assert np.allclose(first, second, rtol=1e-6, atol=1e-12)
    rel = float(np.max(np.abs(first - second) / np.maximum(np.abs(first), 1e-12)))
    print(
        f"criterion 3 PASS: closed-form max error {worst:.3e} (tol 1e-6); "
        f"order agreement at gamma=1e-8 rel {rel:.3e}"
    )


def test_criterion_4_combined_loop_transcript_oracle():
    # hand-unrolled transcript of one main round (one federated round, one
    # meta round, single-step full-batch everywhere) on an 11-parameter model
    spec = ModelSpec(input_len=2, output_len=1, recurrent_hidden=1, dense_widths=())
    assert param_count(spec) <= 50

    def dataset(tag, index, n_train=4, n_val=2):
        rng = derive_rng(2024, "transcript", tag, index)

        def split(count, offset):
            return tuple(
                Seq2PointSample(
                    input=rng.uniform(0.0, 1.0, 2),
                    target=rng.uniform(0.0, 1.0, 1),
                    source_index=offset + i,
                )
                for i in range(count)
            )

        return TaskDataset(
            task_id=f"{tag}{index}",
            train=split(n_train, 0),
            validation=split(n_val, 100),
            test=(),
            appliance_names=("dev",),
            normalization=NormalizationSpec(0.0, 1.0),
        )

    clients = (dataset("client", 0), dataset("client", 1))
    tasks = (dataset("task", 0), dataset("task", 1))
    gamma_local, gamma_inner, beta = 0.05, 0.04, 0.02
    step = LocalTrainConfig(gamma=gamma_local, epochs=1, batch_size=64)
    cfg = FedMetaConfig(
        main_rounds=1,
        fed=FedConfig(rounds=1, clients_per_round=2, local=step, sampling_seed=0),
        meta=MetaConfig(
            beta=beta,
            maml_rounds=1,
            tasks_per_round=2,
            inner=LocalTrainConfig(gamma=gamma_inner, epochs=1, batch_size=64),
            sampling_seed=0,
        ),
        finetune=step,
    )
    w0 = init_params(spec, seed=5)

    def g(w, samples):
        return model.grad(spec, w, Batch.from_samples(samples))

    # federated round: both clients step once from w0, then uniform average
    # in ascending client-id order
    w_client = [w - gamma_local * gv for w, gv in
                [(w0, g(w0, c.train)) for c in clients]]
    w_avg = 0.5 * w_client[0] + 0.5 * w_client[1]
    # meta round: adapt to each task's train split, sum the validation
    # gradients at the adapted parameters, step the average against the sum
    meta_total = np.zeros_like(w0)
    for t in tasks:
        adapted = w_avg - gamma_inner * g(w_avg, t.train)
        meta_total = meta_total + g(adapted, t.validation)
    expected = w_avg - beta * meta_total

    got = run_fedmeta(spec, w0, ClientPool(clients=clients), tasks, cfg)
    worst = float(np.max(np.abs(got - expected)))
    assert worst < 1e-10
    print(
        f"criterion 4 PASS: combined-loop transcript max deviation "
        f"{worst:.3e} per parameter (tol 1e-10)"
    )


@pytest.fixture(scope="module")
def family_runs():
    """Five seeded runs of the heterogeneous household family.

    Per seed: the trained global model's one-epoch adaptation MSE on a
    held-out task versus a random initialization, plus the benchmark F1
    averages for the federated baselines.
    """
    rows = []
    for seed in range(5):
        cfg = ExperimentConfig(document=helpers.family_document(seed))
        clients, tasks, tests = build_datasets(cfg)
        spec = cfg.model_spec(tests[0].n_appliances)
        w0 = model.init_params(spec, seed=cfg.seed)
        w_meta = train_fedmeta_global(spec, w0, clients, tasks, cfg)
        held = tests[0]
        one_epoch = LocalTrainConfig(gamma=0.5, epochs=1, batch_size=32, shuffle_seed=seed)
        mse_meta = evaluate(
            spec, local_update(spec, w_meta, held.train, one_epoch), held.validation
        )
        w_rand = model.init_params(spec, seed=subseed(seed, "random-init"))
        mse_rand = evaluate(
            spec, local_update(spec, w_rand, held.train, one_epoch), held.validation
        )
        averages = average_metrics(run_benchmark(cfg).reports)
        rows.append({
            "seed": seed,
            "mse_meta": mse_meta,
            "mse_rand": mse_rand,
            "f1_fedmeta": averages["fedmeta"]["f1"],
            "f1_fedavg": averages["fedavg"]["f1"],
        })
    return rows


def test_criterion_5_fast_adaptation(family_runs):
    # after one fine-tuning epoch on an unseen shifted household, the trained
    # initialization must reach at most half the validation MSE of a random
    # initialization, averaged over 5 seeds
    mean_meta = float(np.mean([r["mse_meta"] for r in family_runs]))
    mean_rand = float(np.mean([r["mse_rand"] for r in family_runs]))
    ratio = mean_meta / mean_rand
    assert ratio <= 0.5
    print(
        f"criterion 5 PASS: epoch-1 validation MSE {mean_meta:.5f} (trained init) vs "
        f"{mean_rand:.5f} (random init), ratio {ratio:.3f} (<= 0.5) over 5 seeds"
    )


def test_criterion_6_baseline_ordering(family_runs):
    mean_fedmeta = float(np.mean([r["f1_fedmeta"] for r in family_runs]))
    mean_fedavg = float(np.mean([r["f1_fedavg"] for r in family_runs]))
    assert mean_fedmeta >= mean_fedavg
    print(
        f"criterion 6 PASS: mean F1 over 5 seeds {mean_fedmeta:.4f} (fedmeta) >= "
        f"{mean_fedavg:.4f} (fedavg) on shifted testing tasks"
    )


def test_criterion_7_metric_oracles_and_generator_consistency():
    rng = derive_rng(7, "metric-oracle")
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 60))
        p = rng.uniform(0.0, 3.0, n)
        t = rng.uniform(0.0, 3.0, n)
        err_mae = abs(mae(p, t) - float(np.sum(np.abs(p - t)) / n))
        s = sae(p, t)
        expected_sae = abs(float(p.sum()) - float(t.sum())) / max(
            float(p.sum()), float(t.sum())
        )
        err_sae = abs(s - expected_sae)
        assert 0.0 <= s <= 1.0
        ps, ts = p > 1.5, t > 1.5
        f1, acc = f1_accuracy(ps, ts)
        tp = int(np.sum(ps & ts))
        fp = int(np.sum(ps & ~ts))
        fn = int(np.sum(~ps & ts))
        denom = 2 * tp + fp + fn
        err_f1 = abs(f1 - (2.0 * tp / denom if denom else 0.0))
        err_acc = abs(acc - float(np.mean(ps == ts)))
        worst = max(worst, err_mae, err_sae, err_f1, err_acc)
    assert worst < 1e-12

    profiles = (
        ApplianceProfile(
            name="fridge",
            on_power_mean=120.0,
            on_power_jitter=20.0,
            mean_event_duration=25,
            mean_events_per_day=30.0,
            ramp_steps=1,
        ),
        ApplianceProfile(
            name="kettle",
            on_power_mean=2000.0,
            on_power_jitter=150.0,
            mean_event_duration=3,
            mean_events_per_day=6.0,
        ),
    )
    for seed in range(3):
        series = generate(
            SynthConfig(profiles=profiles, days=1, noise_sigma=0.0, seed=seed)
        )
        assert np.array_equal(series.aggregate, series.appliance_matrix.sum(axis=0))
    print(
        f"criterion 7 PASS: metric oracle max error {worst:.3e} over 100 vectors "
        "(tol 1e-12); noiseless generator aggregate exactly equals channel sum"
    )


def test_criterion_8_end_to_end_determinism(tmp_path):
    config_path = tmp_path / "bench.toml"
    config_path.write_text(document_toml(helpers.tiny_document(seed=3)))
    outs = [tmp_path / "run-a", tmp_path / "run-b"]
    for out in outs:
        rc = main(["bench", "--config", str(config_path), "--out", str(out)])
        assert rc == 0
    report_a = (outs[0] / "report.json").read_bytes()
    report_b = (outs[1] / "report.json").read_bytes()
    assert report_a == report_b
    assert (outs[0] / "runlog.jsonl").read_bytes() == (outs[1] / "runlog.jsonl").read_bytes()
    names = sorted(p.name for p in (outs[0] / "predictions").iterdir())
    for name in names:
        assert (outs[0] / "predictions" / name).read_bytes() == (
            outs[1] / "predictions" / name
        ).read_bytes()
    payload = json.loads(report_a)
    assert payload["seed"] == 3
    print(
        f"criterion 8 PASS: two benchmark runs byte-identical "
        f"(report.json, runlog.jsonl, {len(names)} prediction CSVs)"
    )
