"""Four-baseline benchmark harness.

Builds a household population (synthetic families or CSV files), trains each
enabled algorithm with the same model shape and initialization, and reports
the four metrics per (algorithm, testing task, appliance).

The optimization budget is matched across baselines: with K federated rounds
per main round, T main rounds, and E local epochs per round, the centrally
and locally trained baselines run E*K*T epochs over their respective data,
and FedAvg runs K*T rounds, the same total as FedMeta's federated phases.
Training failures abort only the affected baseline and are recorded in the
report instead of raised.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import model
from .config import ExperimentConfig
from .csvio import read_csv
from .data import TaskDataset, build_task
from .errors import FedwattError, ValidationError
from .federated import ClientPool, run_fedavg
from .meta import fine_tune, run_fedmeta
from .metrics import MetricsReport, ThresholdSpec, appliance_report, average_metrics
from .seeding import derive_rng, subseed
from .synth import ApplianceProfile, SynthConfig, generate
from .train import LocalTrainConfig, local_update

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "BenchOutput",
    "build_datasets",
    "run_benchmark",
    "solo_config",
    "synth_household",
    "total_fed_rounds",
    "train_central",
    "train_fedavg",
    "train_fedmeta_global",
    "train_local",
    "write_outputs",
]

REPORT_SCHEMA_VERSION = 1

_PREDICT_CHUNK = 1024

LogFn = Callable[[dict], None]


@dataclasses.dataclass(frozen=True)
class BenchOutput:
    """Everything run_benchmark produces beyond the report rows."""

    reports: tuple[MetricsReport, ...]
    failures: tuple[dict, ...]
    predictions: dict[tuple[str, str], dict]
    log_records: tuple[dict, ...]


def _vary_profile(p: ApplianceProfile, rng) -> ApplianceProfile:
    """Jitter a profile's power, duration, and event rate for one household."""
    factors = rng.uniform(-1.0, 1.0, size=3)
    return replace(
        p,
        on_power_mean=p.on_power_mean * (1.0 + factors[0]),
        on_power_jitter=p.on_power_jitter * (1.0 + factors[0]),
        mean_event_duration=max(1.0, p.mean_event_duration * (1.0 + factors[1])),
        mean_events_per_day=p.mean_events_per_day * (1.0 + factors[2]),
    )


def _shift_profile(p: ApplianceProfile, shift: float) -> ApplianceProfile:
    """Deterministic distribution shift applied to testing households."""
    return replace(
        p,
        on_power_mean=p.on_power_mean * (1.0 + shift),
        on_power_jitter=p.on_power_jitter * (1.0 + shift),
        mean_event_duration=max(1.0, p.mean_event_duration * (1.0 + shift)),
        mean_events_per_day=p.mean_events_per_day / (1.0 + shift),
    )


def synth_household(cfg: ExperimentConfig, role: str, index: int, shifted: bool):
    synth = cfg.document["dataset"]["synth"]
    het = float(synth["heterogeneity"])
    base = cfg.appliance_profiles()
    if shifted:
        base = tuple(_shift_profile(p, float(synth["test_shift"])) for p in base)
    rng = derive_rng(cfg.seed, "family", role, index)
    scaled = []
    for p in base:
        f = _vary_profile(p, rng)
        if het == 0.0:
            f = p
        else:
            f = replace(
                p,
                on_power_mean=p.on_power_mean + het * (f.on_power_mean - p.on_power_mean),
                on_power_jitter=p.on_power_jitter + het * (f.on_power_jitter - p.on_power_jitter),
                mean_event_duration=max(
                    1.0,
                    p.mean_event_duration + het * (f.mean_event_duration - p.mean_event_duration),
                ),
                mean_events_per_day=max(
                    0.0,
                    p.mean_events_per_day + het * (f.mean_events_per_day - p.mean_events_per_day),
                ),
            )
        scaled.append(f)
    hh_id = f"{role}{index:02d}"
    series_cfg = SynthConfig(
        profiles=tuple(scaled),
        days=int(synth["days"]),
        sample_interval=int(synth["sample_interval"]),
        noise_sigma=float(synth["noise_sigma"]),
        seed=subseed(cfg.seed, "household", role, index),
        household_id=hh_id,
    )
    return generate(series_cfg)


def _task_from_series(cfg: ExperimentConfig, series) -> TaskDataset:
    return build_task(
        series,
        half_window=cfg.half_window,
        fractions=cfg.fractions,
        stride=cfg.stride,
        task_id=series.household_id,
    )


def build_datasets(
    cfg: ExperimentConfig,
) -> tuple[ClientPool, tuple[TaskDataset, ...], tuple[TaskDataset, ...]]:
    """Client pool, meta-training task pool, and testing tasks for a config."""
    if cfg.dataset_mode == "synth":
        synth = cfg.document["dataset"]["synth"]
        clients = tuple(
            _task_from_series(cfg, synth_household(cfg, "client", i, shifted=False))
            for i in range(int(synth["n_clients"]))
        )
        tasks = tuple(
            _task_from_series(cfg, synth_household(cfg, "task", i, shifted=False))
            for i in range(int(synth["n_train_tasks"]))
        )
        tests = tuple(
            _task_from_series(cfg, synth_household(cfg, "test", i, shifted=True))
            for i in range(int(synth["n_test_tasks"]))
        )
    else:
        csv = cfg.document["dataset"]["csv"]

        def load(paths):
            return tuple(_task_from_series(cfg, read_csv(p)) for p in paths)

        clients = load(csv["clients"])
        tasks = load(csv["tasks"])
        tests = load(csv["test_tasks"])
    names = clients[0].appliance_names
    for t in clients + tasks + tests:
        if t.appliance_names != names:
            raise ValidationError(
                f"household {t.task_id!r} appliances {t.appliance_names} "
                f"differ from {names}; all households must share one appliance set"
            )
    test_ids = [t.task_id for t in tests]
    if len(set(test_ids)) != len(test_ids):
        raise ValidationError(f"duplicate testing task ids: {sorted(test_ids)}")
    return ClientPool(clients), tasks, tests


def _predict(spec, w, samples) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (predictions, truths) over a sample tuple, in sample order."""
    preds = []
    truths = []
    for start in range(0, len(samples), _PREDICT_CHUNK):
        batch = model.Batch.from_samples(samples[start : start + _PREDICT_CHUNK])
        preds.append(model.forward(spec, w, batch.inputs))
        truths.append(batch.targets)
    return np.concatenate(preds, axis=0), np.concatenate(truths, axis=0)


def _union_train(tasks: Sequence[TaskDataset], task_id: str) -> TaskDataset:
    samples = []
    for t in tasks:
        samples.extend(t.train)
    first = tasks[0]
    return TaskDataset(
        task_id=task_id,
        train=tuple(
            replace(s, source_index=i) for i, s in enumerate(samples)
        ),
        validation=(),
        test=(),
        appliance_names=first.appliance_names,
        normalization=first.normalization,
    )


def _evaluate_algorithm(
    *,
    algorithm: str,
    params_for_task: Callable[[TaskDataset], np.ndarray],
    spec,
    tests: Sequence[TaskDataset],
    thresholds: ThresholdSpec,
    cfg: ExperimentConfig,
    reports: list[MetricsReport],
    predictions: dict,
) -> None:
    half = cfg.half_window
    for task in tests:
        w = params_for_task(task)
        pred, truth = _predict(spec, w, task.test)
        pred = np.maximum(pred, 0.0)
        for j, name in enumerate(task.appliance_names):
            reports.append(
                appliance_report(
                    algorithm=algorithm,
                    task_id=task.task_id,
                    appliance=name,
                    pred=pred[:, j],
                    truth=truth[:, j],
                    threshold=thresholds.for_appliance(name),
                    seed=cfg.seed,
                    config_hash=cfg.hash,
                )
            )
        mid = np.array([s.source_index + half for s in task.test], dtype=np.int64)
        agg = np.array([s.input[half] for s in task.test])
        predictions[(algorithm, task.task_id)] = {
            "t": mid,
            "aggregate": agg,
            "appliances": task.appliance_names,
            "truth": truth,
            "pred": pred,
        }


def total_fed_rounds(cfg: ExperimentConfig) -> int:
    """Federated rounds FedMeta runs in total; the budget given to FedAvg."""
    return cfg.fed_config().rounds * int(cfg.document["fedmeta"]["main_rounds"])


def solo_config(cfg: ExperimentConfig) -> LocalTrainConfig:
    """Epoch-matched config for the centrally and locally trained baselines."""
    local = cfg.fed_config().local
    return replace(local, epochs=local.epochs * total_fed_rounds(cfg))


def train_central(
    spec, w0: np.ndarray, tests: Sequence[TaskDataset], cfg: ExperimentConfig
) -> np.ndarray:
    """One model on the union of the testing tasks' train splits."""
    union = _union_train(tests, task_id="central-union")
    return local_update(spec, w0, union.train, solo_config(cfg))


def train_local(
    spec, w0: np.ndarray, task: TaskDataset, cfg: ExperimentConfig
) -> np.ndarray:
    """One model on a single testing task's own train split."""
    return local_update(spec, w0, task.train, solo_config(cfg))


def train_fedavg(
    spec,
    w0: np.ndarray,
    client_pool: ClientPool,
    cfg: ExperimentConfig,
    emit: LogFn | None = None,
) -> np.ndarray:
    """Federated averaging over the full round budget."""
    cfg_all = replace(cfg.fed_config(), rounds=total_fed_rounds(cfg))
    fed_log = None
    if emit is not None:
        def fed_log(rec):
            emit({
                "phase": "fed",
                "algorithm": "fedavg",
                "round": rec["round"],
                "loss_summary": {
                    "client_ids": rec["client_ids"],
                    "mean_train_loss": rec["mean_train_loss"],
                },
            })
    return run_fedavg(spec, w0, client_pool, cfg_all, log=fed_log)


def train_fedmeta_global(
    spec,
    w0: np.ndarray,
    client_pool: ClientPool,
    task_pool: Sequence[TaskDataset],
    cfg: ExperimentConfig,
    emit: LogFn | None = None,
) -> np.ndarray:
    """The combined loop's global parameters, before any fine-tuning."""
    meta_log = None
    if emit is not None:
        def meta_log(rec):
            emit({"algorithm": "fedmeta", **rec})
    return run_fedmeta(
        spec, w0, client_pool, task_pool, cfg.fedmeta_config(), log=meta_log
    )


def run_benchmark(cfg: ExperimentConfig, log: LogFn | None = None) -> BenchOutput:
    """Train every enabled algorithm and report metrics per task and appliance."""
    client_pool, task_pool, tests = build_datasets(cfg)
    n_appliances = tests[0].n_appliances
    spec = cfg.model_spec(n_appliances)
    w0 = model.init_params(spec, seed=cfg.seed)
    fraction, overrides = cfg.threshold_rule()
    thresholds = ThresholdSpec.from_training(tests, fraction=fraction, overrides=overrides)
    fedmeta_cfg = cfg.fedmeta_config()

    records: list[dict] = []

    def emit(rec: dict) -> None:
        records.append(rec)
        if log is not None:
            log(rec)

    reports: list[MetricsReport] = []
    failures: list[dict] = []
    predictions: dict[tuple[str, str], dict] = {}

    def run_baseline(name: str, trainer: Callable[[], Callable[[TaskDataset], np.ndarray]]):
        if name not in cfg.algorithms:
            return
        try:
            params_for_task = trainer()
            _evaluate_algorithm(
                algorithm=name,
                params_for_task=params_for_task,
                spec=spec,
                tests=tests,
                thresholds=thresholds,
                cfg=cfg,
                reports=reports,
                predictions=predictions,
            )
        except FedwattError as exc:
            failures.append({"algorithm": name, "error": str(exc)})

    def central_trainer():
        w = train_central(spec, w0, tests, cfg)
        return lambda task: w

    def local_trainer():
        per_task = {t.task_id: train_local(spec, w0, t, cfg) for t in tests}
        return lambda task: per_task[task.task_id]

    def fedavg_trainer():
        w = train_fedavg(spec, w0, client_pool, cfg, emit)
        return lambda task: w

    def fedmeta_trainer():
        w_global = train_fedmeta_global(spec, w0, client_pool, task_pool, cfg, emit)
        tuned = {}
        for t in tests:
            tuned[t.task_id] = fine_tune(spec, w_global, t, fedmeta_cfg.finetune)
            emit({
                "algorithm": "fedmeta",
                "phase": "finetune",
                "round": 0,
                "loss_summary": {"task_id": t.task_id},
            })
        return lambda task: tuned[task.task_id]

    run_baseline("central", central_trainer)
    run_baseline("local", local_trainer)
    run_baseline("fedavg", fedavg_trainer)
    run_baseline("fedmeta", fedmeta_trainer)

    reports.sort(key=lambda r: (r.algorithm, r.task_id, r.appliance))
    return BenchOutput(
        reports=tuple(reports),
        failures=tuple(failures),
        predictions=predictions,
        log_records=tuple(records),
    )


def _prediction_csv(path: Path, entry: dict) -> None:
    names = entry["appliances"]
    header = (
        ["t", "aggregate"]
        + [f"truth_{n}" for n in names]
        + [f"pred_{n}" for n in names]
    )
    lines = [",".join(header)]
    t = entry["t"]
    agg = entry["aggregate"]
    truth = entry["truth"]
    pred = entry["pred"]
    for i in range(len(t)):
        row = [str(int(t[i])), repr(float(agg[i]))]
        row += [repr(float(v)) for v in truth[i]]
        row += [repr(float(v)) for v in pred[i]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def write_outputs(cfg: ExperimentConfig, result: BenchOutput, out_dir: str | Path) -> Path:
    """Write report JSON, prediction CSVs, and the aggregated run log.

    Returns the report path.  Output is deterministic for a fixed config:
    no timestamps, sorted keys, exact float formatting.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "algorithms": list(cfg.algorithms),
        "rows": [dataclasses.asdict(r) for r in result.reports],
        "averages": average_metrics(result.reports),
        "failures": list(result.failures),
    }
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    pred_dir = out / "predictions"
    pred_dir.mkdir(exist_ok=True)
    for (algorithm, task_id), entry in sorted(result.predictions.items()):
        _prediction_csv(pred_dir / f"{algorithm}_{task_id}.csv", entry)
    log_path = out / "runlog.jsonl"
    with open(log_path, "w") as fh:
        for rec in result.log_records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return report_path
