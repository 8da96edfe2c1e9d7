"""Command-line interface.

Subcommands::

    synth      generate CSV households plus a ready-to-run benchmark config
    train      train one algorithm, write a checkpoint and run log
    eval       load a checkpoint and score it on a household CSV
    bench      run the full benchmark, write report JSON and prediction CSVs
    gradcheck  run the finite-difference gradient suite

Exit codes: 0 on success, 1 on validation or usage errors, 2 on runtime
failures (training divergence, unexpected errors, gradient check failure).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import model
from .bench import (
    build_datasets,
    run_benchmark,
    synth_household,
    train_central,
    train_fedavg,
    train_fedmeta_global,
    train_local,
    write_outputs,
)
from .config import (
    ALGORITHMS,
    ExperimentConfig,
    default_config_toml,
    document_toml,
    load_config,
)
from .csvio import read_csv, write_csv
from .data import build_task
from .errors import FedwattError, ValidationError
from .federated import ClientPool
from .metrics import ThresholdSpec, appliance_report, average_metrics
from .model.gradcheck import gradient_check_suite
from .runlog import RunLog

__all__ = ["main", "cli"]


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config file")
    common.add_argument("--seed", type=int, metavar="INT", help="override the experiment seed")
    common.add_argument("--out", metavar="DIR", help="output directory (default from config)")

    parser = _Parser(prog="fedwatt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("synth", parents=[common], help="generate CSV households")

    p_train = sub.add_parser("train", parents=[common], help="train one algorithm")
    p_train.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p_train.add_argument(
        "--task", metavar="ID", help="testing task id (required for --algorithm local)"
    )

    p_eval = sub.add_parser("eval", parents=[common], help="score a checkpoint on a CSV")
    p_eval.add_argument("--checkpoint", required=True, metavar="PATH")
    p_eval.add_argument("--csv", required=True, metavar="PATH", help="household CSV to score")

    p_bench = sub.add_parser("bench", parents=[common], help="run the full benchmark")
    p_bench.add_argument(
        "--print-config", action="store_true", help="print the default config and exit"
    )

    sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    return parser


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out if args.out is not None else cfg.output_dir)


def _cmd_synth(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    if cfg.dataset_mode != "synth":
        raise ValidationError("synth requires dataset.mode = 'synth'")
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    synth = cfg.document["dataset"]["synth"]
    groups = {
        "clients": ("client", int(synth["n_clients"]), False),
        "tasks": ("task", int(synth["n_train_tasks"]), False),
        "test_tasks": ("test", int(synth["n_test_tasks"]), True),
    }
    paths: dict[str, list[str]] = {}
    for group, (role, count, shifted) in groups.items():
        paths[group] = []
        for i in range(count):
            series = synth_household(cfg, role, i, shifted=shifted)
            path = out / f"{series.household_id}.csv"
            write_csv(series, path)
            paths[group].append(str(path))
            print(f"wrote {path}")
    bench_doc = json.loads(json.dumps(cfg.document))
    bench_doc["dataset"]["mode"] = "csv"
    bench_doc["dataset"]["csv"] = paths
    config_path = out / "bench.toml"
    config_path.write_text(document_toml(bench_doc))
    print(f"wrote {config_path}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    client_pool, task_pool, tests = build_datasets(cfg)
    spec = cfg.model_spec(tests[0].n_appliances)
    w0 = model.init_params(spec, seed=cfg.seed)
    with RunLog(out / "runlog.jsonl") as log:
        if args.algorithm == "central":
            w = train_central(spec, w0, tests, cfg)
        elif args.algorithm == "local":
            if args.task is None:
                raise ValidationError("train --algorithm local requires --task <id>")
            by_id = {t.task_id: t for t in tests}
            if args.task not in by_id:
                raise ValidationError(
                    f"no testing task {args.task!r}; available: {sorted(by_id)}"
                )
            w = train_local(spec, w0, by_id[args.task], cfg)
        elif args.algorithm == "fedavg":
            w = train_fedavg(spec, w0, client_pool, cfg, emit=log)
        else:
            w = train_fedmeta_global(spec, w0, client_pool, task_pool, cfg, emit=log)
    checkpoint = out / "model.npz"
    model.save_checkpoint(checkpoint, spec, w)
    print(f"wrote {checkpoint}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    spec, w = model.load_checkpoint(args.checkpoint)
    series = read_csv(args.csv)
    task = build_task(
        series,
        half_window=spec.input_len // 2,
        fractions=cfg.fractions,
        stride=cfg.stride,
    )
    if task.n_appliances != spec.output_len:
        raise ValidationError(
            f"checkpoint predicts {spec.output_len} appliances but "
            f"{args.csv} has {task.n_appliances}"
        )
    fraction, overrides = cfg.threshold_rule()
    thresholds = ThresholdSpec.from_training([task], fraction=fraction, overrides=overrides)
    batch = model.Batch.from_samples(task.test)
    pred = model.forward(spec, w, batch.inputs).clip(min=0.0)
    rows = []
    for j, name in enumerate(task.appliance_names):
        rows.append(
            appliance_report(
                algorithm="eval",
                task_id=task.task_id,
                appliance=name,
                pred=pred[:, j],
                truth=batch.targets[:, j],
                threshold=thresholds.for_appliance(name),
                seed=cfg.seed,
                config_hash=cfg.hash,
            )
        )
    payload = {
        "schema_version": 1,
        "rows": [dataclasses.asdict(r) for r in rows],
        "averages": average_metrics(rows),
    }
    report_path = out / "eval.json"
    report_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    for r in rows:
        print(
            f"{r.task_id}/{r.appliance}: f1={r.f1:.4f} accuracy={r.accuracy:.4f} "
            f"mae={r.mae:.6f} sae={r.sae:.4f}"
        )
    print(f"wrote {report_path}")
    return 0


def _cmd_bench(args) -> int:
    if args.print_config:
        print(default_config_toml(), end="")
        return 0
    cfg = load_config(args.config, seed=args.seed)
    out = _out_dir(args, cfg)
    result = run_benchmark(cfg)
    report_path = write_outputs(cfg, result, out)
    for alg, row in average_metrics(result.reports).items():
        print(
            f"{alg}: f1={row['f1']:.4f} accuracy={row['accuracy']:.4f} "
            f"mae={row['mae']:.6f} sae={row['sae']:.4f} ({row['rows']} rows)"
        )
    for failure in result.failures:
        print(f"{failure['algorithm']} failed: {failure['error']}", file=sys.stderr)
    print(f"wrote {report_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    seed = args.seed if args.seed is not None else 0
    result = gradient_check_suite(seed=seed)
    print(f"max relative error {result.max_relative_error:.3e} over {result.trials} trials")
    if not result.passed:
        print(f"FAIL: exceeds tolerance {result.tolerance:g}", file=sys.stderr)
        return 2
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FedwattError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli = main


if __name__ == "__main__":
    raise SystemExit(main())
