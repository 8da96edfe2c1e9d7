"""Experiment configuration: TOML loading, defaults, and a stable hash.

The config file is a typed key-value document with one section per concern
(dataset, windows, model, federated, meta, finetune, thresholds).  User files
are deep-merged over the defaults; unknown keys are rejected so typos fail
loudly.  The canonical JSON form of the merged document is hashed into a
short identifier that tags every metrics row produced from the config.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ValidationError
from .federated import (
    WEIGHTING_DATA_PROPORTIONAL,
    WEIGHTING_UNIFORM,
    FedConfig,
)
from .meta import ORDER_FIRST, ORDER_FULL_SECOND, FedMetaConfig, MetaConfig
from .model import ModelSpec
from .synth import ApplianceProfile
from .train import LocalTrainConfig

__all__ = [
    "ALGORITHMS",
    "DEFAULTS",
    "ExperimentConfig",
    "config_hash",
    "default_config_toml",
    "document_toml",
    "load_config",
]

ALGORITHMS = ("central", "local", "fedavg", "fedmeta")

DEFAULTS: dict[str, Any] = {
    "experiment": {
        "seed": 0,
        "output_dir": "out",
        "algorithms": ["central", "local", "fedavg", "fedmeta"],
    },
    "dataset": {
        "mode": "synth",
        "synth": {
            "n_clients": 10,
            "n_train_tasks": 3,
            "n_test_tasks": 3,
            "days": 2,
            "sample_interval": 60,
            "noise_sigma": 5.0,
            "heterogeneity": 0.3,
            "test_shift": 0.5,
            "appliances": [
                {
                    "name": "fridge",
                    "on_power_mean": 120.0,
                    "on_power_jitter": 20.0,
                    "mean_event_duration": 25.0,
                    "mean_events_per_day": 30.0,
                    "ramp_steps": 1,
                },
                {
                    "name": "kettle",
                    "on_power_mean": 2000.0,
                    "on_power_jitter": 150.0,
                    "mean_event_duration": 3.0,
                    "mean_events_per_day": 6.0,
                    "ramp_steps": 0,
                },
                {
                    "name": "washer",
                    "on_power_mean": 500.0,
                    "on_power_jitter": 80.0,
                    "mean_event_duration": 45.0,
                    "mean_events_per_day": 2.0,
                    "ramp_steps": 3,
                },
            ],
        },
        "csv": {
            "clients": [],
            "tasks": [],
            "test_tasks": [],
        },
    },
    "windows": {
        "half_window": 60,
        "stride": 8,
        "fractions": [0.7, 0.15, 0.15],
    },
    "model": {
        "hidden": 64,
        "dense_widths": [480],
        "leaky_slope": 0.01,
    },
    "federated": {
        "rounds": 2,
        "clients_per_round": 5,
        "weighting": "uniform",
        "local": {"gamma": 0.1, "epochs": 1, "batch_size": 32},
    },
    "meta": {
        "beta": 0.05,
        "maml_rounds": 2,
        "tasks_per_round": 2,
        "order": "first_order",
        "inner": {"gamma": 0.1, "epochs": 1, "batch_size": 1024},
    },
    "fedmeta": {
        "main_rounds": 5,
    },
    "finetune": {
        "gamma": 0.1,
        "epochs": 3,
        "batch_size": 32,
    },
    "thresholds": {
        "fraction": 0.1,
        "overrides": {},
    },
}

# Keys whose sub-tables hold open-ended user content rather than fixed fields.
_OPEN_TABLES = {("thresholds", "overrides")}


def _merge(base: Any, override: Any, path: tuple[str, ...]) -> Any:
    if isinstance(base, dict):
        if not isinstance(override, Mapping):
            raise ValidationError(f"config key {'.'.join(path)} must be a table")
        if path in _OPEN_TABLES:
            return {**base, **override}
        out = dict(base)
        for key, value in override.items():
            if key not in base:
                raise ValidationError(f"unknown config key {'.'.join(path + (key,))}")
            out[key] = _merge(base[key], value, path + (key,))
        return out
    if isinstance(override, Mapping):
        raise ValidationError(f"config key {'.'.join(path)} must be a scalar or list")
    return override


def config_hash(document: Mapping[str, Any]) -> str:
    """Short stable identifier for a merged config document."""
    canon = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _toml_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as TOML")


def _emit_table(doc: Mapping[str, Any], prefix: tuple[str, ...], lines: list[str]) -> None:
    scalars = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in doc.items() if isinstance(v, dict)}
    array_tables = {
        k: v
        for k, v in scalars.items()
        if isinstance(v, list) and v and all(isinstance(e, dict) for e in v)
    }
    for k in array_tables:
        del scalars[k]
    if prefix and (scalars or not tables):
        lines.append(f"[{'.'.join(prefix)}]")
    for key, value in scalars.items():
        lines.append(f"{key} = {_toml_scalar(value)}")
    if scalars:
        lines.append("")
    for key, rows in array_tables.items():
        for row in rows:
            lines.append(f"[[{'.'.join(prefix + (key,))}]]")
            for rk, rv in row.items():
                lines.append(f"{rk} = {_toml_scalar(rv)}")
            lines.append("")
    for key, sub in tables.items():
        _emit_table(sub, prefix + (key,), lines)


def document_toml(document: Mapping[str, Any]) -> str:
    """Render a config document back to TOML text."""
    lines: list[str] = []
    _emit_table(document, (), lines)
    return "\n".join(lines).rstrip() + "\n"


def default_config_toml() -> str:
    """The full default configuration as a TOML document."""
    return document_toml(DEFAULTS)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, structured view of a merged config document."""

    document: dict[str, Any]

    def __post_init__(self):
        doc = self.document
        exp = doc["experiment"]
        algs = tuple(exp["algorithms"])
        _require(len(algs) >= 1, "at least one algorithm must be enabled")
        unknown = set(algs) - set(ALGORITHMS)
        _require(not unknown, f"unknown algorithms: {sorted(unknown)}; valid: {ALGORITHMS}")
        _require(len(set(algs)) == len(algs), f"duplicate algorithms: {algs}")
        mode = doc["dataset"]["mode"]
        _require(mode in ("synth", "csv"), f"dataset.mode must be 'synth' or 'csv', got {mode!r}")
        if mode == "csv":
            csv = doc["dataset"]["csv"]
            for group in ("clients", "tasks", "test_tasks"):
                paths = csv[group]
                _require(len(paths) > 0, f"dataset.csv.{group} must list at least one file")
                for p in paths:
                    _require(Path(p).is_file(), f"dataset.csv.{group}: no such file: {p}")
        else:
            synth = doc["dataset"]["synth"]
            _require(synth["n_clients"] >= 1, "dataset.synth.n_clients must be >= 1")
            _require(synth["n_train_tasks"] >= 1, "dataset.synth.n_train_tasks must be >= 1")
            _require(synth["n_test_tasks"] >= 1, "dataset.synth.n_test_tasks must be >= 1")
            _require(len(synth["appliances"]) >= 1, "dataset.synth.appliances must be non-empty")
            _require(synth["heterogeneity"] >= 0, "dataset.synth.heterogeneity must be >= 0")
            _require(synth["test_shift"] >= 0, "dataset.synth.test_shift must be >= 0")
        fracs = doc["windows"]["fractions"]
        _require(len(fracs) == 3, "windows.fractions must have three entries")
        weighting = doc["federated"]["weighting"]
        _require(
            weighting in (WEIGHTING_UNIFORM, WEIGHTING_DATA_PROPORTIONAL),
            f"federated.weighting must be '{WEIGHTING_UNIFORM}' or "
            f"'{WEIGHTING_DATA_PROPORTIONAL}', got {weighting!r}",
        )
        order = doc["meta"]["order"]
        _require(
            order in (ORDER_FIRST, ORDER_FULL_SECOND),
            f"meta.order must be '{ORDER_FIRST}' or '{ORDER_FULL_SECOND}', got {order!r}",
        )

    @property
    def seed(self) -> int:
        return int(self.document["experiment"]["seed"])

    @property
    def output_dir(self) -> str:
        return self.document["experiment"]["output_dir"]

    @property
    def algorithms(self) -> tuple[str, ...]:
        return tuple(self.document["experiment"]["algorithms"])

    @property
    def dataset_mode(self) -> str:
        return self.document["dataset"]["mode"]

    @property
    def hash(self) -> str:
        return config_hash(self.document)

    @property
    def half_window(self) -> int:
        return int(self.document["windows"]["half_window"])

    @property
    def stride(self) -> int:
        return int(self.document["windows"]["stride"])

    @property
    def fractions(self) -> tuple[float, float, float]:
        a, b, c = self.document["windows"]["fractions"]
        return (float(a), float(b), float(c))

    def appliance_profiles(self) -> tuple[ApplianceProfile, ...]:
        rows = self.document["dataset"]["synth"]["appliances"]
        return tuple(
            ApplianceProfile(
                name=row["name"],
                on_power_mean=float(row["on_power_mean"]),
                on_power_jitter=float(row["on_power_jitter"]),
                mean_event_duration=float(row["mean_event_duration"]),
                mean_events_per_day=float(row["mean_events_per_day"]),
                ramp_steps=int(row["ramp_steps"]),
            )
            for row in rows
        )

    def model_spec(self, n_appliances: int) -> ModelSpec:
        m = self.document["model"]
        return ModelSpec(
            input_len=2 * self.half_window,
            output_len=n_appliances,
            recurrent_hidden=int(m["hidden"]),
            dense_widths=tuple(int(w) for w in m["dense_widths"]),
            leaky_slope=float(m["leaky_slope"]),
        )

    def _local(self, section: Mapping[str, Any], shuffle_seed: int) -> LocalTrainConfig:
        return LocalTrainConfig(
            gamma=float(section["gamma"]),
            epochs=int(section["epochs"]),
            batch_size=int(section["batch_size"]),
            shuffle_seed=shuffle_seed,
        )

    def fed_config(self) -> FedConfig:
        fed = self.document["federated"]
        return FedConfig(
            rounds=int(fed["rounds"]),
            clients_per_round=int(fed["clients_per_round"]),
            local=self._local(fed["local"], shuffle_seed=self.seed),
            weighting=fed["weighting"],
            sampling_seed=self.seed,
        )

    def meta_config(self) -> MetaConfig:
        meta = self.document["meta"]
        return MetaConfig(
            beta=float(meta["beta"]),
            maml_rounds=int(meta["maml_rounds"]),
            tasks_per_round=int(meta["tasks_per_round"]),
            inner=self._local(meta["inner"], shuffle_seed=self.seed),
            order=meta["order"],
            sampling_seed=self.seed,
        )

    def finetune_config(self) -> LocalTrainConfig:
        return self._local(self.document["finetune"], shuffle_seed=self.seed)

    def fedmeta_config(self) -> FedMetaConfig:
        return FedMetaConfig(
            main_rounds=int(self.document["fedmeta"]["main_rounds"]),
            fed=self.fed_config(),
            meta=self.meta_config(),
            finetune=self.finetune_config(),
        )

    def threshold_rule(self) -> tuple[float, dict[str, float]]:
        th = self.document["thresholds"]
        overrides = {k: float(v) for k, v in th["overrides"].items()}
        return float(th["fraction"]), overrides


def load_config(path: str | Path | None = None, *, seed: int | None = None) -> ExperimentConfig:
    """Load a config file merged over the defaults.

    With no path the defaults are used as-is.  ``seed`` overrides the
    document's experiment seed (the CLI's ``--seed`` flag).
    """
    document = json.loads(json.dumps(DEFAULTS))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"no such config file: {p}")
        try:
            with open(p, "rb") as fh:
                user = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{p}: invalid TOML: {exc}") from exc
        document = _merge(document, user, ())
    if seed is not None:
        document["experiment"]["seed"] = int(seed)
    return ExperimentConfig(document=document)
