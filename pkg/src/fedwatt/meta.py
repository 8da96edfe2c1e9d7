"""Meta-learning rounds and the combined federated + meta training loop.

A meta round adapts the shared parameters to each sampled task (reusing the
local update loop), evaluates the adapted parameters on the task's held-out
validation split, and steps the shared parameters against the summed
post-adaptation gradients.  Two gradient modes are provided:

* ``first_order``  — treats the adaptation step as a constant; the meta
  gradient is the sum of task gradients at the adapted parameters.
* ``full_second_order`` — additionally multiplies each task term by
  (I - gamma * H) where H is the Hessian of the task's training loss at the
  incoming parameters; H-vector products come from central finite
  differences of the exact gradient.  Only valid when the inner adaptation
  is a single full-batch step, since that is the map being differentiated.

The combined loop alternates blocks of federated rounds and meta rounds on
one shared parameter vector, then testing tasks adapt via :func:`fine_tune`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import model
from .data import TaskDataset
from .errors import FedwattError, TrainingDivergedError, ValidationError
from .federated import ClientPool, FedConfig, fed_round
from .seeding import derive_rng
from .train import LocalTrainConfig, local_update

__all__ = [
    "MetaConfig",
    "FedMetaConfig",
    "inner_adapt",
    "meta_gradient",
    "maml_round",
    "run_fedmeta",
    "fine_tune",
    "ORDER_FIRST",
    "ORDER_FULL_SECOND",
]

ORDER_FIRST = "first_order"
ORDER_FULL_SECOND = "full_second_order"
_ORDERS = (ORDER_FIRST, ORDER_FULL_SECOND)

_HVP_BASE_STEP = 1e-4

LogFn = Callable[[dict], None]


@dataclass(frozen=True)
class MetaConfig:
    beta: float
    maml_rounds: int
    tasks_per_round: int
    inner: LocalTrainConfig
    order: str = ORDER_FIRST
    sampling_seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValidationError("beta must be finite and >= 0")
        if int(self.maml_rounds) < 1:
            raise ValidationError("maml_rounds must be >= 1")
        if int(self.tasks_per_round) < 1:
            raise ValidationError("tasks_per_round must be >= 1")
        if self.order not in _ORDERS:
            raise ValidationError(f"order must be one of {_ORDERS}, got {self.order!r}")


@dataclass(frozen=True)
class FedMetaConfig:
    main_rounds: int
    fed: FedConfig
    meta: MetaConfig
    finetune: LocalTrainConfig

    def __post_init__(self):
        if int(self.main_rounds) < 1:
            raise ValidationError("main_rounds must be >= 1")


def inner_adapt(
    spec, w: np.ndarray, task: TaskDataset, inner: LocalTrainConfig
) -> np.ndarray:
    """Adapt shared parameters to one task's train split."""
    if not task.train:
        raise ValidationError(f"task {task.task_id!r} has an empty train split")
    return local_update(spec, w, task.train, inner)


def _hessian_vector(spec, w, batch, v) -> np.ndarray:
    """H @ v by central finite differences of the exact gradient."""
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros_like(v)
    unit = v / norm
    step = _HVP_BASE_STEP * (1.0 + float(np.max(np.abs(w))))
    g_plus = model.grad(spec, w + step * unit, batch)
    g_minus = model.grad(spec, w - step * unit, batch)
    return (g_plus - g_minus) * (norm / (2.0 * step))


def _require_single_step(task: TaskDataset, inner: LocalTrainConfig) -> None:
    if int(inner.epochs) != 1 or int(inner.batch_size) < len(task.train):
        raise ValidationError(
            "full_second_order requires single-step full-batch inner adaptation "
            f"(epochs=1, batch_size >= {len(task.train)}); "
            f"got epochs={inner.epochs}, batch_size={inner.batch_size}"
        )


def _task_terms(
    spec, w: np.ndarray, tasks: Sequence[TaskDataset], cfg: MetaConfig
) -> tuple[np.ndarray, list[float]]:
    """Summed meta-gradient plus per-task post-adaptation validation losses."""
    if not tasks:
        raise ValidationError("meta gradient needs at least one task")
    total = np.zeros_like(np.asarray(w, dtype=np.float64))
    val_losses = []
    for task in sorted(tasks, key=lambda t: t.task_id):
        if not task.validation:
            raise ValidationError(f"task {task.task_id!r} has an empty validation split")
        try:
            adapted = inner_adapt(spec, w, task, cfg.inner)
            val_batch = model.Batch.from_samples(task.validation)
            outer_loss, outer_grad = model.loss_and_grad(spec, adapted, val_batch)
            if cfg.order == ORDER_FULL_SECOND:
                _require_single_step(task, cfg.inner)
                train_batch = model.Batch.from_samples(task.train)
                hv = _hessian_vector(spec, w, train_batch, outer_grad)
                outer_grad = outer_grad - cfg.inner.gamma * hv
        except FedwattError as exc:
            raise type(exc)(f"task {task.task_id!r}: {exc}") from exc
        total += outer_grad
        val_losses.append(float(outer_loss))
    if not np.all(np.isfinite(total)):
        raise TrainingDivergedError("non-finite meta-gradient; reduce step sizes")
    return total, val_losses


def meta_gradient(
    spec, w: np.ndarray, tasks: Sequence[TaskDataset], cfg: MetaConfig
) -> np.ndarray:
    """Gradient of the summed post-adaptation validation losses w.r.t. ``w``."""
    return _task_terms(spec, w, tasks, cfg)[0]


def maml_round(
    spec,
    w: np.ndarray,
    task_pool: Sequence[TaskDataset],
    cfg: MetaConfig,
    round_index: int,
    log: LogFn | None = None,
) -> np.ndarray:
    """Sample tasks, compute the meta-gradient, and step against it."""
    n_tasks = int(cfg.tasks_per_round)
    if n_tasks > len(task_pool):
        raise ValidationError(
            f"tasks_per_round {n_tasks} exceeds task pool size {len(task_pool)}"
        )
    rng = derive_rng(cfg.sampling_seed, "maml-sampling", round_index)
    idx = rng.choice(len(task_pool), size=n_tasks, replace=False)
    selected = sorted((task_pool[i] for i in idx), key=lambda t: t.task_id)
    total, val_losses = _task_terms(spec, w, selected, cfg)
    new_w = np.asarray(w, dtype=np.float64) - cfg.beta * total
    if log is not None:
        log({
            "phase": "maml",
            "round": int(round_index),
            "loss_summary": {
                "task_ids": [t.task_id for t in selected],
                "mean_task_val_loss": float(np.mean(val_losses)),
            },
        })
    return new_w


def run_fedmeta(
    spec,
    w0: np.ndarray,
    client_pool: ClientPool,
    task_pool: Sequence[TaskDataset],
    cfg: FedMetaConfig,
    log: LogFn | None = None,
) -> np.ndarray:
    """Alternate federated blocks and meta blocks for ``cfg.main_rounds`` rounds.

    Round counters for client and task sampling run continuously across main
    rounds, so with a zero meta step size the trajectory coincides exactly
    with plain federated averaging over the same total number of rounds.
    """
    if not task_pool:
        raise ValidationError("task pool is empty")
    ids = [t.task_id for t in task_pool]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate task ids: {sorted(ids)}")
    w = np.array(w0, dtype=np.float64)
    fed_counter = 0
    maml_counter = 0
    fed_log = None
    if log is not None:
        def fed_log(rec):
            log({
                "phase": "fed",
                "round": rec["round"],
                "loss_summary": {
                    "client_ids": rec["client_ids"],
                    "mean_train_loss": rec["mean_train_loss"],
                },
            })
    for _ in range(int(cfg.main_rounds)):
        for _ in range(int(cfg.fed.rounds)):
            try:
                w = fed_round(spec, w, client_pool, cfg.fed, fed_counter, log=fed_log)
            except FedwattError as exc:
                raise type(exc)(f"fed round {fed_counter}: {exc}") from exc
            fed_counter += 1
        for _ in range(int(cfg.meta.maml_rounds)):
            try:
                w = maml_round(spec, w, task_pool, cfg.meta, maml_counter, log=log)
            except FedwattError as exc:
                raise type(exc)(f"maml round {maml_counter}: {exc}") from exc
            maml_counter += 1
    return w


def fine_tune(
    spec, w_global: np.ndarray, task: TaskDataset, cfg: LocalTrainConfig
) -> np.ndarray:
    """Adapt the trained global parameters to one testing task."""
    if not task.train:
        raise ValidationError(f"task {task.task_id!r} has an empty train split")
    return local_update(spec, w_global, task.train, cfg)
