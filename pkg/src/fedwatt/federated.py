"""Federated averaging: per-round client sampling, local updates, aggregation.

Raw client data never reaches the aggregation side: clients return only a
flat parameter vector, and :func:`weighted_average` accepts nothing else.
Client updates within a round are independent (all start from the same
incoming parameters), so callers may parallelize them; the reduction order
is fixed by ascending client id regardless of completion order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import TaskDataset
from .errors import FedwattError, ValidationError
from .seeding import derive_rng
from .train import LocalTrainConfig, evaluate, local_update

__all__ = [
    "FedConfig",
    "ClientPool",
    "weighted_average",
    "fed_round",
    "run_fedavg",
    "WEIGHTING_UNIFORM",
    "WEIGHTING_DATA_PROPORTIONAL",
]

WEIGHTING_UNIFORM = "uniform"
WEIGHTING_DATA_PROPORTIONAL = "data_proportional"
_WEIGHTINGS = (WEIGHTING_UNIFORM, WEIGHTING_DATA_PROPORTIONAL)

LogFn = Callable[[dict], None]


@dataclass(frozen=True)
class FedConfig:
    rounds: int
    clients_per_round: int
    local: LocalTrainConfig
    weighting: str = WEIGHTING_UNIFORM
    sampling_seed: int = 0

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ValidationError("rounds must be >= 1")
        if int(self.clients_per_round) < 1:
            raise ValidationError("clients_per_round must be >= 1")
        if self.weighting not in _WEIGHTINGS:
            raise ValidationError(
                f"weighting must be one of {_WEIGHTINGS}, got {self.weighting!r}"
            )


@dataclass(frozen=True)
class ClientPool:
    clients: tuple[TaskDataset, ...]

    def __post_init__(self):
        object.__setattr__(self, "clients", tuple(self.clients))
        if not self.clients:
            raise ValidationError("client pool is empty")
        ids = [c.task_id for c in self.clients]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate client ids: {sorted(ids)}")

    def __len__(self) -> int:
        return len(self.clients)


def weighted_average(
    params: Sequence[np.ndarray], weights: Sequence[float]
) -> np.ndarray:
    """Componentwise weighted sum of parameter vectors, accumulated in order."""
    if len(params) == 0:
        raise ValidationError("nothing to average")
    if len(params) != len(weights):
        raise ValidationError(
            f"{len(params)} parameter vectors but {len(weights)} weights"
        )
    weights = [float(a) for a in weights]
    if min(weights) < 0:
        raise ValidationError("weights must be non-negative")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValidationError(f"weights sum to {sum(weights)}, not 1")
    d = len(params[0])
    out = np.zeros(d)
    for alpha, vec in zip(weights, params):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (d,):
            raise ValidationError("parameter vectors have mismatched lengths")
        out += alpha * vec
    return out


def _sample_clients(
    pool: ClientPool, count: int, sampling_seed: int, round_index: int
) -> list[TaskDataset]:
    if count > len(pool):
        raise ValidationError(
            f"clients_per_round {count} exceeds pool size {len(pool)}"
        )
    rng = derive_rng(sampling_seed, "fed-sampling", round_index)
    idx = rng.choice(len(pool), size=count, replace=False)
    # fixed reduction order regardless of sampling order
    return sorted((pool.clients[i] for i in idx), key=lambda c: c.task_id)


def _client_weights(clients: Sequence[TaskDataset], weighting: str) -> list[float]:
    if weighting == WEIGHTING_UNIFORM:
        return [1.0 / len(clients)] * len(clients)
    sizes = np.array([len(c.train) for c in clients], dtype=np.float64)
    if sizes.sum() == 0:
        raise ValidationError("data-proportional weighting needs non-empty train splits")
    return list(sizes / sizes.sum())


def fed_round(
    spec,
    w: np.ndarray,
    pool: ClientPool,
    cfg: FedConfig,
    round_index: int,
    log: LogFn | None = None,
) -> np.ndarray:
    """One averaging round: sample clients, update each locally, aggregate."""
    selected = _sample_clients(pool, int(cfg.clients_per_round), cfg.sampling_seed, round_index)
    updated = []
    for client in selected:
        try:
            updated.append(local_update(spec, w, client.train, cfg.local))
        except FedwattError as exc:
            raise type(exc)(f"client {client.task_id!r}: {exc}") from exc
    new_w = weighted_average(updated, _client_weights(selected, cfg.weighting))
    if log is not None:
        train_losses = [
            evaluate(spec, wi, c.train) for wi, c in zip(updated, selected)
        ]
        log({
            "round": int(round_index),
            "client_ids": [c.task_id for c in selected],
            "mean_train_loss": float(np.mean(train_losses)),
        })
    return new_w


def run_fedavg(
    spec,
    w0: np.ndarray,
    pool: ClientPool,
    cfg: FedConfig,
    log: LogFn | None = None,
) -> np.ndarray:
    """Chain ``cfg.rounds`` federated rounds from ``w0``."""
    w = np.array(w0, dtype=np.float64)
    for k in range(int(cfg.rounds)):
        w = fed_round(spec, w, pool, cfg, round_index=k, log=log)
    return w
