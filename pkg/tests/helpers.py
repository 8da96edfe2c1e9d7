"""Shared test utilities: the quadratic surrogate model and dataset builders.

The quadratic model treats each sample's target vector as a center c_i and
defines L(w) = (1/n) * sum_i ||w - c_i||^2, so grad = 2*(w - mean(c)) and
the Hessian is 2*I.  Registering it against the model dispatch functions
lets every training and meta-learning path run with closed-form answers.
"""

import copy
from dataclasses import dataclass

import numpy as np

from fedwatt import model
from fedwatt.config import DEFAULTS
from fedwatt.data import NormalizationSpec, Seq2PointSample, TaskDataset


@dataclass(frozen=True)
class QuadraticSpec:
    dim: int


@model.param_count.register
def _(spec: QuadraticSpec) -> int:
    return spec.dim


@model.init_params.register
def _(spec: QuadraticSpec, seed: int = 0) -> np.ndarray:
    return np.zeros(spec.dim)


@model.forward.register
def _(spec: QuadraticSpec, w: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    return np.tile(np.asarray(w, dtype=np.float64), (np.asarray(inputs).shape[0], 1))


@model.loss.register
def _(spec: QuadraticSpec, w: np.ndarray, batch: model.Batch) -> float:
    d = np.asarray(w, dtype=np.float64)[None, :] - batch.targets
    return float(np.mean(np.sum(d * d, axis=1)))


@model.grad.register
def _(spec: QuadraticSpec, w: np.ndarray, batch: model.Batch) -> np.ndarray:
    return 2.0 * (np.asarray(w, dtype=np.float64) - batch.targets.mean(axis=0))


def quad_task(centers, task_id: str = "quad") -> TaskDataset:
    """Task whose train/validation/test splits all hold the given centers."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    names = tuple(f"c{j}" for j in range(centers.shape[1]))

    def split(offset):
        return tuple(
            Seq2PointSample(input=np.zeros(2), target=c, source_index=offset + i)
            for i, c in enumerate(centers)
        )

    return TaskDataset(
        task_id=task_id,
        train=split(0),
        validation=split(1000),
        test=split(2000),
        appliance_names=names,
        normalization=NormalizationSpec(lo=0.0, hi=1.0),
    )


def family_document(seed: int) -> dict:
    """Config document for the heterogeneous synthetic household family.

    Ten households (6 clients, 3 meta-training tasks, 3 shifted testing
    tasks) with short windows and two appliances of contrasting duty cycles.
    """
    doc = copy.deepcopy(DEFAULTS)
    doc["experiment"]["seed"] = seed
    doc["experiment"]["algorithms"] = ["fedavg", "fedmeta"]
    doc["dataset"]["synth"].update({
        "n_clients": 6,
        "n_train_tasks": 3,
        "n_test_tasks": 3,
        "days": 2,
        "noise_sigma": 10.0,
        "heterogeneity": 0.3,
        "test_shift": 0.5,
    })
    doc["dataset"]["synth"]["appliances"] = [
        {
            "name": "fridge",
            "on_power_mean": 150.0,
            "on_power_jitter": 25.0,
            "mean_event_duration": 30.0,
            "mean_events_per_day": 24.0,
            "ramp_steps": 1,
        },
        {
            "name": "heater",
            "on_power_mean": 800.0,
            "on_power_jitter": 80.0,
            "mean_event_duration": 12.0,
            "mean_events_per_day": 12.0,
            "ramp_steps": 2,
        },
    ]
    doc["windows"].update({"half_window": 4, "stride": 2, "fractions": [0.7, 0.15, 0.15]})
    doc["model"].update({"hidden": 16, "dense_widths": [32]})
    doc["federated"].update({"rounds": 2, "clients_per_round": 4})
    doc["federated"]["local"].update({"gamma": 0.5, "epochs": 1, "batch_size": 32})
    doc["meta"].update({"beta": 0.1, "maml_rounds": 2, "tasks_per_round": 2})
    doc["meta"]["inner"].update({"gamma": 0.5, "epochs": 1, "batch_size": 8192})
    doc["fedmeta"]["main_rounds"] = 10
    doc["finetune"].update({"gamma": 0.5, "epochs": 1, "batch_size": 32})
    return doc


def tiny_document(seed: int = 0) -> dict:
    """Small fast config exercising every pipeline stage."""
    doc = copy.deepcopy(DEFAULTS)
    doc["experiment"]["seed"] = seed
    doc["dataset"]["synth"].update({
        "n_clients": 3,
        "n_train_tasks": 2,
        "n_test_tasks": 2,
        "days": 1,
        "noise_sigma": 5.0,
    })
    doc["windows"].update({"half_window": 4, "stride": 8, "fractions": [0.6, 0.2, 0.2]})
    doc["model"].update({"hidden": 6, "dense_widths": [8]})
    doc["federated"].update({"rounds": 1, "clients_per_round": 2})
    doc["federated"]["local"].update({"gamma": 0.2, "epochs": 1, "batch_size": 32})
    doc["meta"].update({"beta": 0.05, "maml_rounds": 1, "tasks_per_round": 2})
    doc["meta"]["inner"].update({"gamma": 0.2, "epochs": 1, "batch_size": 8192})
    doc["fedmeta"]["main_rounds"] = 2
    doc["finetune"].update({"gamma": 0.2, "epochs": 1, "batch_size": 32})
    return doc
