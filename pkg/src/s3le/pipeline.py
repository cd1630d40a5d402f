"""Glue between sampled datasets and the generic trainer.

Maps the three data roles onto the trainer's arrays: skeleton-specific data
feeds the skeleton-domain autoencoder, robot-specific data the configuration
autoencoder, tuple (x_feasible, q_feasible) pairs the consensus glue, and
tuple (x_relaxed, x_feasible) pairs the NT-Xent positives, where the relaxed
side is replaced by a block-renormalized mixup half the time.
"""

from __future__ import annotations

import numpy as np

from .latent.training import NetworkSet, TrainConfig, TrainData, train_networks
from .robot_model import RobotModel
from .sampling import Dataset, mixup_blocks


def mixup_pair_augment(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Replace half the relaxed-side rows with mixup blends of (a, b).

    Rows whose blend degenerates (antipodal bones at beta near 0.5) keep the
    raw relaxed side. Draw counts are data-independent for determinism.
    """
    use = rng.random(len(a)) < 0.5
    betas = rng.uniform(size=len(a))
    out = a.copy()
    if np.any(use):
        mixed = betas[use, None] * a[use] + (1.0 - betas[use, None]) * b[use]
        blocks = mixed.reshape(-1, 7, 3)
        norms = np.linalg.norm(blocks, axis=2, keepdims=True)
        good = (norms > 1e-9).all(axis=(1, 2))
        safe = np.where(norms > 1e-9, norms, 1.0)
        renorm = (blocks / safe).reshape(len(mixed), -1)
        rows = np.where(use)[0][good]
        out[rows] = renorm[good]
    return out


def dataset_to_train_data(dataset: Dataset, use_mixup: bool = True) -> TrainData:
    if not dataset.tuples:
        raise ValueError("dataset has no paired tuples")
    glue_x = np.stack([t.x_feasible for t in dataset.tuples])
    glue_q = np.stack([t.q_feasible for t in dataset.tuples])
    pair_a = np.stack([t.x_relaxed for t in dataset.tuples])
    pair_b = glue_x
    return TrainData(
        x_domain=np.asarray(dataset.skeleton_only, dtype=np.float64),
        q_domain=np.asarray(dataset.robot_only, dtype=np.float64),
        glue_x=glue_x,
        glue_q=glue_q,
        pair_a=pair_a,
        pair_b=pair_b,
        pair_augment=mixup_pair_augment if use_mixup else None,
    )


def train(dataset: Dataset, cfg: TrainConfig, model: RobotModel):
    """Train the shared latent space on a sampled dataset.

    Returns (NetworkSet, telemetry rows). Input dimensions are taken from
    the dataset and checked against the robot model.
    """
    data = dataset_to_train_data(dataset)
    if data.q_domain.shape[1] != model.n_dof:
        raise ValueError(
            f"robot-domain data has {data.q_domain.shape[1]} DoF, model has {model.n_dof}"
        )
    return train_networks(data, cfg)


def merge_datasets(*datasets: Dataset) -> Dataset:
    tuples = [t for d in datasets for t in d.tuples]
    robot = [d.robot_only for d in datasets if len(d.robot_only)]
    skel = [d.skeleton_only for d in datasets if len(d.skeleton_only)]
    return Dataset(
        tuples=tuples,
        robot_only=np.concatenate(robot) if robot else np.zeros((0, 0)),
        skeleton_only=np.concatenate(skel) if skel else np.zeros((0, 21)),
    )
