"""2-D synthetic benchmark for the projection-invariant latent space.

Relaxed X is the square [0,2]^2, Feasible X its subsquare [0,1]^2, and the
projection clips each coordinate at 1 - a many-to-one map exactly like the
robot setting, where distinct relaxed poses share one feasible projection.
Feasible Y is an affine image of Feasible X (rotation + scale + shift), so
ground truth is known for every query and the mapping error is measurable.

Two models are trained on identical data, seeds, and configuration, except
that the baseline has the contrastive-loss weight zeroed; the comparison
shows whether NT-Xent improves the mapping where the projection folds.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .latent.mlp import mlp_forward
from .latent.training import TrainConfig, train_networks, TrainData

ROTATION_DEG = 30.0
SCALE = 0.8
TRANSLATION = (2.0, 0.5)


def _affine():
    th = np.deg2rad(ROTATION_DEG)
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    return SCALE * R, np.array(TRANSLATION)


def synth_project(p) -> np.ndarray:
    """Projection onto Feasible X: componentwise min with 1. Idempotent."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < -1e-12) or np.any(p > 2.0 + 1e-12):
        raise ValueError("point outside Relaxed X = [0,2]^2")
    return np.minimum(p, 1.0)


def synth_ground_truth(p) -> np.ndarray:
    """Fixed invertible affine map Feasible X -> Feasible Y (rotate 30 deg,
    scale 0.8, translate (2, 0.5)). Accepts (..., 2)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
        raise ValueError("point outside Feasible X = [0,1]^2")
    A, t = _affine()
    return p @ A.T + t


def synth_ground_truth_inverse(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    A, t = _affine()
    return (y - t) @ np.linalg.inv(A).T


def _default_train() -> TrainConfig:
    return TrainConfig(d_z=2, hidden_units=64, hidden_layers=3, steps=8000, batch_size=256)


@dataclass(frozen=True)
class SyntheticConfig:
    n_relaxed: int = 10_000
    n_glue: int = 20
    n_y_domain: int = 10_000  # unpaired Feasible-Y training samples
    n_database: int = 2_000  # Feasible-Y lookup points at retarget time
    grid_side: int = 50  # held-out evaluation grid resolution
    seed: int = 0
    train: TrainConfig = field(default_factory=_default_train)

    def __post_init__(self):
        if self.n_glue < 2:
            raise ValueError("n_glue must be >= 2")


@dataclass
class SyntheticVariantResult:
    name: str
    mean_error: float
    feasible_region_error: float
    invariant_region_error: float
    retargeted: np.ndarray  # (G, 2)
    config: dict


@dataclass
class SyntheticReport:
    grid: np.ndarray  # (G, 2) evaluation inputs
    projected: np.ndarray  # (G, 2)
    ground_truth: np.ndarray  # (G, 2)
    variants: dict[str, SyntheticVariantResult]
    invariant_error_reduction: float  # relative, ntxent vs baseline

    def summary(self) -> dict:
        return {
            "variants": {
                name: {
                    "mean_error": v.mean_error,
                    "feasible_region_error": v.feasible_region_error,
                    "invariant_region_error": v.invariant_region_error,
                    "config": v.config,
                }
                for name, v in self.variants.items()
            },
            "invariant_error_reduction": self.invariant_error_reduction,
        }


def _retarget_grid(nets, grid, db_y):
    z_grid = mlp_forward(nets.enc_x, grid)
    z_db = mlp_forward(nets.enc_q, db_y)
    out = np.empty_like(grid)
    for i, z in enumerate(z_grid):
        d = np.linalg.norm(z_db - z, axis=1)
        out[i] = db_y[int(np.argmin(d))]
    return out


def run_synthetic(cfg: SyntheticConfig) -> SyntheticReport:
    """Train with and without NT-Xent on identical data and compare mapping
    error against ground truth on a held-out uniform grid over Relaxed X."""
    rng = np.random.default_rng(cfg.seed)
    relaxed = rng.uniform(0.0, 2.0, size=(cfg.n_relaxed, 2))
    projected = synth_project(relaxed)
    y_domain = synth_ground_truth(rng.uniform(0.0, 1.0, size=(cfg.n_y_domain, 2)))
    glue_x = projected[: cfg.n_glue]
    glue_y = synth_ground_truth(glue_x)
    db_y = synth_ground_truth(rng.uniform(0.0, 1.0, size=(cfg.n_database, 2)))

    data = TrainData(
        x_domain=relaxed,
        q_domain=y_domain,
        glue_x=glue_x,
        glue_q=glue_y,
        pair_a=relaxed,
        pair_b=projected,
    )

    side = np.linspace(0.0, 2.0, cfg.grid_side)
    gx, gy = np.meshgrid(side, side, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    grid_proj = synth_project(grid)
    target = synth_ground_truth(grid_proj)
    invariant = (grid[:, 0] > 1.0) | (grid[:, 1] > 1.0)

    variants: dict[str, SyntheticVariantResult] = {}
    for name, train_cfg in (
        ("s3le", cfg.train),
        ("no-ntxent", replace(cfg.train, w_ntxent=0.0)),
    ):
        nets, _ = train_networks(data, train_cfg)
        retargeted = _retarget_grid(nets, grid, db_y)
        err = np.linalg.norm(retargeted - target, axis=1)
        variants[name] = SyntheticVariantResult(
            name=name,
            mean_error=float(err.mean()),
            feasible_region_error=float(err[~invariant].mean()),
            invariant_region_error=float(err[invariant].mean()),
            retargeted=retargeted,
            config={k: getattr(train_cfg, k) for k in train_cfg.__dataclass_fields__},
        )

    base = variants["no-ntxent"].invariant_region_error
    ours = variants["s3le"].invariant_region_error
    reduction = float((base - ours) / base) if base > 0 else 0.0
    return SyntheticReport(
        grid=grid,
        projected=grid_proj,
        ground_truth=target,
        variants=variants,
        invariant_error_reduction=reduction,
    )
