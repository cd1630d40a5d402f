"""Shared-latent-space training loop.

Two encoder/decoder pairs (skeleton features and joint configurations) are
trained as adversarial autoencoders against a standard-normal latent prior,
glued by the latent consensus loss on paired data, with NT-Xent making the
skeleton encoder projection-invariant: a relaxed skeleton (or a mixup of it)
and its feasible projection form a positive pair because they map to the
same robot configuration.

Each step updates the two discriminators on their own partition first, then
the encoders/decoders on the weighted sum of the remaining terms. Plain
gradient descent with a fixed learning rate keeps the gradient checks exact;
a fixed seed makes runs bit-reproducible.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .losses import (
    consensus_grads,
    discriminator_grads,
    encoder_adversarial_grads,
    ntxent_encoder_grads,
    reconstruction_grads,
)
from .mlp import MLPParams, add_scaled, init_mlp, mlp_forward, params_finite

TELEMETRY_FIELDS = (
    "step",
    "recon_x",
    "adv_x",
    "disc_x",
    "recon_q",
    "adv_q",
    "disc_q",
    "consensus",
    "ntxent",
    "encdec_total",
)


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, message: str):
        super().__init__(f"training diverged at step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    d_z: int = 8
    lr: float = 1e-3
    beta_wae: float = 1.0  # adversarial prior-fitting coefficient
    tau: float = 1.0  # NT-Xent temperature
    w_wae_x: float = 1.0
    w_wae_q: float = 1.0
    w_consensus: float = 1.0
    w_ntxent: float = 1.0
    batch_size: int = 256
    steps: int = 2000
    seed: int = 0
    hidden_units: int = 512
    hidden_layers: int = 3

    def __post_init__(self):
        for name in ("d_z", "lr", "beta_wae", "tau", "batch_size", "steps",
                     "hidden_units", "hidden_layers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"TrainConfig.{name} must be positive")
        for name in ("w_wae_x", "w_wae_q", "w_consensus", "w_ntxent"):
            if getattr(self, name) < 0:
                raise ValueError(f"TrainConfig.{name} must be >= 0")


@dataclass
class NetworkSet:
    enc_x: MLPParams
    dec_x: MLPParams
    enc_q: MLPParams
    dec_q: MLPParams
    disc_x: MLPParams
    disc_q: MLPParams
    d_z: int

    def copy(self) -> "NetworkSet":
        return NetworkSet(
            *(getattr(self, k).copy() for k in ("enc_x", "dec_x", "enc_q", "dec_q", "disc_x", "disc_q")),
            d_z=self.d_z,
        )


@dataclass
class TrainData:
    """Raw training arrays; the robot pipeline and the 2-D synthetic
    benchmark both reduce to this shape.

    pair_a/pair_b are the NT-Xent positive pairs (relaxed side, feasible
    side), both encoded by the same domain-X encoder. pair_augment, when
    given, may replace the relaxed side per batch (mixup)."""

    x_domain: np.ndarray  # (n, d_x) unpaired domain-X data
    q_domain: np.ndarray  # (m, d_q) unpaired domain-Q data
    glue_x: np.ndarray  # (k, d_x) paired with glue_q
    glue_q: np.ndarray  # (k, d_q)
    pair_a: np.ndarray  # (p, d_x)
    pair_b: np.ndarray  # (p, d_x)
    pair_augment: Callable | None = None  # (a, b, rng) -> a'

    def validate(self):
        for name in ("x_domain", "q_domain", "glue_x", "glue_q", "pair_a", "pair_b"):
            arr = getattr(self, name)
            if len(arr) == 0:
                raise ValueError(f"TrainData.{name} is empty")
        if len(self.glue_x) != len(self.glue_q):
            raise ValueError("glue sides must have equal length")
        if len(self.pair_a) != len(self.pair_b):
            raise ValueError("pair sides must have equal length")


def init_networks(cfg: TrainConfig, d_x: int, d_q: int, rng: np.random.Generator) -> NetworkSet:
    hidden = [cfg.hidden_units] * cfg.hidden_layers
    return NetworkSet(
        enc_x=init_mlp(rng, [d_x] + hidden + [cfg.d_z]),
        dec_x=init_mlp(rng, [cfg.d_z] + hidden + [d_x]),
        enc_q=init_mlp(rng, [d_q] + hidden + [cfg.d_z]),
        dec_q=init_mlp(rng, [cfg.d_z] + hidden + [d_q]),
        disc_x=init_mlp(rng, [cfg.d_z] + hidden + [1]),
        disc_q=init_mlp(rng, [cfg.d_z] + hidden + [1]),
        d_z=cfg.d_z,
    )


def train_networks(data: TrainData, cfg: TrainConfig):
    """Run cfg.steps training iterations; returns (NetworkSet, telemetry rows).

    Deterministic for a fixed (data, cfg): one seeded generator drives
    initialization and every batch draw in a fixed order. Raises
    TrainingDivergedError if any loss or parameter goes non-finite.
    """
    data.validate()
    rng = np.random.default_rng(cfg.seed)
    nets = init_networks(cfg, data.x_domain.shape[1], data.q_domain.shape[1], rng)
    telemetry: list[dict] = []

    bs = cfg.batch_size
    n_pairs = max(2, bs // 2)
    for step in range(cfg.steps):
        # batch draws happen in a fixed order so ablations (weight = 0) see
        # identical data streams
        batch_x = data.x_domain[rng.integers(0, len(data.x_domain), bs)]
        prior_x = rng.standard_normal((bs, cfg.d_z))
        batch_q = data.q_domain[rng.integers(0, len(data.q_domain), bs)]
        prior_q = rng.standard_normal((bs, cfg.d_z))
        glue_idx = rng.integers(0, len(data.glue_x), bs)
        pair_idx = rng.integers(0, len(data.pair_a), n_pairs)
        pair_a = data.pair_a[pair_idx]
        pair_b = data.pair_b[pair_idx]
        if data.pair_augment is not None:
            pair_a = data.pair_augment(pair_a, pair_b, rng)

        # (a) discriminators on their own partition of the adversarial loss
        disc_x_loss, g_disc_x = discriminator_grads(
            nets.enc_x, nets.disc_x, batch_x, prior_x, cfg.beta_wae
        )
        add_scaled(nets.disc_x, g_disc_x, -cfg.lr * cfg.w_wae_x)
        disc_q_loss, g_disc_q = discriminator_grads(
            nets.enc_q, nets.disc_q, batch_q, prior_q, cfg.beta_wae
        )
        add_scaled(nets.disc_q, g_disc_q, -cfg.lr * cfg.w_wae_q)

        # (b) encoders/decoders on the weighted remaining terms
        recon_x, ge_rx, gd_rx = reconstruction_grads(nets.enc_x, nets.dec_x, batch_x)
        adv_x, ge_ax = encoder_adversarial_grads(nets.enc_x, nets.disc_x, batch_x, cfg.beta_wae)
        recon_q, ge_rq, gd_rq = reconstruction_grads(nets.enc_q, nets.dec_q, batch_q)
        adv_q, ge_aq = encoder_adversarial_grads(nets.enc_q, nets.disc_q, batch_q, cfg.beta_wae)
        cons, ge_cx, ge_cq = consensus_grads(
            nets.enc_x, nets.enc_q, data.glue_x[glue_idx], data.glue_q[glue_idx]
        )
        if cfg.w_ntxent > 0:
            stacked = np.empty((2 * n_pairs, pair_a.shape[1]))
            stacked[0::2] = pair_a
            stacked[1::2] = pair_b
            ntx, ge_ntx = ntxent_encoder_grads(nets.enc_x, stacked, cfg.tau)
        else:
            ntx, ge_ntx = 0.0, None

        total = (
            cfg.w_wae_x * (recon_x + adv_x)
            + cfg.w_wae_q * (recon_q + adv_q)
            + cfg.w_consensus * cons
            + cfg.w_ntxent * ntx
        )
        if not np.isfinite(total) or not np.isfinite(disc_x_loss) or not np.isfinite(disc_q_loss):
            raise TrainingDivergedError(step, "non-finite loss")

        add_scaled(nets.enc_x, ge_rx, -cfg.lr * cfg.w_wae_x)
        add_scaled(nets.dec_x, gd_rx, -cfg.lr * cfg.w_wae_x)
        add_scaled(nets.enc_x, ge_ax, -cfg.lr * cfg.w_wae_x)
        add_scaled(nets.enc_q, ge_rq, -cfg.lr * cfg.w_wae_q)
        add_scaled(nets.dec_q, gd_rq, -cfg.lr * cfg.w_wae_q)
        add_scaled(nets.enc_q, ge_aq, -cfg.lr * cfg.w_wae_q)
        add_scaled(nets.enc_x, ge_cx, -cfg.lr * cfg.w_consensus)
        add_scaled(nets.enc_q, ge_cq, -cfg.lr * cfg.w_consensus)
        if ge_ntx is not None:
            add_scaled(nets.enc_x, ge_ntx, -cfg.lr * cfg.w_ntxent)

        telemetry.append(
            {
                "step": step,
                "recon_x": recon_x,
                "adv_x": adv_x,
                "disc_x": disc_x_loss,
                "recon_q": recon_q,
                "adv_q": adv_q,
                "disc_q": disc_q_loss,
                "consensus": cons,
                "ntxent": ntx,
                "encdec_total": total,
            }
        )
        if step % 200 == 0 and not all(
            params_finite(getattr(nets, k))
            for k in ("enc_x", "dec_x", "enc_q", "dec_q", "disc_x", "disc_q")
        ):
            raise TrainingDivergedError(step, "non-finite parameters")
    return nets, telemetry


def write_telemetry_csv(path, telemetry: list[dict]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TELEMETRY_FIELDS)
        writer.writeheader()
        writer.writerows(telemetry)


# thin deterministic wrappers over the forward pass


def encode_skeleton(nets: NetworkSet, x) -> np.ndarray:
    return mlp_forward(nets.enc_x, x)


def encode_config(nets: NetworkSet, q) -> np.ndarray:
    return mlp_forward(nets.enc_q, q)


def decode_config(nets: NetworkSet, z) -> np.ndarray:
    return mlp_forward(nets.dec_q, z)


def decode_skeleton(nets: NetworkSet, z) -> np.ndarray:
    return mlp_forward(nets.dec_x, z)


def train_config_to_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
