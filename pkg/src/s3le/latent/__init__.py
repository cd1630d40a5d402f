"""Shared latent space: network substrate, losses, training, checkpoints."""

from .checkpoint import checkpoint_id, load_checkpoint, save_checkpoint
from .losses import (
    consensus_grads,
    consensus_loss,
    discriminator_grads,
    encoder_adversarial_grads,
    ntxent_encoder_grads,
    ntxent_loss,
    ntxent_loss_grads_z,
    reconstruction_grads,
    wae_loss,
)
from .mlp import MLPParams, add_scaled, init_mlp, mlp_backward, mlp_forward, mlp_forward_cached, zeros_like_params
from .training import (
    NetworkSet,
    TrainConfig,
    TrainData,
    TrainingDivergedError,
    decode_config,
    decode_skeleton,
    encode_config,
    encode_skeleton,
    init_networks,
    train_networks,
    write_telemetry_csv,
)

__all__ = [
    "MLPParams",
    "NetworkSet",
    "TrainConfig",
    "TrainData",
    "TrainingDivergedError",
    "add_scaled",
    "checkpoint_id",
    "consensus_grads",
    "consensus_loss",
    "decode_config",
    "decode_skeleton",
    "discriminator_grads",
    "encode_config",
    "encode_skeleton",
    "encoder_adversarial_grads",
    "init_mlp",
    "init_networks",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "mlp_forward_cached",
    "ntxent_encoder_grads",
    "ntxent_loss",
    "ntxent_loss_grads_z",
    "reconstruction_grads",
    "save_checkpoint",
    "train_networks",
    "wae_loss",
    "write_telemetry_csv",
    "zeros_like_params",
]
