"""Versioned network checkpoint file.

Layout: 8-byte magic, u32 format version, u64 header length, UTF-8 JSON
header, then the raw float64 little-endian array payload in header order.
The format is deliberately timestamp-free so identical training runs write
byte-identical files; a checkpoint is identified by the SHA-256 of its
bytes, which the pose database records for provenance checks.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .mlp import MLPParams
from .training import NetworkSet, TrainConfig

MAGIC = b"S3LENETS"
FORMAT_VERSION = 1

_NET_KEYS = ("enc_x", "dec_x", "enc_q", "dec_q", "disc_x", "disc_q")


def _array_entries(nets: NetworkSet):
    for key in _NET_KEYS:
        p: MLPParams = getattr(nets, key)
        for i, w in enumerate(p.weights):
            yield f"{key}.w{i}", w
        for i, b in enumerate(p.biases):
            yield f"{key}.b{i}", b


def save_checkpoint(path, nets: NetworkSet, cfg: TrainConfig) -> str:
    """Write nets + config; returns the checkpoint id (SHA-256 of the file)."""
    entries = list(_array_entries(nets))
    header = {
        "format_version": FORMAT_VERSION,
        "d_z": nets.d_z,
        "train_config": cfg.__dict__ if not hasattr(cfg, "__dataclass_fields__") else
        {k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in entries],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in entries)
    blob = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header_bytes)) + header_bytes + payload
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def checkpoint_id(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_checkpoint(path):
    """Read a checkpoint -> (NetworkSet, TrainConfig, checkpoint_id).

    Validates magic, version, and that all latent dimensions agree.
    """
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    version, header_len = struct.unpack("<IQ", blob[8:20])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(blob[20 : 20 + header_len].decode("utf-8"))
    offset = 20 + header_len

    arrays: dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        arrays[spec["name"]] = arr.astype(np.float64)
        offset += count * 8
    if offset != len(blob):
        raise ValueError(f"{path}: payload length mismatch")

    def rebuild(key: str) -> MLPParams:
        weights, biases = [], []
        i = 0
        while f"{key}.w{i}" in arrays:
            weights.append(arrays[f"{key}.w{i}"])
            biases.append(arrays[f"{key}.b{i}"])
            i += 1
        if not weights:
            raise ValueError(f"{path}: checkpoint is missing network '{key}'")
        return MLPParams(weights, biases)

    d_z = int(header["d_z"])
    nets = NetworkSet(*(rebuild(k) for k in _NET_KEYS), d_z=d_z)
    for key in ("enc_x", "enc_q"):
        out = getattr(nets, key).weights[-1].shape[1]
        if out != d_z:
            raise ValueError(f"{path}: {key} output dim {out} != d_z {d_z}")
    for key in ("dec_x", "dec_q", "disc_x", "disc_q"):
        inp = getattr(nets, key).weights[0].shape[0]
        if inp != d_z:
            raise ValueError(f"{path}: {key} input dim {inp} != d_z {d_z}")
    cfg = TrainConfig(**header["train_config"])
    return nets, cfg, hashlib.sha256(blob).hexdigest()
