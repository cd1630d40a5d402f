"""Feasibility-guaranteed inference: nearest-neighbor lookup in the latent space.

A pose database stores feasible joint configurations with their latent codes
(computed once by the configuration encoder). A skeleton query is encoded by
the skeleton encoder and answered with the database entry whose latent is
closest; because only feasible configurations are ever stored, every answer
is feasible by construction, whatever the query looks like. Lookup is an
exact linear scan; sublinear approximate search is a possible extension, not
implemented here.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .latent.training import NetworkSet, encode_config, encode_skeleton
from .robot_model import (
    BONES,
    FEATURE_DIM,
    RobotModel,
    feasible_batch,
    fk_batch,
    normalize_feature_blocks,
    skeleton_features_from_translations,
)

DB_MAGIC = b"S3LEPODB"
DB_FORMAT_VERSION = 1

METRICS = ("euclidean", "cosine")


@dataclass
class PoseDatabase:
    configs: np.ndarray  # (n, N_DoF), all feasible
    latents: np.ndarray  # (n, d_z), encode_config of each entry
    metric: str = "euclidean"
    checkpoint_id: str = ""

    def __len__(self) -> int:
        return len(self.configs)


@dataclass
class RetargetReport:
    """Per-frame lookup details plus sequence aggregates."""

    latent_distances: np.ndarray  # (F,)
    per_bone_cosine: np.ndarray  # (F, 7) between query and retargeted skeleton
    cosine_distances: np.ndarray  # (F,) mean of the 7 bones
    normalized_frames: int  # queries whose blocks needed renormalization
    smoothing_fallbacks: int = 0
    mean_cosine_distance: float = 0.0
    collision_rate: float = 0.0  # of the returned configurations

    @classmethod
    def aggregate(cls, latent_d, per_bone, normalized, collision_rate, fallbacks=0):
        cosine = per_bone.mean(axis=1)
        return cls(
            latent_distances=latent_d,
            per_bone_cosine=per_bone,
            cosine_distances=cosine,
            normalized_frames=normalized,
            smoothing_fallbacks=fallbacks,
            mean_cosine_distance=float(cosine.mean()),
            collision_rate=collision_rate,
        )


def build_database(
    nets: NetworkSet,
    model: RobotModel,
    configs,
    metric: str = "euclidean",
    checkpoint_id: str = "",
):
    """Validate, encode, and store feasible configurations.

    Infeasible rows are rejected (their count is returned alongside the
    database). Raises if nothing survives validation or the metric is
    unknown.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    configs = np.asarray(configs, dtype=np.float64)
    if configs.ndim != 2 or configs.shape[1] != model.n_dof:
        raise ValueError(f"configs must be (n, {model.n_dof}), got {configs.shape}")
    if len(configs) == 0:
        raise ValueError("cannot build a database from zero configurations")
    ok = feasible_batch(model, configs)
    n_rejected = int((~ok).sum())
    kept = configs[ok]
    if len(kept) == 0:
        raise ValueError("no feasible configurations left after validation")
    latents = encode_config(nets, kept)
    db = PoseDatabase(configs=kept, latents=latents, metric=metric, checkpoint_id=checkpoint_id)
    return db, n_rejected


def _latent_distances(db: PoseDatabase, z: np.ndarray) -> np.ndarray:
    if db.metric == "euclidean":
        return np.linalg.norm(db.latents - z, axis=1)
    # cosine: 1 - cos(z_db, z)
    qn = np.linalg.norm(z)
    dn = np.linalg.norm(db.latents, axis=1)
    denom = np.maximum(dn * qn, 1e-300)
    return 1.0 - (db.latents @ z) / denom


def prepare_query(x) -> tuple[np.ndarray, bool]:
    """Coerce a raw 21-vector into a valid skeleton feature.

    Non-unit blocks are renormalized; returns (feature, was_normalized).
    Rejects non-finite input and zero-length blocks.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (FEATURE_DIM,):
        raise ValueError(f"query must have shape ({FEATURE_DIM},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("query contains non-finite values")
    norms = np.linalg.norm(x.reshape(7, 3), axis=1)
    if np.all(np.abs(norms - 1.0) <= 1e-6):
        return x, False
    return normalize_feature_blocks(x), True


def retarget_pose(nets: NetworkSet, db: PoseDatabase, x_star) -> tuple[np.ndarray, float]:
    """Nearest database entry to the encoded query; (config, latent distance).

    Deterministic: distance ties resolve to the lowest entry index. The
    returned configuration is feasible unconditionally because the database
    only holds feasible entries.
    """
    if len(db) == 0:
        raise ValueError("pose database is empty")
    x, _ = prepare_query(x_star)
    z = encode_skeleton(nets, x)
    d = _latent_distances(db, z)
    idx = int(np.argmin(d))  # argmin returns the first minimum: lowest index
    return db.configs[idx].copy(), float(d[idx])


def retarget_sequence(
    nets: NetworkSet,
    db: PoseDatabase,
    model: RobotModel,
    frames,
    smoothing: float | None = None,
):
    """Per-frame independent retargeting of a skeleton sequence.

    frames: (F, 21). Optional exponential smoothing (coefficient in (0,1),
    default off) blends consecutive output configurations in joint space;
    a smoothed frame is re-verified and falls back to its unsmoothed lookup
    result if the blend is infeasible. Returns (configs (F, N), report).
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != FEATURE_DIM or len(frames) == 0:
        raise ValueError(f"frames must be (F, {FEATURE_DIM}) and nonempty")
    configs = np.empty((len(frames), model.n_dof))
    latent_d = np.empty(len(frames))
    queries = np.empty_like(frames)
    normalized = 0
    for i, raw in enumerate(frames):
        x, was_norm = prepare_query(raw)
        normalized += was_norm
        q, d = retarget_pose(nets, db, x)
        configs[i] = q
        latent_d[i] = d
        queries[i] = x

    fallbacks = 0
    if smoothing is not None:
        if not 0.0 < smoothing < 1.0:
            raise ValueError("smoothing coefficient must be in (0, 1)")
        smoothed = configs.copy()
        for i in range(1, len(configs)):
            cand = smoothing * smoothed[i - 1] + (1.0 - smoothing) * configs[i]
            if feasible_batch(model, cand[None])[0]:
                smoothed[i] = cand
            else:
                fallbacks += 1  # keep the raw lookup result for this frame
        configs = smoothed

    _, T = fk_batch(model, configs)
    out_feats = skeleton_features_from_translations(model, T)
    per_bone = 1.0 - np.sum(
        queries.reshape(-1, 7, 3) * out_feats.reshape(-1, 7, 3), axis=2
    )
    rate = collision_rate(model, configs)
    report = RetargetReport.aggregate(latent_d, per_bone, normalized, rate, fallbacks)
    return configs, report


def cosine_distance_metric(a, b) -> float:
    """Mean over the 7 skeleton bones of (1 - dot(a_block, b_block))."""
    a = np.asarray(a, dtype=np.float64).reshape(7, 3)
    b = np.asarray(b, dtype=np.float64).reshape(7, 3)
    return float(np.mean(1.0 - np.sum(a * b, axis=1)))


def cosine_distance_batch(A, B) -> np.ndarray:
    """Row-wise mean bone cosine distance for (n, 21) arrays."""
    A = np.asarray(A, dtype=np.float64).reshape(-1, 7, 3)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 7, 3)
    return np.mean(1.0 - np.sum(A * B, axis=2), axis=1)


def collision_rate(model: RobotModel, configs) -> float:
    """Fraction of configurations violating limits or self-collision."""
    configs = np.asarray(configs, dtype=np.float64)
    if len(configs) == 0:
        return 0.0
    return float(1.0 - feasible_batch(model, configs).mean())


# ---------------------------------------------------------------------------
# database file (checkpoint id + packed entries)
# ---------------------------------------------------------------------------


def save_database(path, db: PoseDatabase) -> str:
    header = {
        "format_version": DB_FORMAT_VERSION,
        "metric": db.metric,
        "checkpoint_id": db.checkpoint_id,
        "n_entries": len(db),
        "n_dof": int(db.configs.shape[1]),
        "d_z": int(db.latents.shape[1]),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = (
        np.ascontiguousarray(db.configs, dtype="<f8").tobytes()
        + np.ascontiguousarray(db.latents, dtype="<f8").tobytes()
    )
    blob = DB_MAGIC + struct.pack("<IQ", DB_FORMAT_VERSION, len(header_bytes)) + header_bytes + payload
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load_database(path) -> PoseDatabase:
    blob = Path(path).read_bytes()
    if blob[:8] != DB_MAGIC:
        raise ValueError(f"{path}: not a pose database file (bad magic)")
    version, header_len = struct.unpack("<IQ", blob[8:20])
    if version != DB_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported database version {version}")
    header = json.loads(blob[20 : 20 + header_len].decode("utf-8"))
    n, n_dof, d_z = header["n_entries"], header["n_dof"], header["d_z"]
    offset = 20 + header_len
    configs = np.frombuffer(blob, dtype="<f8", count=n * n_dof, offset=offset).reshape(n, n_dof)
    offset += n * n_dof * 8
    latents = np.frombuffer(blob, dtype="<f8", count=n * d_z, offset=offset).reshape(n, d_z)
    offset += n * d_z * 8
    if offset != len(blob):
        raise ValueError(f"{path}: payload length mismatch")
    return PoseDatabase(
        configs=configs.astype(np.float64),
        latents=latents.astype(np.float64),
        metric=header["metric"],
        checkpoint_id=header["checkpoint_id"],
    )


# ---------------------------------------------------------------------------
# trajectory + metrics output files
# ---------------------------------------------------------------------------


def write_trajectory(path, times, configs, latent_distances=None, cosine_distances=None) -> None:
    """Retarget output: JSON lines of {t, q, latent_distance, cosine_distance?}."""
    with Path(path).open("w") as fh:
        for i, (t, q) in enumerate(zip(times, configs)):
            rec = {"t": float(t), "q": list(q)}
            if latent_distances is not None:
                rec["latent_distance"] = float(latent_distances[i])
            if cosine_distances is not None:
                rec["cosine_distance"] = float(cosine_distances[i])
            fh.write(json.dumps(rec) + "\n")


def read_trajectory(path):
    """Parse a trajectory file -> (times (F,), configs (F, N))."""
    times, rows = [], []
    with Path(path).open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                times.append(float(rec["t"]))
                rows.append(rec["q"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: cannot parse trajectory: {exc}") from exc
    return np.asarray(times), np.asarray(rows, dtype=np.float64)


def write_metrics_csv(path, report: RetargetReport) -> None:
    """Per-frame bone distances plus one aggregate row."""
    bone_cols = [f"{a}_to_{b}" for a, b in BONES]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "latent_distance", *bone_cols, "cosine_distance"])
        for i in range(len(report.cosine_distances)):
            writer.writerow(
                [
                    i,
                    f"{report.latent_distances[i]:.9g}",
                    *(f"{v:.9g}" for v in report.per_bone_cosine[i]),
                    f"{report.cosine_distances[i]:.9g}",
                ]
            )
        writer.writerow(
            [
                "aggregate",
                f"{report.latent_distances.mean():.9g}",
                *(f"{v:.9g}" for v in report.per_bone_cosine.mean(axis=0)),
                f"{report.mean_cosine_distance:.9g}",
            ]
        )
