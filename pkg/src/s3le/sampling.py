"""Training-data generation and the JSON-lines file formats.

Three data roles feed training:
  * paired tuples (x_relaxed, x_feasible, q_relaxed, q_feasible), sampled
    from the robot's kinematics alone via alpha-relaxed joint ranges and
    the feasibility projection,
  * robot-specific feasible configurations (rejection sampling),
  * skeleton-specific features (relaxed skeletons without correspondence).

Externally produced motion-capture pairs are ingested from the same tuple
file format; a built-in generator of smooth sinusoid joint trajectories
stands in for that source at desk scale.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .projection import ProjectionConfig, project_skeleton_batch
from .robot_model import (
    FEATURE_DIM,
    LANDMARK_NAMES,
    RobotModel,
    feasible_batch,
    fk_batch,
    normalize_feature_blocks,
    skeleton_feature_from_joints,
    skeleton_features_from_translations,
)

SOURCE_KINEMATIC = "kinematic-sampled"
SOURCE_MOCAP = "mocap-ingested"
SOURCE_MIXUP = "mixup"


@dataclass(frozen=True)
class SamplingConfig:
    alpha: float = 0.5  # joint-range relaxation constant
    seed: int = 0
    n_pairs: int = 100_000
    n_robot_specific: int = 30_000
    n_skeleton_specific: int = 100_000

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class PairedTuple:
    x_relaxed: np.ndarray  # (21,)
    x_feasible: np.ndarray  # (21,)
    q_relaxed: np.ndarray  # (N_DoF,)
    q_feasible: np.ndarray  # (N_DoF,)
    source: str = SOURCE_KINEMATIC


@dataclass
class Dataset:
    tuples: list[PairedTuple] = field(default_factory=list)
    robot_only: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    skeleton_only: np.ndarray = field(default_factory=lambda: np.zeros((0, FEATURE_DIM)))


def relaxed_limits(model: RobotModel, alpha: float):
    """Per-joint alpha-relaxed ranges: each [l,u] widens by alpha/2*(u-l) on both sides."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    half = 0.5 * alpha * (model.upper - model.lower)
    return model.lower - half, model.upper + half


def sample_relaxed_configs(model: RobotModel, alpha: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """n configurations uniform over the relaxed ranges -> (n, N_DoF)."""
    lo, hi = relaxed_limits(model, alpha)
    return rng.uniform(lo, hi, size=(n, model.n_dof))


def sample_relaxed_config(model: RobotModel, alpha: float, rng: np.random.Generator) -> np.ndarray:
    return sample_relaxed_configs(model, alpha, rng, 1)[0]


def generate_tuples(
    model: RobotModel,
    alpha: float,
    rng: np.random.Generator,
    n: int,
    proj_cfg: ProjectionConfig | None = None,
    chunk: int = 8192,
) -> list[PairedTuple]:
    """n paired tuples from the kinematic sampling chain, in seed order.

    Chain per tuple: q_relaxed ~ uniform over relaxed ranges, x_relaxed from
    FK, q_feasible by projection, x_feasible from FK of the projection.
    """
    out: list[PairedTuple] = []
    while len(out) < n:
        b = min(chunk, n - len(out))
        Q = sample_relaxed_configs(model, alpha, rng, b)
        xr, xf, qf = project_skeleton_batch(model, Q, proj_cfg)
        out.extend(
            PairedTuple(xr[i], xf[i], Q[i], qf[i]) for i in range(b)
        )
    return out


def generate_tuple(
    model: RobotModel,
    alpha: float,
    rng: np.random.Generator,
    proj_cfg: ProjectionConfig | None = None,
) -> PairedTuple:
    return generate_tuples(model, alpha, rng, 1, proj_cfg)[0]


def mixup_blocks(x_relaxed: np.ndarray, x_feasible: np.ndarray, beta) -> np.ndarray:
    """Convex combination of two skeleton features, renormalized per block.

    Raw interpolation of unit vectors leaves the feature manifold, so each
    3-vector block is rescaled back to unit length. Raises on an exactly
    antipodal block pair at beta = 0.5 (zero-sum block).
    """
    beta = np.asarray(beta, dtype=np.float64)
    mixed = beta[..., None] * x_relaxed + (1.0 - beta[..., None]) * x_feasible
    return normalize_feature_blocks(mixed)


def mixup_augment(t: PairedTuple, rng: np.random.Generator, max_retries: int = 100) -> np.ndarray:
    """Auxiliary relaxed skeleton for t: beta ~ U[0,1] blend of x_relaxed
    and x_feasible, tied to the same q_feasible. Resamples beta if a block
    degenerates (antipodal bones cancelling)."""
    for _ in range(max_retries):
        beta = rng.uniform()
        try:
            return mixup_blocks(t.x_relaxed, t.x_feasible, beta)
        except ValueError:
            continue
    raise ValueError("mixup kept producing degenerate blocks; features look antipodal")


def sample_robot_specific(
    model: RobotModel, rng: np.random.Generator, n: int, chunk: int = 8192
) -> np.ndarray:
    """n feasible configurations: uniform within exact limits, rejecting
    self-colliding draws -> (n, N_DoF)."""
    kept: list[np.ndarray] = []
    total = 0
    while total < n:
        Q = rng.uniform(model.lower, model.upper, size=(chunk, model.n_dof))
        ok = feasible_batch(model, Q)
        good = Q[ok]
        kept.append(good)
        total += len(good)
    return np.concatenate(kept)[:n]


def sample_skeleton_specific(
    model: RobotModel, alpha: float, rng: np.random.Generator, n: int
) -> np.ndarray:
    """n skeleton-domain features: relaxed skeletons without correspondence -> (n, 21)."""
    Q = sample_relaxed_configs(model, alpha, rng, n)
    _, T = fk_batch(model, Q)
    return skeleton_features_from_translations(model, T)


def make_mocap_pairs(
    model: RobotModel,
    rng: np.random.Generator,
    n_frames: int,
    alpha: float = 0.5,
    n_harmonics: int = 3,
    frame_dt: float = 1.0 / 30.0,
    proj_cfg: ProjectionConfig | None = None,
) -> list[PairedTuple]:
    """Desk-scale stand-in for optimization-retargeted motion-capture pairs.

    Joint trajectories are sums of low-frequency sinusoids through the
    relaxed configuration space; projection supplies the feasible half of
    each tuple, exactly as the kinematic sampling chain does.
    """
    lo, hi = relaxed_limits(model, alpha)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    freqs = rng.uniform(0.05, 0.4, size=(n_harmonics, model.n_dof))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_harmonics, model.n_dof))
    weights = rng.dirichlet(np.ones(n_harmonics), size=model.n_dof).T  # (H, N)
    t = (np.arange(n_frames) * frame_dt)[:, None, None]  # (F, 1, 1)
    waves = np.sin(2.0 * np.pi * freqs * t + phases)  # (F, H, N)
    Q = mid + half * np.einsum("fhn,hn->fn", waves, weights)
    xr, xf, qf = project_skeleton_batch(model, Q, proj_cfg)
    return [
        PairedTuple(xr[i], xf[i], Q[i], qf[i], source="synthetic-mocap")
        for i in range(n_frames)
    ]


# ---------------------------------------------------------------------------
# file formats (JSON lines)
# ---------------------------------------------------------------------------


def write_tuples(path, tuples: list[PairedTuple]) -> None:
    """Tuple file: one JSON object per line with x/q pairs and a source tag."""
    path = Path(path)
    with path.open("w") as fh:
        for t in tuples:
            fh.write(
                json.dumps(
                    {
                        "x_relaxed": t.x_relaxed.tolist(),
                        "x_feasible": t.x_feasible.tolist(),
                        "q_relaxed": t.q_relaxed.tolist(),
                        "q_feasible": t.q_feasible.tolist(),
                        "source": t.source,
                    }
                )
                + "\n"
            )


def read_tuples(path) -> list[PairedTuple]:
    """Parse a tuple file without validation (see ingest_mocap_pairs)."""
    out = []
    with Path(path).open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    PairedTuple(
                        x_relaxed=np.asarray(rec["x_relaxed"], dtype=np.float64),
                        x_feasible=np.asarray(rec["x_feasible"], dtype=np.float64),
                        q_relaxed=np.asarray(rec["q_relaxed"], dtype=np.float64),
                        q_feasible=np.asarray(rec["q_feasible"], dtype=np.float64),
                        source=rec.get("source", ""),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: cannot parse tuple: {exc}") from exc
    return out


def write_robot_only(path, configs: np.ndarray, source: str = "robot-specific") -> None:
    with Path(path).open("w") as fh:
        for q in configs:
            fh.write(json.dumps({"q": list(q), "source": source}) + "\n")


def read_robot_only(path) -> np.ndarray:
    rows = []
    with Path(path).open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line)["q"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: line {line_no}: cannot parse config: {exc}") from exc
    return np.asarray(rows, dtype=np.float64)


def write_skeleton_only(path, features: np.ndarray, source: str = "skeleton-specific") -> None:
    with Path(path).open("w") as fh:
        for x in features:
            fh.write(json.dumps({"x": list(x), "source": source}) + "\n")


def read_skeleton_only(path) -> np.ndarray:
    rows = []
    with Path(path).open() as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line)["x"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: line {line_no}: cannot parse feature: {exc}") from exc
    return np.asarray(rows, dtype=np.float64)


_FEATURE_RECOMPUTE_TOL = 1e-9


def ingest_mocap_pairs(model: RobotModel, path):
    """Load and validate an externally produced tuple file.

    Structural violations (bad shapes, non-unit feature blocks, x_feasible
    not reproducible from q_feasible) raise with the line number. Tuples
    whose q_feasible fails the feasibility checks are rejected and reported,
    not silently dropped. Returns (Dataset, rejections) where rejections is
    a list of (line_number, reason).
    """
    path = Path(path)
    tuples = read_tuples(path)
    if not tuples:
        warnings.warn(f"{path}: empty mocap tuple file", stacklevel=2)
        return Dataset(tuples=[], robot_only=np.zeros((0, model.n_dof))), []

    accepted: list[PairedTuple] = []
    rejections: list[tuple[int, str]] = []
    for line_no, t in enumerate(tuples, start=1):
        if t.x_relaxed.shape != (FEATURE_DIM,) or t.x_feasible.shape != (FEATURE_DIM,):
            raise ValueError(f"{path}: line {line_no}: skeleton feature is not 21-dim")
        if t.q_relaxed.shape != (model.n_dof,) or t.q_feasible.shape != (model.n_dof,):
            raise ValueError(
                f"{path}: line {line_no}: configuration length != {model.n_dof}"
            )
        for label, x in (("x_relaxed", t.x_relaxed), ("x_feasible", t.x_feasible)):
            norms = np.linalg.norm(x.reshape(7, 3), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ValueError(
                    f"{path}: line {line_no}: {label} blocks are not unit norm"
                )
        _, T = fk_batch(model, t.q_feasible[None])
        x_check = skeleton_features_from_translations(model, T)[0]
        if np.max(np.abs(x_check - t.x_feasible)) > _FEATURE_RECOMPUTE_TOL:
            raise ValueError(
                f"{path}: line {line_no}: x_feasible does not match FK(q_feasible)"
            )
        if not feasible_batch(model, t.q_feasible[None])[0]:
            rejections.append((line_no, "q_feasible fails feasibility checks"))
            continue
        accepted.append(
            PairedTuple(t.x_relaxed, t.x_feasible, t.q_relaxed, t.q_feasible, SOURCE_MOCAP)
        )
    dataset = Dataset(
        tuples=accepted,
        robot_only=np.zeros((0, model.n_dof)),
    )
    return dataset, rejections


def landmark_positions(model: RobotModel, q) -> dict[str, list[float]]:
    """World positions of the eight skeleton landmarks at configuration q."""
    _, T = fk_batch(model, np.asarray(q, dtype=np.float64)[None])
    link_index = {name: i for i, name in enumerate(model.link_names)}
    return {
        lm: T[0, link_index[model.landmarks[lm]]].tolist() for lm in LANDMARK_NAMES
    }


def write_skeleton_sequence(path, times, joint_frames) -> None:
    """Skeleton-sequence file: one {t, joints:{name:[x,y,z]}} object per line."""
    with Path(path).open("w") as fh:
        for t, joints in zip(times, joint_frames):
            fh.write(json.dumps({"t": float(t), "joints": joints}) + "\n")


def read_skeleton_sequence(path):
    """Parse a skeleton-sequence file -> (times (F,), features (F, 21)).

    Every frame must carry all eight landmark names; a missing one raises
    with the frame index.
    """
    times: list[float] = []
    feats: list[np.ndarray] = []
    with Path(path).open() as fh:
        for frame_no, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                t = float(rec["t"])
                joints = rec["joints"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(
                    f"{path}: frame {frame_no}: cannot parse skeleton frame: {exc}"
                ) from exc
            try:
                feats.append(skeleton_feature_from_joints(joints))
            except KeyError as exc:
                raise ValueError(f"{path}: frame {frame_no}: {exc.args[0]}") from exc
            times.append(t)
    return np.asarray(times), np.asarray(feats).reshape(len(feats), FEATURE_DIM)
