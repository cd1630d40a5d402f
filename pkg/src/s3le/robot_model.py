"""Upper-body humanoid robot model: kinematics, skeleton features, feasibility.

The model is loaded from a JSON file describing revolute joints, capsule
collision geometry, a tested collision-pair list, skeleton landmarks, and a
neutral pose. Frame convention for every joint:

    child_frame = parent_frame @ Rot(axis, angle) @ Trans(origin)

i.e. the joint rotates about the parent-frame origin and the fixed offset
follows the rotation. All public functions are pure; a loaded RobotModel is
immutable and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .geometry import rotation_matrix, segment_distance

LANDMARK_NAMES = (
    "hip",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_hand",
    "right_hand",
)

# bone order of the 21-dim skeleton feature (7 blocks of 3)
BONES = (
    ("hip", "neck"),
    ("neck", "left_shoulder"),
    ("neck", "right_shoulder"),
    ("left_shoulder", "left_elbow"),
    ("right_shoulder", "right_elbow"),
    ("left_elbow", "left_hand"),
    ("right_elbow", "right_hand"),
)

FEATURE_DIM = 3 * len(BONES)

_AXIS_TOL = 1e-9
_UNIT_TOL = 1e-6
_DEGENERATE_BONE = 1e-9


class RobotModelError(ValueError):
    """A robot model file violates the schema or a model invariant."""


class DegenerateBoneError(ValueError):
    """Two skeleton landmarks coincide, so a bone direction is undefined."""


@dataclass(frozen=True)
class JointSpec:
    name: str
    parent: str
    origin: np.ndarray  # (3,) meters, in parent frame
    axis: np.ndarray  # (3,) unit vector
    lower: float  # radians
    upper: float


@dataclass(frozen=True)
class Capsule:
    link: str
    a: np.ndarray  # (3,) endpoint in the link frame
    b: np.ndarray
    radius: float


@dataclass(frozen=True)
class Pose:
    """World frame per link: rotations (L, 3, 3), translations (L, 3)."""

    rotations: np.ndarray
    translations: np.ndarray


@dataclass
class RobotModel:
    joints: list[JointSpec]
    capsules: list[Capsule]
    collision_pairs: list[tuple[int, int]]
    landmarks: dict[str, str]
    neutral_pose: np.ndarray
    root: str = ""
    link_names: list[str] = field(default_factory=list)

    # derived arrays for the vectorized hot paths, filled in __post_init__
    lower: np.ndarray = field(init=False, repr=False)
    upper: np.ndarray = field(init=False, repr=False)
    _parent_link: np.ndarray = field(init=False, repr=False)
    _origins: np.ndarray = field(init=False, repr=False)
    _cap_link: np.ndarray = field(init=False, repr=False)
    _cap_a: np.ndarray = field(init=False, repr=False)
    _cap_b: np.ndarray = field(init=False, repr=False)
    _cap_radius: np.ndarray = field(init=False, repr=False)
    _pair_i: np.ndarray = field(init=False, repr=False)
    _pair_j: np.ndarray = field(init=False, repr=False)
    _pair_radius_sum: np.ndarray = field(init=False, repr=False)
    _bone_links: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        link_index = {name: i for i, name in enumerate(self.link_names)}
        self.lower = np.array([j.lower for j in self.joints])
        self.upper = np.array([j.upper for j in self.joints])
        self._parent_link = np.array([link_index[j.parent] for j in self.joints])
        self._origins = np.stack([j.origin for j in self.joints])
        self._cap_link = np.array([link_index[c.link] for c in self.capsules], dtype=int)
        self._cap_a = (
            np.stack([c.a for c in self.capsules]) if self.capsules else np.zeros((0, 3))
        )
        self._cap_b = (
            np.stack([c.b for c in self.capsules]) if self.capsules else np.zeros((0, 3))
        )
        self._cap_radius = np.array([c.radius for c in self.capsules])
        pairs = self.collision_pairs or []
        self._pair_i = np.array([p[0] for p in pairs], dtype=int)
        self._pair_j = np.array([p[1] for p in pairs], dtype=int)
        self._pair_radius_sum = self._cap_radius[self._pair_i] + self._cap_radius[self._pair_j]
        self._bone_links = np.array(
            [[link_index[self.landmarks[a]], link_index[self.landmarks[b]]] for a, b in BONES]
        )

    @property
    def n_dof(self) -> int:
        return len(self.joints)

    @property
    def n_links(self) -> int:
        return len(self.link_names)


def as_config(model: RobotModel, q) -> np.ndarray:
    """Validate a joint configuration vector against the model DoF count."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (model.n_dof,):
        raise ValueError(
            f"joint configuration has shape {q.shape}, expected ({model.n_dof},)"
        )
    return q


def _as_config_batch(model: RobotModel, Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != model.n_dof:
        raise ValueError(
            f"configuration batch has shape {Q.shape}, expected (n, {model.n_dof})"
        )
    return Q


def load_robot_model(path) -> RobotModel:
    """Load and fully validate a robot model JSON file.

    Raises RobotModelError naming the offending element on any schema or
    invariant violation (bad axis, inverted limits, cyclic tree, dangling
    landmark, infeasible neutral pose).
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RobotModelError(f"cannot parse robot model {path}: {exc}") from exc
    return build_robot_model(raw, source=str(path))


def build_robot_model(raw: Mapping, source: str = "<dict>") -> RobotModel:
    """Construct a RobotModel from a parsed JSON dict, checking all invariants."""
    for key in ("joints", "capsules", "collision_pairs", "landmarks", "neutral_pose"):
        if key not in raw:
            raise RobotModelError(f"{source}: missing top-level key '{key}'")

    joints: list[JointSpec] = []
    names_seen: set[str] = set()
    for k, j in enumerate(raw["joints"]):
        name = j.get("name", f"<joint {k}>")
        if name in names_seen:
            raise RobotModelError(f"{source}: duplicate joint name '{name}'")
        names_seen.add(name)
        axis = np.asarray(j["axis"], dtype=np.float64)
        if abs(np.linalg.norm(axis) - 1.0) > _AXIS_TOL:
            raise RobotModelError(
                f"{source}: joint '{name}' (index {k}) axis is not unit length"
            )
        lower, upper = float(j["lower"]), float(j["upper"])
        if not lower < upper:
            raise RobotModelError(
                f"{source}: joint '{name}' (index {k}) has lower >= upper "
                f"({lower} >= {upper})"
            )
        joints.append(
            JointSpec(
                name=name,
                parent=str(j["parent"]),
                origin=np.asarray(j["origin"], dtype=np.float64),
                axis=axis,
                lower=lower,
                upper=upper,
            )
        )

    joint_names = {j.name for j in joints}
    roots = {j.parent for j in joints} - joint_names
    if len(roots) != 1:
        raise RobotModelError(
            f"{source}: expected a single root link, found {sorted(roots) or 'none'}"
        )
    root = roots.pop()

    # reachability walk from the root detects cycles / disconnected joints
    children: dict[str, list[str]] = {}
    for j in joints:
        children.setdefault(j.parent, []).append(j.name)
    reached = {root}
    stack = [root]
    while stack:
        for child in children.get(stack.pop(), []):
            if child in reached:
                raise RobotModelError(f"{source}: joint tree has a cycle at '{child}'")
            reached.add(child)
            stack.append(child)
    unreached = joint_names - reached
    if unreached:
        raise RobotModelError(
            f"{source}: joints not connected to root '{root}': {sorted(unreached)}"
        )
    # parents must be declared before use so FK can run in file order
    defined = {root}
    for j in joints:
        if j.parent not in defined:
            raise RobotModelError(
                f"{source}: joint '{j.name}' is declared before its parent '{j.parent}'"
            )
        defined.add(j.name)

    link_names = [root] + [j.name for j in joints]
    link_set = set(link_names)

    capsules: list[Capsule] = []
    for k, c in enumerate(raw["capsules"]):
        if c["link"] not in link_set:
            raise RobotModelError(
                f"{source}: capsule {k} references unknown link '{c['link']}'"
            )
        radius = float(c["radius"])
        if radius <= 0:
            raise RobotModelError(f"{source}: capsule {k} has non-positive radius")
        capsules.append(
            Capsule(
                link=c["link"],
                a=np.asarray(c["a"], dtype=np.float64),
                b=np.asarray(c["b"], dtype=np.float64),
                radius=radius,
            )
        )

    pairs: list[tuple[int, int]] = []
    for k, pair in enumerate(raw["collision_pairs"]):
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < len(capsules) and 0 <= j < len(capsules)) or i == j:
            raise RobotModelError(f"{source}: collision pair {k} ({i},{j}) is invalid")
        pairs.append((i, j))

    landmarks = dict(raw["landmarks"])
    for lm in LANDMARK_NAMES:
        if lm not in landmarks:
            raise RobotModelError(f"{source}: missing landmark '{lm}'")
        if landmarks[lm] not in link_set:
            raise RobotModelError(
                f"{source}: landmark '{lm}' points at unknown link '{landmarks[lm]}'"
            )

    neutral = np.asarray(raw["neutral_pose"], dtype=np.float64)
    if neutral.shape != (len(joints),):
        raise RobotModelError(
            f"{source}: neutral_pose has length {neutral.size}, expected {len(joints)}"
        )

    model = RobotModel(
        joints=joints,
        capsules=capsules,
        collision_pairs=pairs,
        landmarks=landmarks,
        neutral_pose=neutral,
        root=root,
        link_names=link_names,
    )

    if not within_joint_limits(model, neutral):
        raise RobotModelError(f"{source}: neutral pose violates joint limits")
    if not self_collision_free(model, neutral):
        raise RobotModelError(f"{source}: neutral pose is not self-collision-free")
    return model


def fk_batch(model: RobotModel, Q) -> tuple[np.ndarray, np.ndarray]:
    """Forward kinematics for a batch of configurations.

    Q: (n, N_DoF). Returns (rotations (n, L, 3, 3), translations (n, L, 3))
    with link 0 being the root (identity frame).
    """
    Q = _as_config_batch(model, Q)
    n = Q.shape[0]
    L = model.n_links
    R = np.empty((n, L, 3, 3))
    T = np.empty((n, L, 3))
    R[:, 0] = np.eye(3)
    T[:, 0] = 0.0
    for i, joint in enumerate(model.joints):
        p = model._parent_link[i]
        Rj = rotation_matrix(joint.axis, Q[:, i])
        Rc = R[:, p] @ Rj
        R[:, i + 1] = Rc
        T[:, i + 1] = T[:, p] + np.einsum("nij,j->ni", Rc, joint.origin)
    return R, T


def forward_kinematics(model: RobotModel, q) -> Pose:
    """World frames for every link at configuration q (root to leaves)."""
    q = as_config(model, q)
    R, T = fk_batch(model, q[None, :])
    return Pose(rotations=R[0], translations=T[0])


def skeleton_features_from_translations(model: RobotModel, T: np.ndarray) -> np.ndarray:
    """Skeleton features for a batch of link translations (n, L, 3) -> (n, 21)."""
    starts = T[:, model._bone_links[:, 0]]
    ends = T[:, model._bone_links[:, 1]]
    vec = ends - starts  # (n, 7, 3)
    norms = np.linalg.norm(vec, axis=-1, keepdims=True)
    if np.any(norms < _DEGENERATE_BONE):
        n_idx, b_idx = np.argwhere(norms[..., 0] < _DEGENERATE_BONE)[0]
        raise DegenerateBoneError(
            f"bone {BONES[b_idx][0]}->{BONES[b_idx][1]} has zero length (sample {n_idx})"
        )
    return (vec / norms).reshape(T.shape[0], FEATURE_DIM)


def extract_skeleton_feature(model: RobotModel, pose: Pose) -> np.ndarray:
    """21-dim skeleton feature: 7 unit bone vectors read off the pose landmarks."""
    return skeleton_features_from_translations(model, pose.translations[None])[0]


def skeleton_feature_from_joints(joints: Mapping[str, Sequence[float]]) -> np.ndarray:
    """Skeleton feature from named 3-D joint positions (human skeleton input).

    Requires all eight landmark names; same bone order and normalization as
    the robot-derived features, so both live in the same 21-dim space.
    """
    missing = [lm for lm in LANDMARK_NAMES if lm not in joints]
    if missing:
        raise KeyError(f"skeleton is missing landmarks: {missing}")
    pos = {lm: np.asarray(joints[lm], dtype=np.float64) for lm in LANDMARK_NAMES}
    blocks = []
    for a, b in BONES:
        vec = pos[b] - pos[a]
        norm = np.linalg.norm(vec)
        if norm < _DEGENERATE_BONE:
            raise DegenerateBoneError(f"bone {a}->{b} has zero length")
        blocks.append(vec / norm)
    return np.concatenate(blocks)


def validate_feature(x) -> np.ndarray:
    """Check a 21-vector is a valid skeleton feature (unit-norm blocks)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (FEATURE_DIM,):
        raise ValueError(f"skeleton feature has shape {x.shape}, expected ({FEATURE_DIM},)")
    norms = np.linalg.norm(x.reshape(7, 3), axis=1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise ValueError(f"skeleton feature blocks are not unit norm: {norms}")
    return x


def normalize_feature_blocks(x) -> np.ndarray:
    """Renormalize each 3-vector block to unit length ((..., 21) -> same shape)."""
    x = np.asarray(x, dtype=np.float64)
    blocks = x.reshape(*x.shape[:-1], 7, 3)
    norms = np.linalg.norm(blocks, axis=-1, keepdims=True)
    if np.any(norms < _DEGENERATE_BONE):
        raise ValueError("cannot normalize a zero-length feature block")
    return (blocks / norms).reshape(x.shape)


def within_joint_limits_batch(model: RobotModel, Q) -> np.ndarray:
    Q = _as_config_batch(model, Q)
    return np.all((Q >= model.lower) & (Q <= model.upper), axis=1)


def within_joint_limits(model: RobotModel, q) -> bool:
    """True iff every angle lies inside its closed [lower, upper] interval."""
    q = as_config(model, q)
    return bool(within_joint_limits_batch(model, q[None])[0])


def capsule_endpoints(model: RobotModel, R: np.ndarray, T: np.ndarray):
    """World endpoints of every capsule for batched frames: two (n, C, 3) arrays."""
    Rc = R[:, model._cap_link]  # (n, C, 3, 3)
    Tc = T[:, model._cap_link]
    A = Tc + np.einsum("ncij,cj->nci", Rc, model._cap_a)
    B = Tc + np.einsum("ncij,cj->nci", Rc, model._cap_b)
    return A, B


def self_collision_free_frames(model: RobotModel, R: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Collision predicate for batched FK frames -> (n,) bool."""
    if len(model.collision_pairs) == 0:
        return np.ones(T.shape[0], dtype=bool)
    A, B = capsule_endpoints(model, R, T)
    d = segment_distance(
        A[:, model._pair_i], B[:, model._pair_i], A[:, model._pair_j], B[:, model._pair_j]
    )
    return np.all(d > model._pair_radius_sum, axis=-1)


def self_collision_free_batch(model: RobotModel, Q) -> np.ndarray:
    R, T = fk_batch(model, Q)
    return self_collision_free_frames(model, R, T)


def self_collision_free(model: RobotModel, q) -> bool:
    """True iff every tested capsule pair keeps axis distance > radius sum."""
    q = as_config(model, q)
    return bool(self_collision_free_batch(model, q[None])[0])


def feasible_batch(model: RobotModel, Q) -> np.ndarray:
    """Joint limits AND self-collision freedom, batched -> (n,) bool."""
    Q = _as_config_batch(model, Q)
    ok = within_joint_limits_batch(model, Q)
    if np.any(ok):
        ok[ok] = self_collision_free_batch(model, Q[ok])
    return ok


def is_feasible(model: RobotModel, q) -> bool:
    q = as_config(model, q)
    return bool(feasible_batch(model, q[None])[0])
