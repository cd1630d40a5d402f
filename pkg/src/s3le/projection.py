"""Projection of relaxed joint configurations onto the feasible set.

Feasible means: inside joint limits and self-collision-free. The projection
first clamps to the limit box. If the clamped pose still self-collides, it
searches the straight segment q(t) = neutral + t*(clamped - neutral) for the
largest collision-free t (the neutral pose anchors t=0 as always feasible).

Feasibility along that segment is not always an interval: a colliding band
can separate the neutral pose from a feasible region closer to the clamped
pose. A plain bisection would get trapped below such a band, so the search
scans a fixed grid from t=1 downward to locate the topmost feasible point,
then bisects inside the bracketing grid cell to refine the boundary. The
result is feasible unconditionally and, up to grid resolution, the closest
point to the clamped pose along the segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot_model import (
    RobotModel,
    _as_config_batch,
    as_config,
    fk_batch,
    self_collision_free_batch,
    skeleton_features_from_translations,
)


@dataclass(frozen=True)
class ProjectionConfig:
    bisection_tolerance: float = 1e-4  # radians-scale resolution along the segment
    max_bisection_iters: int = 60
    scan_points: int = 256  # top-down grid resolution for locating the feasible boundary
    scan_band: int = 32  # grid points evaluated per banded-scan step

    def __post_init__(self):
        if self.bisection_tolerance <= 0:
            raise ValueError("bisection_tolerance must be positive")
        if self.max_bisection_iters < 1:
            raise ValueError("max_bisection_iters must be >= 1")
        if self.scan_points < 2 or self.scan_band < 1:
            raise ValueError("scan_points must be >= 2 and scan_band >= 1")


def clamp_to_limits(model: RobotModel, q_relaxed) -> np.ndarray:
    """Per-joint clamp onto [lower, upper]; identity on in-limit configs."""
    q = as_config(model, q_relaxed)
    return np.clip(q, model.lower, model.upper)


def _scan_topmost_feasible(model, cfg, neutral, seg):
    """Largest feasible grid index k (t = k/scan_points) per segment row.

    Scans from t just below 1 downward in bands, dropping rows as soon as a
    feasible point is found. k=0 (the neutral pose) is feasible by model
    invariant, so every row resolves. Returns (best_k, best_q) where best_q
    holds the exact floats that were verified collision-free.
    """
    m, n_dof = seg.shape
    n_grid = cfg.scan_points
    best_k = np.zeros(m, dtype=int)
    best_q = np.broadcast_to(neutral, (m, n_dof)).copy()
    unresolved = np.ones(m, dtype=bool)
    hi_k = n_grid - 1  # t=1 itself is the colliding clamped pose, skip it
    while hi_k >= 1 and np.any(unresolved):
        lo_k = max(1, hi_k - cfg.scan_band + 1)
        ks = np.arange(hi_k, lo_k - 1, -1)  # descending
        rows = np.where(unresolved)[0]
        t_vals = ks / n_grid  # (b,)
        # (r, b, N) candidate configurations for this band, kept inside the box
        q_band = np.clip(
            neutral + t_vals[None, :, None] * seg[rows][:, None, :],
            model.lower,
            model.upper,
        )
        free = self_collision_free_batch(model, q_band.reshape(-1, n_dof))
        free = free.reshape(len(rows), len(ks))
        any_free = free.any(axis=1)
        # first True along the descending-k axis is the largest feasible k
        first = np.argmax(free[any_free], axis=1)
        hit_rows = rows[any_free]
        best_k[hit_rows] = ks[first]
        best_q[hit_rows] = q_band[any_free, first]
        unresolved[hit_rows] = False
        hi_k = lo_k - 1
    return best_k, best_q


def project_feasible_batch(
    model: RobotModel, Q, cfg: ProjectionConfig | None = None
) -> np.ndarray:
    """Vectorized projection of (n, N_DoF) relaxed configurations."""
    cfg = cfg or ProjectionConfig()
    Q = _as_config_batch(model, Q)
    clamped = np.clip(Q, model.lower, model.upper)
    ok = self_collision_free_batch(model, clamped)
    result = clamped.copy()
    bad = ~ok
    if not np.any(bad):
        return result

    neutral = model.neutral_pose
    seg = clamped[bad] - neutral  # (m, N)
    span = np.max(np.abs(seg), axis=1)  # radians-scale segment length

    best_k, best = _scan_topmost_feasible(model, cfg, neutral, seg)
    lo = best_k / cfg.scan_points  # known feasible grid point
    hi = (best_k + 1) / cfg.scan_points  # known colliding (or the clamped pose)

    for _ in range(cfg.max_bisection_iters):
        active = (hi - lo) * span > cfg.bisection_tolerance
        if not np.any(active):
            break
        mid = 0.5 * (lo[active] + hi[active])
        # clip so the exact floats we verify are also exactly inside the box
        q_mid = np.clip(neutral + mid[:, None] * seg[active], model.lower, model.upper)
        free = self_collision_free_batch(model, q_mid)
        lo_a = lo[active]
        hi_a = hi[active]
        lo_a[free] = mid[free]
        hi_a[~free] = mid[~free]
        lo[active] = lo_a
        hi[active] = hi_a
        best_a = best[active]
        best_a[free] = q_mid[free]
        best[active] = best_a
    result[bad] = best
    return result


def project_feasible(model: RobotModel, q_relaxed, cfg: ProjectionConfig | None = None) -> np.ndarray:
    """Map any configuration to one satisfying limits and collision checks.

    Idempotent on feasible inputs (returned bitwise unchanged after the
    clamp, which is the identity there).
    """
    q = as_config(model, q_relaxed)
    return project_feasible_batch(model, q[None], cfg)[0]


def project_skeleton_batch(model: RobotModel, Q, cfg: ProjectionConfig | None = None):
    """Relaxed/feasible skeleton features plus projected configs, batched.

    Returns (x_relaxed (n,21), x_feasible (n,21), q_feasible (n,N)).
    """
    Q = _as_config_batch(model, Q)
    _, T_rel = fk_batch(model, Q)
    x_relaxed = skeleton_features_from_translations(model, T_rel)
    q_feasible = project_feasible_batch(model, Q, cfg)
    _, T_feas = fk_batch(model, q_feasible)
    x_feasible = skeleton_features_from_translations(model, T_feas)
    return x_relaxed, x_feasible, q_feasible


def project_skeleton(model: RobotModel, q_relaxed, cfg: ProjectionConfig | None = None):
    """(x_relaxed, x_feasible, q_feasible) for a single relaxed configuration."""
    q = as_config(model, q_relaxed)
    xr, xf, qf = project_skeleton_batch(model, q[None], cfg)
    return xr[0], xf[0], qf[0]
