"""Low-level 3-D geometry: axis-angle rotations and segment-segment distance.

Everything here broadcasts over leading batch dimensions so the kinematics
and collision code can process many configurations in one numpy call.
"""

import numpy as np

_EPS = 1e-12


def rotation_matrix(axis: np.ndarray, angle) -> np.ndarray:
    """Rotation matrices about a fixed unit axis (Rodrigues formula).

    axis: (3,) unit vector. angle: scalar or (...,) array of radians.
    Returns (..., 3, 3).
    """
    axis = np.asarray(axis, dtype=np.float64)
    angle = np.asarray(angle, dtype=np.float64)
    c = np.cos(angle)[..., None, None]
    s = np.sin(angle)[..., None, None]
    kx, ky, kz = axis
    cross = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    outer = np.outer(axis, axis)
    eye = np.eye(3)
    return c * eye + s * cross + (1.0 - c) * outer


def segment_distance(p1, p2, p3, p4) -> np.ndarray:
    """Minimum distance between segments [p1,p2] and [p3,p4].

    Inputs are (..., 3) and broadcast together; returns (...) distances
    (a plain float for unbatched inputs). Zero-length segments degrade
    gracefully to points. Closed-form case analysis, no iteration.
    """
    p1, p2, p3, p4 = np.broadcast_arrays(
        *(np.asarray(p, dtype=np.float64) for p in (p1, p2, p3, p4))
    )
    d1 = p2 - p1
    d2 = p4 - p3
    r = p1 - p3
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    f = np.einsum("...i,...i->...", d2, r)
    c = np.einsum("...i,...i->...", d1, r)
    b = np.einsum("...i,...i->...", d1, d2)

    a_safe = np.where(a > _EPS, a, 1.0)
    e_safe = np.where(e > _EPS, e, 1.0)
    denom = a * e - b * b
    denom_safe = np.where(denom > _EPS, denom, 1.0)

    # general case: unclamped stationary point, then clamp s, re-derive t
    s_gen = np.clip(np.where(denom > _EPS, (b * f - c * e) / denom_safe, 0.0), 0.0, 1.0)
    t_gen = (b * s_gen + f) / e_safe
    # t outside [0,1]: pin it and re-solve for s
    s_t0 = np.clip(-c / a_safe, 0.0, 1.0)
    s_t1 = np.clip((b - c) / a_safe, 0.0, 1.0)
    s = np.where(t_gen < 0.0, s_t0, np.where(t_gen > 1.0, s_t1, s_gen))
    t = np.clip(t_gen, 0.0, 1.0)

    # degenerate segments: fall back to point-segment / point-point
    s = np.where(a <= _EPS, 0.0, s)
    t = np.where(a <= _EPS, np.clip(f / e_safe, 0.0, 1.0), t)
    t = np.where(e <= _EPS, 0.0, t)
    s = np.where((e <= _EPS) & (a > _EPS), np.clip(-c / a_safe, 0.0, 1.0), s)

    closest1 = p1 + s[..., None] * d1
    closest2 = p3 + t[..., None] * d2
    dist = np.linalg.norm(closest1 - closest2, axis=-1)
    if dist.ndim == 0:
        return float(dist)
    return dist
