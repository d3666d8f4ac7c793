"""Low-level 2D geometry: frame transforms, closest points, ray casting.

Ray-cast helpers return the distance along the ray to the first contact
with the occupied region (0.0 when the origin already lies inside it),
or inf on a miss. Vectorized variants broadcast one ray origin against a
fan of unit directions; the scalar variants wrap them so that callers
using either path get bit-identical numbers.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def unit(v: np.ndarray) -> np.ndarray:
    n = math.hypot(v[0], v[1])
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def rot_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def to_local(point: np.ndarray, origin: np.ndarray, heading: float) -> np.ndarray:
    """World point -> frame at `origin` with x axis along `heading`."""
    dx = point[0] - origin[0]
    dy = point[1] - origin[1]
    c, s = math.cos(heading), math.sin(heading)
    return np.array([c * dx + s * dy, -s * dx + c * dy])


def to_world(point: np.ndarray, origin: np.ndarray, heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array(
        [origin[0] + c * point[0] - s * point[1], origin[1] + s * point[0] + c * point[1]]
    )


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def angle_gap(a: float, b: float) -> float:
    """Absolute angular separation of two directions, in [0, pi]."""
    return abs(wrap_angle(a - b))


def closest_point_on_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    e = b - a
    denom = e[0] * e[0] + e[1] * e[1]
    if denom == 0.0:
        return a.copy()
    t = ((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / denom
    t = min(1.0, max(0.0, t))
    return a + t * e


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    q = closest_point_on_segment(p, a, b)
    return math.hypot(p[0] - q[0], p[1] - q[1])


def point_segments_distance(p: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Distances from `p` to each segment p0[i]->p1[i]; p0/p1 are (n, 2)."""
    e = p1 - p0
    denom = np.einsum("ij,ij->i", e, e)
    safe = np.where(denom == 0.0, 1.0, denom)
    t = ((p[0] - p0[:, 0]) * e[:, 0] + (p[1] - p0[:, 1]) * e[:, 1]) / safe
    t = np.clip(np.where(denom == 0.0, 0.0, t), 0.0, 1.0)
    qx = p0[:, 0] + t * e[:, 0]
    qy = p0[:, 1] + t * e[:, 1]
    return np.hypot(p[0] - qx, p[1] - qy)


def ray_circles_hit(origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray,
                    radius: float) -> np.ndarray:
    """First-contact distances for rays (D, 2 unit dirs) vs discs (n, 2 centers)."""
    d = centers - origin                      # (n, 2)
    # projection of the center offset on each ray; elementwise (not matmul) so
    # batched and single-ray calls produce bit-identical values
    b = dirs[:, 0:1] * d[None, :, 0] + dirs[:, 1:2] * d[None, :, 1]   # (D, n)
    cc = np.einsum("ij,ij->i", d, d) - radius * radius
    disc = b * b - cc[None, :]
    sq = np.sqrt(np.maximum(disc, 0.0))
    t_near = b - sq
    t_far = b + sq
    t = np.where(t_near >= 0.0, t_near, np.where(t_far >= 0.0, 0.0, np.inf))
    return np.where(disc < 0.0, np.inf, t)


def ray_segments_hit(origin: np.ndarray, dirs: np.ndarray, p0: np.ndarray,
                     p1: np.ndarray) -> np.ndarray:
    """Hit distances for rays (D, 2) vs segments p0[i]->p1[i] (n, 2 each).

    Rays parallel to a segment count as misses (end discs of capsules and
    polyline neighbours cover the grazing cases that matter).
    """
    e = p1 - p0                               # (n, 2)
    ao = p0 - origin                          # (n, 2)
    denom = dirs[:, 0:1] * e[None, :, 1] - dirs[:, 1:2] * e[None, :, 0]   # (D, n)
    t_num = ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]                       # (n,)
    s_num = ao[None, :, 0] * dirs[:, 1:2] - ao[None, :, 1] * dirs[:, 0:1]  # (D, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num[None, :] / denom
        s = s_num / denom
    ok = (denom != 0.0) & (t >= 0.0) & (s >= 0.0) & (s <= 1.0)
    return np.where(ok, t, np.inf)


def ray_capsules_hit(origin: np.ndarray, dirs: np.ndarray, p0: np.ndarray,
                     p1: np.ndarray, radius: float,
                     inside: np.ndarray | None = None) -> np.ndarray:
    """Hit distances for rays (D, 2) vs capsules around segments p0->p1, (n, 2).

    End discs and the two side segments are batched into one circle test and
    one segment test to keep the per-call numpy overhead low. `inside` may
    supply a precomputed point_segments_distance(origin, p0, p1) <= radius
    mask; it must equal that expression.
    """
    e = p1 - p0
    length = np.hypot(e[:, 0], e[:, 1])
    degen = length < 1e-12
    safe_len = np.where(degen, 1.0, length)
    nhat = np.stack([-e[:, 1] / safe_len, e[:, 0] / safe_len], axis=1)   # (n, 2)
    off = radius * nhat

    n = p0.shape[0]
    ends = ray_circles_hit(origin, dirs, np.concatenate([p0, p1]), radius)
    hits = np.minimum(ends[:, :n], ends[:, n:])
    sides = ray_segments_hit(origin, dirs,
                             np.concatenate([p0 + off, p0 - off]),
                             np.concatenate([p1 + off, p1 - off]))
    sides = np.minimum(sides[:, :n], sides[:, n:])
    hits = np.where(degen[None, :], hits, np.minimum(hits, sides))

    if inside is None:
        inside = point_segments_distance(origin, p0, p1) <= radius
    return np.where(inside[None, :], 0.0, hits)


def ray_rect_hit(origin_local: np.ndarray, dirs_local: np.ndarray,
                 x_min: float, x_max: float, y_min: float, y_max: float,
                 tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Slab-method hit of an axis-aligned rectangle, in the rectangle frame.

    Returns (distances, on_front) where on_front marks rays whose boundary
    crossing lies on the x = x_max face. Origins inside the rectangle hit at
    distance 0 and are classified by the face the ray exits through.
    """
    ox, oy = origin_local[0], origin_local[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_x = 1.0 / dirs_local[:, 0]
        inv_y = 1.0 / dirs_local[:, 1]
        # axis-parallel rays produce +/-inf bounds that resolve correctly;
        # an origin exactly on a face with a parallel ray yields NaN -> miss
        tx1 = (x_min - ox) * inv_x
        tx2 = (x_max - ox) * inv_x
        ty1 = (y_min - oy) * inv_y
        ty2 = (y_max - oy) * inv_y
    t_enter = np.maximum(np.minimum(tx1, tx2), np.minimum(ty1, ty2))
    t_exit = np.minimum(np.maximum(tx1, tx2), np.maximum(ty1, ty2))
    hit = (t_enter <= t_exit) & (t_exit >= 0.0)
    dist = np.where(hit, np.maximum(t_enter, 0.0), np.inf)

    t_cross = np.where(hit, np.where(t_enter >= 0.0, t_enter, t_exit), 0.0)
    cross_x = ox + t_cross * dirs_local[:, 0]
    on_front = hit & (np.abs(cross_x - x_max) <= tol)
    return dist, on_front


def ray_circle_hit(origin, direction, center, radius) -> float:
    return float(ray_circles_hit(origin, np.asarray([direction]),
                                 np.asarray([center]), radius)[0, 0])


def ray_segment_hit(origin, direction, a, b) -> float:
    return float(ray_segments_hit(origin, np.asarray([direction]),
                                  np.asarray([a]), np.asarray([b]))[0, 0])


def ray_capsule_hit(origin, direction, a, b, radius) -> float:
    return float(ray_capsules_hit(origin, np.asarray([direction]),
                                  np.asarray([a]), np.asarray([b]), radius)[0, 0])
