# depthfilter/depth/halfspace.py
# Sample half-space (Tukey) depth: exact in one and two dimensions, random
# Tukey approximation in any dimension.
#
# Half-spaces are CLOSED on both sides, so a point's own projection counts in
# both tails and the 1-D depth is min(#{X <= x}, #{X >= x}) / n.

from __future__ import annotations
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils.log import get_logger

LOG = get_logger(__name__)

TWO_PI = 2.0 * np.pi
# atan2 error bound; angular ties inside it are settled by exact cross products.
ANGLE_SLACK = 1e-12
DEFAULT_DIRECTIONS = 5000
_CHUNK = 256


def _as_points(sample: np.ndarray, d: Optional[int] = None) -> np.ndarray:
    a = np.asarray(sample, dtype=float)
    if a.ndim == 1:
        a = a[:, None] if d in (None, 1) else a.reshape(-1, d)
    return a


# ------------------------------ directions ------------------------------

def random_directions(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """k directions uniform on the unit sphere in R^d (normalized standard normals)."""
    if k < 1:
        raise ValueError(f"need at least one direction, got {k}")
    u = rng.standard_normal((k, d))
    norms = np.linalg.norm(u, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        u[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(u, axis=1)
    return u / norms[:, None]


def direction_batch(d: int, k: int, seed: int, *context: int) -> np.ndarray:
    """The direction set owned by (seed, context); independent of evaluation order."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), *[int(c) for c in context]]))
    return random_directions(d, k, rng)


# ------------------------------ d = 1 ------------------------------

def hs_depths_1d(points: np.ndarray, sample: np.ndarray) -> np.ndarray:
    s = np.sort(np.asarray(sample, dtype=float).ravel())
    if s.size == 0:
        raise ValueError("sample must be nonempty")
    q = np.asarray(points, dtype=float).ravel()
    le = np.searchsorted(s, q, side="right")
    ge = s.size - np.searchsorted(s, q, side="left")
    return np.minimum(le, ge) / s.size


def hs_depth_1d(x: float, sample: Sequence[float]) -> float:
    return float(hs_depths_1d(np.array([x], dtype=float), np.asarray(sample))[0])


# ------------------------------ d = 2, exact ------------------------------

def _max_open_halfplane(v: np.ndarray) -> int:
    """Largest number of the nonzero vectors v inside one open half-plane through the origin.

    An optimal open half-plane can be rotated until some v_j sits on its boundary
    ray, so the maximum runs over j of #{cross(v_j, v_i) > 0} plus the vectors
    pointing the same way as v_j. Sorted angles locate the bulk of each count;
    vectors within ANGLE_SLACK of either boundary ray are decided by the signs of
    the cross and dot products.
    """
    m = v.shape[0]
    theta = np.mod(np.arctan2(v[:, 1], v[:, 0]), TWO_PI)
    order = np.argsort(theta, kind="stable")
    theta, v = theta[order], v[order]
    ext = np.concatenate([theta - TWO_PI, theta, theta + TWO_PI])

    s = ANGLE_SLACK
    counts = np.searchsorted(ext, theta + np.pi - s, side="left") - np.searchsorted(ext, theta + s, side="right")
    counts = np.maximum(counts, 0)
    for lo, hi in ((theta - s, theta + s), (theta + np.pi - s, theta + np.pi + s)):
        start = np.searchsorted(ext, lo, side="left")
        sizes = np.searchsorted(ext, hi, side="right") - start
        j = np.repeat(np.arange(m), sizes)
        offset = np.arange(j.size) - np.repeat(np.cumsum(sizes) - sizes, sizes)
        i = (np.repeat(start, sizes) + offset) % m
        cross = v[j, 0] * v[i, 1] - v[j, 1] * v[i, 0]
        dot = v[j, 0] * v[i, 0] + v[j, 1] * v[i, 1]
        keep = (cross > 0.0) | ((cross == 0.0) & (dot > 0.0))
        counts += np.bincount(j[keep], minlength=m)
    return int(counts.max())


def hs_depth_exact_2d(x: np.ndarray, sample: np.ndarray) -> float:
    """Exact bivariate half-space depth, O(n log n) for samples in general position.

    An optimal closed half-plane can be taken with its boundary through x, and its
    complement is an open half-plane through x, so the depth is n minus the most
    points one open half-plane around x can hold. Points equal to x lie in every
    closed half-plane.
    """
    pts = _as_points(sample, 2)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("sample must be nonempty")
    diff = pts - np.asarray(x, dtype=float).reshape(1, 2)
    at_x = np.all(diff == 0.0, axis=1)
    v = diff[~at_x]
    if v.shape[0] == 0:
        return 1.0
    return (n - _max_open_halfplane(v)) / n


def hs_depths_exact_2d(points: np.ndarray, sample: np.ndarray) -> np.ndarray:
    pts = _as_points(points, 2)
    return np.array([hs_depth_exact_2d(q, sample) for q in pts], dtype=float)


# ------------------------------ random Tukey ------------------------------

def random_tukey_depths(points: np.ndarray, sample: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Min over the given directions of the 1-D depth of each projected point."""
    S = _as_points(sample, directions.shape[1])
    Q = _as_points(points, directions.shape[1])
    n = S.shape[0]
    if n == 0:
        raise ValueError("sample must be nonempty")
    best = np.full(Q.shape[0], n, dtype=np.int64)
    for start in range(0, directions.shape[0], _CHUNK):
        U = directions[start:start + _CHUNK]
        ps = np.sort(S @ U.T, axis=0)
        pq = Q @ U.T
        for c in range(U.shape[0]):
            le = np.searchsorted(ps[:, c], pq[:, c], side="right")
            ge = n - np.searchsorted(ps[:, c], pq[:, c], side="left")
            np.minimum(best, np.minimum(le, ge), out=best)
    return best / n


def random_tukey_self_depths(sample: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Random Tukey depth of every sample point against its own sample.

    Each point's projection is looked up in the sorted projections it came from,
    so a point always counts itself in both tails.
    """
    S = _as_points(sample, directions.shape[1])
    n = S.shape[0]
    best = np.full(n, n, dtype=np.int64)
    for start in range(0, directions.shape[0], _CHUNK):
        proj = S @ directions[start:start + _CHUNK].T
        srt = np.sort(proj, axis=0)
        for c in range(proj.shape[1]):
            le = np.searchsorted(srt[:, c], proj[:, c], side="right")
            ge = n - np.searchsorted(srt[:, c], proj[:, c], side="left")
            np.minimum(best, np.minimum(le, ge), out=best)
    return best / n


def random_tukey_depth(
    x: np.ndarray,
    sample: np.ndarray,
    k: int = DEFAULT_DIRECTIONS,
    rng: Optional[np.random.Generator] = None,
    directions: Optional[np.ndarray] = None,
) -> np.ndarray | float:
    """Random Tukey depth of x (a point or rows of points) with k random directions.

    Deterministic given the generator; pass ``directions`` to share one batch.
    """
    S = np.asarray(sample, dtype=float)
    d = 1 if S.ndim == 1 else S.shape[1]
    if directions is None:
        if k < 1:
            raise ValueError(f"need at least one direction, got {k}")
        directions = random_directions(d, k, rng if rng is not None else np.random.default_rng(0))
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and d > 1 or x.ndim == 0
    out = random_tukey_depths(x.reshape(-1, d), S.reshape(-1, d), directions)
    return float(out[0]) if single else out


# ------------------------------ dispatch ------------------------------

def sample_depths(
    points: np.ndarray,
    sample: np.ndarray,
    directions: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Depth of points w.r.t. sample: exact for d <= 2, random Tukey otherwise."""
    S = _as_points(sample)
    d = S.shape[1]
    if d == 1:
        return hs_depths_1d(points, S[:, 0])
    if d == 2:
        return hs_depths_exact_2d(points, S)
    if directions is None:
        raise ValueError("random Tukey depth for d >= 3 needs a direction set")
    return random_tukey_depths(points, S, directions)


def self_depths(sample: np.ndarray, directions: Optional[np.ndarray] = None) -> np.ndarray:
    """Depth of every sample point w.r.t. the sample itself."""
    S = _as_points(sample)
    d = S.shape[1]
    if d == 1:
        return hs_depths_1d(S[:, 0], S[:, 0])
    if d == 2:
        return hs_depths_exact_2d(S, S)
    if directions is None:
        raise ValueError("random Tukey depth for d >= 3 needs a direction set")
    return random_tukey_self_depths(S, directions)


def max_depth_observation(
    sample: np.ndarray,
    k: int = DEFAULT_DIRECTIONS,
    rng: Optional[np.random.Generator] = None,
    directions: Optional[np.ndarray] = None,
    depths: Optional[np.ndarray] = None,
) -> Tuple[int, np.ndarray]:
    """(index, point) of the deepest sample point; ties go to the lowest index."""
    S = _as_points(sample)
    if S.shape[0] == 0:
        raise ValueError("sample must be nonempty")
    if depths is None:
        if S.shape[1] >= 3 and directions is None:
            directions = random_directions(S.shape[1], k, rng if rng is not None else np.random.default_rng(0))
        depths = self_depths(S, directions)
    idx = int(np.argmax(depths))
    return idx, S[idx].copy()
