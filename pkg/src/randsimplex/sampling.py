"""Reproducible uniform sampling from convex bodies.

Point ``i`` of a stream keyed by ``(seed, stream)`` is built from counter
block(s) ``i`` of a Philox generator, so any index range can be produced
independently and chunks reassemble the serial stream bit for bit.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import ndtri

from ._validation import GeometryError, check_body, check_polygon, check_positive_int, check_seed
from .bodies import Ball, Ellipsoid, Polygon, Simplex

__all__ = [
    "SampleStream",
    "TriangleSoup",
    "hull_area_2d",
    "sample",
    "simplex_volume",
    "uniforms",
]

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value


def uniforms(seed, stream, start, count, width):
    """Uniforms in (0, 1) of shape (count, width) for points start..start+count-1."""
    seed = check_seed(seed)
    blocks = -(-width // _WORDS_PER_BLOCK)
    bg = np.random.Philox(key=np.array([seed, stream], dtype=np.uint64))
    bg.advance(start * blocks)
    raw = bg.random_raw(count * blocks * _WORDS_PER_BLOCK)
    raw = raw.reshape(count, blocks * _WORDS_PER_BLOCK)[:, :width]
    # 53 high bits, shifted to the midpoint of their cell to avoid 0 and 1
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class TriangleSoup:
    """Finite union of interior-disjoint triangles, sampled area-proportionally."""

    triangles: np.ndarray
    areas: np.ndarray = field(init=False)
    cumulative: np.ndarray = field(init=False)

    dim = 2

    def __post_init__(self):
        T = np.asarray(self.triangles, dtype=float).reshape(-1, 3, 2)
        e1, e2 = T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]
        A = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        keep = A > 0
        T, A = T[keep], A[keep]
        if len(T) == 0:
            raise GeometryError("triangle soup has zero area")
        c = np.cumsum(A)
        object.__setattr__(self, "triangles", T)
        object.__setattr__(self, "areas", A)
        object.__setattr__(self, "cumulative", c / c[-1])

    @classmethod
    def from_polygon(cls, P):
        """Fan triangulation from vertex 0."""
        V = P.vertices
        n = len(V)
        T = np.stack([np.repeat(V[:1], n - 2, axis=0), V[1:-1], V[2:]], axis=1)
        return cls(T)

    @classmethod
    def between(cls, outer, inner):
        """The closure of ``outer`` minus ``inner`` for nested convex polygons.

        Both boundaries are cut by the rays from the inner centroid through
        every vertex of either polygon; each sector piece is a quadrilateral
        split along whichever diagonal gives two positively oriented triangles.
        """
        outer, inner = check_polygon(outer), check_polygon(inner)
        o = inner.centroid
        if not np.all(outer.contains(inner.vertices, tol=1e-12)):
            raise GeometryError("inner polygon is not contained in the outer one")
        ang = np.concatenate(
            [
                np.arctan2(*(outer.vertices - o)[:, ::-1].T),
                np.arctan2(*(inner.vertices - o)[:, ::-1].T),
            ]
        )
        ang = np.unique(np.mod(ang, 2 * np.pi))
        U = np.column_stack([np.cos(ang), np.sin(ang)])
        a = o + inner.radial(U, o)[:, None] * U
        b = o + outer.radial(U, o)[:, None] * U
        a2, b2 = np.roll(a, -1, axis=0), np.roll(b, -1, axis=0)

        def orient(p, q, r):
            return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

        # quadrilateral a, b, b2, a2 in counterclockwise order
        use_a = (orient(a, b, b2) >= 0) & (orient(a, b2, a2) >= 0)
        first = np.where(use_a[:, None, None], np.stack([a, b, b2], 1), np.stack([a, b, a2], 1))
        second = np.where(use_a[:, None, None], np.stack([a, b2, a2], 1), np.stack([b, b2, a2], 1))
        return cls(np.concatenate([first, second]))

    @property
    def volume(self):
        return float(self.areas.sum())

    def map_uniforms(self, U):
        idx = np.searchsorted(self.cumulative, U[:, 0], side="right")
        idx = np.minimum(idx, len(self.areas) - 1)
        a, b = U[:, 1].copy(), U[:, 2].copy()
        flip = a + b > 1.0
        a[flip], b[flip] = 1.0 - a[flip], 1.0 - b[flip]
        T = self.triangles[idx]
        return T[:, 0] + a[:, None] * (T[:, 1] - T[:, 0]) + b[:, None] * (T[:, 2] - T[:, 0])


def _width(K):
    if isinstance(K, (Polygon, TriangleSoup)):
        return 3
    return K.dim + 1


def _map(K, U):
    if isinstance(K, Polygon):
        return TriangleSoup.from_polygon(K).map_uniforms(U)
    if isinstance(K, TriangleSoup):
        return K.map_uniforms(U)
    if isinstance(K, (Ball, Ellipsoid)):
        d = K.dim
        G = ndtri(U[:, :d])
        r = U[:, d] ** (1.0 / d)
        W = G * (r / np.linalg.norm(G, axis=1))[:, None]
        if isinstance(K, Ball):
            return K.center + K.radius * W
        return K.center + W @ K.transform.T
    if isinstance(K, Simplex):
        E = -np.log(U)
        return (E / E.sum(axis=1, keepdims=True)) @ K.vertices
    raise GeometryError(f"cannot sample from {type(K).__name__}")


@dataclass(frozen=True)
class SampleStream:
    """Deterministic stream of uniform points in a body (or a triangle soup)."""

    body: object
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not isinstance(self.body, TriangleSoup):
            check_body(self.body)
        check_seed(self.seed)

    @property
    def dim(self):
        return self.body.dim

    def points(self, start, count):
        U = uniforms(self.seed, self.stream, start, count, _width(self.body))
        return _map(self.body, U)


def sample(K, n, seed, start=0, stream=0):
    """``n`` uniform points of ``K``; point ``i`` depends only on (seed, stream, i)."""
    n = check_positive_int(n, "n")
    return SampleStream(K, seed, stream).points(start, n)


def simplex_volume(vertices):
    """Volume of the simplex spanned by d+1 points; batched over leading axes."""
    X = np.asarray(vertices, dtype=float)
    if X.ndim < 2 or X.shape[-2] != X.shape[-1] + 1:
        raise GeometryError("simplex_volume needs d+1 points of dimension d")
    d = X.shape[-1]
    E = X[..., 1:, :] - X[..., :1, :]
    if d == 2:
        det = E[..., 0, 0] * E[..., 1, 1] - E[..., 0, 1] * E[..., 1, 0]
    elif d == 1:
        det = E[..., 0, 0]
    else:
        det = np.linalg.det(E)
    return np.abs(det) / factorial(d)


def hull_area_2d(points):
    """Area of the convex hull of each planar point set in a batch (T, n, 2).

    An ordered pair (i, j) is a counterclockwise hull edge exactly when no
    point lies strictly to its right; the hull area is half the sum of the
    cross products over those edges.  Cost is O(n^3) per set, fine for the
    small n used by the estimators.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[-2]
    if n == 3:
        return simplex_volume(X)
    x, y = X[..., 0], X[..., 1]
    dx = x[..., None, :] - x[..., :, None]  # [i, j] = x_j - x_i
    dy = y[..., None, :] - y[..., :, None]
    # side[i, j, k] = cross(p_j - p_i, p_k - p_i)
    side = dx[..., :, :, None] * dy[..., :, None, :] - dy[..., :, :, None] * dx[..., :, None, :]
    edge = np.all(side >= 0, axis=-1) & ~np.eye(n, dtype=bool)
    cross = x[..., :, None] * y[..., None, :] - x[..., None, :] * y[..., :, None]
    return 0.5 * np.sum(np.where(edge, cross, 0.0), axis=(-2, -1))
