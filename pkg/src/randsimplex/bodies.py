"""Convex bodies and the deterministic geometry used by the estimators.

Four body families are supported: exact planar polygons and d-dimensional
balls, ellipsoids and simplices.  Polygons carry their vertices in strictly
convex counterclockwise order; every function returning a polygon goes
through :func:`make_polygon` or the validating :class:`Polygon` constructor,
so that invariant holds on all outputs.
"""

from dataclasses import dataclass
from functools import cached_property
from math import factorial
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from ._validation import (
    REL_TOL,
    ChordMissError,
    ChordTangentError,
    DegenerateHullError,
    GeometryError,
    check_direction,
    check_matrix,
    check_points,
    check_polygon,
    check_positive_int,
    check_vector,
)

__all__ = [
    "Ball",
    "Chord",
    "ConvexBody",
    "Ellipsoid",
    "InscribedTriangle",
    "Polygon",
    "PolygonMeasures",
    "Simplex",
    "affine_apply",
    "chord",
    "convex_hull_2d",
    "directional_functionals",
    "make_polygon",
    "max_inscribed_triangle",
    "minkowski_sum",
    "polar_dual",
    "polygon_measures",
    "random_polygon",
    "regular_polygon",
    "same_polygon",
    "standard_body",
    "steiner_symmetral",
    "unit_ball_volume",
]


def unit_ball_volume(d):
    """Volume of the d-dimensional unit ball, evaluated through log-Gamma."""
    d = check_positive_int(d, "d", minimum=0)
    return float(np.exp(0.5 * d * np.log(np.pi) - gammaln(0.5 * d + 1.0)))


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (
        b[..., 0] - o[..., 0]
    )


def _perp(v):
    """Rotate 2-D vectors by +90 degrees."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class ConvexBody:
    """Common interface of all body families."""

    dim: int

    @property
    def volume(self):
        raise NotImplementedError

    @property
    def centroid(self):
        raise NotImplementedError

    @property
    def inertia(self):
        """Second moments about the centroid, ``int_K (x-g)(x-g)^T dx``."""
        raise NotImplementedError

    def support(self, u):
        raise NotImplementedError

    def radial(self, u, origin=None):
        raise NotImplementedError

    def contains(self, X, tol=1e-12):
        raise NotImplementedError


class Polygon(ConvexBody):
    """Strictly convex polygon with counterclockwise vertices.

    The constructor only validates; use :func:`make_polygon` to build a
    polygon from an arbitrary point set.
    """

    dim = 2

    def __init__(self, vertices):
        V = check_points(vertices, dim=2, min_count=3, name="vertices")
        scale = _diameter(V)
        if scale == 0.0:
            raise DegenerateHullError("polygon vertices coincide")
        turns = _cross(np.roll(V, 1, axis=0), V, np.roll(V, -1, axis=0))
        if np.any(turns <= REL_TOL * scale**2):
            raise GeometryError(
                "vertices are not in strictly convex counterclockwise position"
            )
        V = V.copy()
        V.flags.writeable = False
        self._vertices = V

    @property
    def vertices(self):
        return self._vertices

    @property
    def n_vertices(self):
        return self._vertices.shape[0]

    def __len__(self):
        return self.n_vertices

    def __repr__(self):
        return f"Polygon(n_vertices={self.n_vertices}, area={self.volume:.6g})"

    @cached_property
    def _measures(self):
        return _polygon_moments(self._vertices)

    @property
    def volume(self):
        return self._measures.area

    area = volume

    @property
    def centroid(self):
        return self._measures.centroid

    @property
    def inertia(self):
        return self._measures.inertia

    @cached_property
    def diameter(self):
        return _diameter(self._vertices)

    @cached_property
    def halfplanes(self):
        """Outward (non-normalised) edge normals ``N`` and offsets ``h`` with
        ``P = {x : N x <= h}``."""
        V = self._vertices
        E = np.roll(V, -1, axis=0) - V
        N = np.stack([E[:, 1], -E[:, 0]], axis=1)
        h = np.einsum("ij,ij->i", N, V)
        N.flags.writeable = False
        h.flags.writeable = False
        return N, h

    def support(self, u):
        U = np.asarray(u, dtype=float)
        return np.max(U @ self._vertices.T, axis=-1)

    def radial(self, u, origin=None):
        o = np.zeros(2) if origin is None else check_vector(origin, 2, "origin")
        N, h = self.halfplanes
        slack = h - N @ o
        if np.any(slack <= REL_TOL * self.diameter * np.linalg.norm(N, axis=1)):
            raise GeometryError("radial function needs an origin in the interior")
        U = np.asarray(u, dtype=float)
        D = U @ N.T
        with np.errstate(divide="ignore", invalid="ignore"):
            T = np.where(D > 0, slack / D, np.inf)
        return np.min(T, axis=-1)

    def contains(self, X, tol=1e-12):
        N, h = self.halfplanes
        X = np.asarray(X, dtype=float)
        slack = h - X @ N.T
        return np.all(slack >= -tol * self.diameter * np.linalg.norm(N, axis=1), axis=-1)


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    dim: int
    radius: float = 1.0
    center: np.ndarray = None

    def __post_init__(self):
        d = check_positive_int(self.dim, "dim")
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")
        c = np.zeros(d) if self.center is None else check_vector(self.center, d, "center")
        c.flags.writeable = False
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "center", c)

    @property
    def volume(self):
        return unit_ball_volume(self.dim) * self.radius**self.dim

    @property
    def centroid(self):
        return self.center.copy()

    @property
    def inertia(self):
        d = self.dim
        return unit_ball_volume(d) * self.radius ** (d + 2) / (d + 2) * np.eye(d)

    def support(self, u):
        U = np.asarray(u, dtype=float)
        return U @ self.center + self.radius * np.linalg.norm(U, axis=-1)

    def radial(self, u, origin=None):
        return self.as_ellipsoid().radial(u, origin)

    def contains(self, X, tol=1e-12):
        X = np.asarray(X, dtype=float)
        return np.linalg.norm(X - self.center, axis=-1) <= self.radius * (1 + tol)

    def as_ellipsoid(self):
        return Ellipsoid(self.radius * np.eye(self.dim), self.center)


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """``{center + transform @ w : |w| <= 1}`` for a non-singular ``transform``.

    The transform is kept as given (it need not be symmetric) so that affine
    images map samples pointwise; :attr:`shape` is the symmetric positive
    definite representative.
    """

    transform: np.ndarray
    center: np.ndarray = None

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.transform, dtype=float))
        d = T.shape[0]
        T = check_matrix(T, d, "transform")
        c = np.zeros(d) if self.center is None else check_vector(self.center, d, "center")
        T = T.copy()
        T.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "transform", T)
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return self.transform.shape[0]

    @cached_property
    def shape(self):
        w, Q = np.linalg.eigh(self.transform @ self.transform.T)
        return (Q * np.sqrt(w)) @ Q.T

    @property
    def volume(self):
        return unit_ball_volume(self.dim) * abs(np.linalg.det(self.transform))

    @property
    def centroid(self):
        return self.center.copy()

    @property
    def inertia(self):
        d = self.dim
        T = self.transform
        return self.volume / (d + 2) * (T @ T.T)

    def support(self, u):
        U = np.asarray(u, dtype=float)
        return U @ self.center + np.linalg.norm(U @ self.transform, axis=-1)

    def radial(self, u, origin=None):
        d = self.dim
        o = np.zeros(d) if origin is None else check_vector(origin, d, "origin")
        Tinv = np.linalg.inv(self.transform)
        b = Tinv @ (o - self.center)
        bb = b @ b
        if bb >= 1.0 - REL_TOL:
            raise GeometryError("radial function needs an origin in the interior")
        a = np.asarray(u, dtype=float) @ Tinv.T
        aa = np.einsum("...i,...i->...", a, a)
        ab = a @ b
        return (-ab + np.sqrt(ab**2 - aa * (bb - 1.0))) / aa

    def contains(self, X, tol=1e-12):
        W = (np.asarray(X, dtype=float) - self.center) @ np.linalg.inv(self.transform).T
        return np.linalg.norm(W, axis=-1) <= 1 + tol


@dataclass(frozen=True, eq=False)
class Simplex(ConvexBody):
    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        d = V.shape[1]
        V = check_points(V, dim=d, min_count=d + 1, name="vertices")
        if V.shape[0] != d + 1:
            raise GeometryError(f"a {d}-simplex needs {d + 1} vertices, got {V.shape[0]}")
        vol = abs(np.linalg.det(V[1:] - V[0])) / factorial(d)
        scale = max(_diameter(V), 1e-300)
        if vol <= REL_TOL * scale**d:
            raise DegenerateHullError("simplex vertices are affinely dependent")
        V = V.copy()
        V.flags.writeable = False
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def volume(self):
        V = self.vertices
        return abs(np.linalg.det(V[1:] - V[0])) / factorial(self.dim)

    @property
    def centroid(self):
        return self.vertices.mean(axis=0)

    @property
    def inertia(self):
        d = self.dim
        g = self.centroid
        W = self.vertices - g
        s = W.sum(axis=0)
        return self.volume / ((d + 1) * (d + 2)) * (W.T @ W + np.outer(s, s))

    @cached_property
    def _barycentric(self):
        # lambda(x) = L @ x + l0, rows indexed by vertex
        d = self.dim
        A = np.vstack([self.vertices.T, np.ones(d + 1)])
        Ainv = np.linalg.inv(A)
        return Ainv[:, :d], Ainv[:, d]

    def support(self, u):
        return np.max(np.asarray(u, dtype=float) @ self.vertices.T, axis=-1)

    def radial(self, u, origin=None):
        d = self.dim
        o = np.zeros(d) if origin is None else check_vector(origin, d, "origin")
        L, l0 = self._barycentric
        lam = L @ o + l0
        if np.any(lam <= REL_TOL):
            raise GeometryError("radial function needs an origin in the interior")
        D = np.asarray(u, dtype=float) @ L.T
        with np.errstate(divide="ignore", invalid="ignore"):
            T = np.where(D < 0, lam / -D, np.inf)
        return np.min(T, axis=-1)

    def contains(self, X, tol=1e-12):
        L, l0 = self._barycentric
        lam = np.asarray(X, dtype=float) @ L.T + l0
        return np.all(lam >= -tol, axis=-1)


class PolygonMeasures(NamedTuple):
    area: float
    centroid: np.ndarray
    inertia: np.ndarray


@dataclass(frozen=True)
class Chord:
    """Secant of a body through ``base`` parallel to ``direction``."""

    base: np.ndarray
    direction: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def midpoint(self):
        return 0.5 * (self.a + self.b)

    @property
    def offset(self):
        """Signed distance from the base point to the midpoint along the direction."""
        return float((self.midpoint - self.base) @ self.direction)

    @property
    def length(self):
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class InscribedTriangle:
    triangle: np.ndarray
    outer: np.ndarray
    ratio: float
    indices: tuple

    @property
    def area(self):
        return _triangle_area(self.triangle)

    @property
    def outer_area(self):
        return _triangle_area(self.outer)


def _triangle_area(T):
    return 0.5 * abs(float(_cross(T[0], T[1], T[2])))


def _diameter(V):
    V = np.asarray(V, dtype=float)
    return float(np.max(np.ptp(V, axis=0))) if len(V) else 0.0


def _polygon_moments(V):
    ref = V.mean(axis=0)
    W = V - ref
    x, y = W[:, 0], W[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    c = x * y1 - x1 * y
    area = c.sum() / 2.0
    sx = ((x + x1) * c).sum() / 6.0
    sy = ((y + y1) * c).sum() / 6.0
    ixx = ((x * x + x * x1 + x1 * x1) * c).sum() / 12.0
    iyy = ((y * y + y * y1 + y1 * y1) * c).sum() / 12.0
    ixy = ((x * y1 + 2 * x * y + 2 * x1 * y1 + x1 * y) * c).sum() / 24.0
    g = np.array([sx, sy]) / area
    M = np.array([[ixx, ixy], [ixy, iyy]]) - area * np.outer(g, g)
    return PolygonMeasures(float(area), g + ref, M)


def polygon_measures(P):
    """Exact area, centroid and central inertia matrix of a polygon."""
    P = check_polygon(P)
    m = P._measures
    return PolygonMeasures(m.area, m.centroid.copy(), m.inertia.copy())


def convex_hull_2d(points, tol=REL_TOL):
    """Monotone-chain hull; returns CCW extreme points with collinear ones dropped."""
    X = check_points(points, dim=2, min_count=1)
    X = np.unique(X, axis=0)  # lexicographic sort
    if len(X) < 3:
        raise DegenerateHullError("fewer than three distinct points")
    eps = tol * _diameter(X) ** 2

    def half(pts):
        chain = []
        for p in pts:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= eps:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(X)
    upper = half(X[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    # the chains are tested only internally; repeat the turn test cyclically
    # (same scale as the Polygon check) so near-collinear junctions go too
    while len(hull) >= 3:
        eps_h = tol * _diameter(hull) ** 2
        turns = _cross(np.roll(hull, 1, axis=0), hull, np.roll(hull, -1, axis=0))
        bad = np.flatnonzero(turns <= eps_h)
        if len(bad) == 0:
            break
        hull = np.delete(hull, bad[np.argmin(turns[bad])], axis=0)
    if len(hull) < 3:
        raise DegenerateHullError("points are collinear")
    return hull


def make_polygon(vertices, required=None):
    """Build a polygon from an arbitrary planar point set.

    ``required`` optionally lists indices of input points that must survive as
    hull vertices; a point that turns out to be interior or collinear raises.
    """
    X = check_points(vertices, dim=2, min_count=3)
    hull = convex_hull_2d(X)
    if required is not None:
        for i in np.atleast_1d(required):
            if not np.any(np.all(hull == X[int(i)], axis=1)):
                raise GeometryError(f"point {int(i)} is not an extreme point")
    return Polygon(hull)


def regular_polygon(n, radius=1.0, phase=None, center=(0.0, 0.0)):
    """Regular n-gon inscribed in a circle; default phase pi/n gives a flat bottom edge."""
    n = check_positive_int(n, "n", minimum=3)
    phase = np.pi / n if phase is None else float(phase)
    t = phase + 2 * np.pi * np.arange(n) / n
    V = radius * np.column_stack([np.cos(t), np.sin(t)]) + np.asarray(center, dtype=float)
    return Polygon(V)


def random_polygon(n, seed=None, affine=False):
    """Random convex polygon with exactly ``n`` vertices."""
    n = check_positive_int(n, "n", minimum=3)
    rng = np.random.default_rng(seed)
    for attempt in range(100):
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
        # jittered radii for small n; large n rarely stays in convex position
        r = rng.uniform(0.6, 1.0, n) if attempt < 20 else np.ones(n)
        P = np.column_stack([r * np.cos(t), r * np.sin(t)])
        try:
            hull = convex_hull_2d(P, tol=1e-6)
        except DegenerateHullError:
            continue
        if len(hull) == n:
            if affine:
                A = rng.normal(size=(2, 2)) + 2 * np.eye(2)
                hull = hull @ A.T + rng.normal(size=2)
                if np.linalg.det(A) < 0:
                    hull = hull[::-1]
            return Polygon(hull)
    raise RuntimeError(f"could not draw a convex {n}-gon")


def standard_body(kind, d=2):
    """Reference bodies: unit ball, standard simplex, square [-1,1]^2, regular n-gon.

    For ``regular_polygon`` the second argument is the side count.
    """
    if kind == "ball":
        return Ball(check_positive_int(d, "d"))
    if kind == "simplex":
        d = check_positive_int(d, "d")
        V = np.vstack([np.zeros(d), np.eye(d)])
        # planar simplices are returned as polygons so the 2-D geometry applies
        return Polygon(V) if d == 2 else Simplex(V)
    if kind == "square":
        return Polygon([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    if kind == "regular_polygon":
        return regular_polygon(d)
    raise GeometryError(f"unknown standard body {kind!r}")


def affine_apply(linear, shift, K):
    """Image of ``K`` under ``x -> linear @ x + shift``, in the same family."""
    d = K.dim
    A = check_matrix(linear, d, "linear")
    b = check_vector(shift, d, "shift")
    if isinstance(K, Polygon):
        V = K.vertices @ A.T + b
        if np.linalg.det(A) < 0:
            V = V[::-1]
        return Polygon(V)
    if isinstance(K, Ball):
        return Ellipsoid(K.radius * A, A @ K.center + b)
    if isinstance(K, Ellipsoid):
        return Ellipsoid(A @ K.transform, A @ K.center + b)
    if isinstance(K, Simplex):
        return Simplex(K.vertices @ A.T + b)
    raise GeometryError(f"unsupported body {type(K).__name__}")


def directional_functionals(K, u, origin=None):
    """Support value ``h_K(u)`` and radial value ``rho_K(u)`` about ``origin``."""
    u = check_direction(u, K.dim, "u")
    h = float(K.support(u))
    rho = float(K.radial(u, origin))
    return h, rho


def chord(P, x, v):
    """Chord of ``P`` on the line ``x + R v``."""
    P = check_polygon(P)
    x = check_vector(x, 2, "x")
    v = check_direction(v)
    N, h = P.halfplanes
    D = N @ v
    R = h - N @ x
    scale = P.diameter
    norms = np.linalg.norm(N, axis=1)
    par = np.abs(D) <= REL_TOL * norms
    if np.any(par & (R < -REL_TOL * scale * norms)):
        raise ChordMissError("line misses the polygon")
    with np.errstate(divide="ignore"):
        hi = np.min(np.where(D > 0, R / np.where(par, 1, D), np.inf)[~par])
        lo = np.max(np.where(D < 0, R / np.where(par, 1, D), -np.inf)[~par])
    if lo > hi + REL_TOL * scale:
        raise ChordMissError("line misses the polygon")
    if hi - lo <= 1e-9 * scale:
        raise ChordTangentError("line touches the polygon in a single point")
    return Chord(base=x, direction=v, a=x + lo * v, b=x + hi * v)


def _chains(V, v, ys):
    """Lower and upper extent along ``v`` of the chords ``{y w + s v}``, w = perp(v)."""
    w = _perp(v)
    Y = V @ w
    S = V @ v
    n = len(V)
    scale = _diameter(V)
    tol = REL_TOL * scale
    i0, i1 = int(np.argmin(Y)), int(np.argmax(Y))

    def path(step):
        idx = [i0]
        i = i0
        while i != i1:
            i = (i + step) % n
            idx.append(i)
        idx = np.array(idx)
        y, s = Y[idx], S[idx]
        # drop duplicated extreme ordinates (edges parallel to v)
        keep = np.ones(len(idx), dtype=bool)
        while keep.sum() > 2 and abs(y[keep][1] - y[keep][0]) <= tol:
            keep[np.flatnonzero(keep)[0]] = False
        while keep.sum() > 2 and abs(y[keep][-1] - y[keep][-2]) <= tol:
            keep[np.flatnonzero(keep)[-1]] = False
        return np.maximum.accumulate(y[keep]), s[keep]

    ya, sa = path(1)
    yb, sb = path(-1)
    ys = np.clip(np.asarray(ys, dtype=float), Y[i0], Y[i1])
    a = np.interp(ys, ya, sa)
    b = np.interp(ys, yb, sb)
    return np.minimum(a, b), np.maximum(a, b)


def _breakpoints(V, v):
    w = _perp(v)
    Y = np.sort(V @ w)
    tol = REL_TOL * _diameter(V)
    keep = np.concatenate([[True], np.diff(Y) > tol])
    return Y[keep]


def steiner_symmetral(P, v):
    """Steiner symmetral of ``P`` about the line through the origin normal to ``v``."""
    P = check_polygon(P)
    v = check_direction(v)
    w = _perp(v)
    ys = _breakpoints(P.vertices, v)
    lo, hi = _chains(P.vertices, v, ys)
    half = 0.5 * (hi - lo)
    pts = np.concatenate(
        [ys[:, None] * w + half[:, None] * v, ys[:, None] * w - half[:, None] * v]
    )
    return make_polygon(pts)


def max_inscribed_triangle(P):
    """Maximum-area triangle with vertices among the polygon vertices.

    Exhaustive over vertex triples, vectorised over the last two indices.
    """
    P = check_polygon(P)
    V = P.vertices
    n = len(V)
    best, best_idx = -1.0, None
    for i in range(n - 2):
        rest = V[i + 1 :]
        A = 0.5 * np.abs(_cross(V[i], rest[:, None, :], rest[None, :, :]))
        A = np.triu(A, 1)
        j, k = np.unravel_index(np.argmax(A), A.shape)
        if A[j, k] > best:
            best, best_idx = float(A[j, k]), (i, i + 1 + j, i + 1 + k)
    T = V[list(best_idx)]
    outer = T.sum(axis=0) - 2 * T  # q_i = p_j + p_k - p_i
    return InscribedTriangle(
        triangle=T, outer=outer, ratio=P.volume / best, indices=tuple(int(i) for i in best_idx)
    )


def polar_dual(P, origin=None):
    """Polar polygon ``{y : <x - o, y> <= 1 for x in P}``, vertex per edge of P."""
    P = check_polygon(P)
    o = np.zeros(2) if origin is None else check_vector(origin, 2, "origin")
    N, h = P.halfplanes
    slack = h - N @ o
    if np.any(slack <= REL_TOL * P.diameter * np.linalg.norm(N, axis=1)):
        raise GeometryError("polarity needs the origin strictly inside the polygon")
    return Polygon(N / slack[:, None])


def minkowski_sum(P, Q):
    """Minkowski sum of two convex polygons by merging edge sequences."""
    P, Q = check_polygon(P), check_polygon(Q)

    def start(V):
        i = np.lexsort((V[:, 0], V[:, 1]))[0]
        return np.roll(V, -i, axis=0)

    A, B = start(P.vertices), start(Q.vertices)
    eA, eB = np.diff(A, axis=0, append=A[:1]), np.diff(B, axis=0, append=B[:1])
    angA = np.mod(np.arctan2(eA[:, 1], eA[:, 0]), 2 * np.pi)
    angB = np.mod(np.arctan2(eB[:, 1], eB[:, 0]), 2 * np.pi)
    edges = np.concatenate([eA, eB])
    order = np.argsort(np.concatenate([angA, angB]), kind="stable")
    pts = A[0] + B[0] + np.cumsum(edges[order], axis=0)
    return make_polygon(pts)


def same_polygon(P, Q, tol=1e-10):
    """True if two polygons have the same vertex set up to cyclic re-indexing."""
    A, B = P.vertices, Q.vertices
    if A.shape != B.shape:
        return False
    for s in range(len(B)):
        if np.max(np.abs(A - np.roll(B, s, axis=0))) <= tol * max(P.diameter, 1.0):
            return True
    return False
