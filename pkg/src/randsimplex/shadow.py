"""Linear shadow systems of polygons.

A system is stored through its chord structure: the distinct projections
``y_j`` of the base vertices onto the line orthogonal to the moving
direction ``v``, the lower and upper chord ends ``lo_j``, ``hi_j`` along ``v``
and a speed ``phi_j`` per breakpoint.  The speed is linear between
breakpoints, so the member at time t has the vertices
``y_j w + (lo_j + t phi_j) v`` and ``y_j w + (hi_j + t phi_j) v``.
"""

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from ._validation import GeometryError, check_direction, check_polygon, check_positive_int, check_seed
from .bodies import Polygon, _breakpoints, _chains, _perp, make_polygon, max_inscribed_triangle, regular_polygon
from .moments import CHUNK, FunctionalSpec, MomentEstimate, _reduce, _volumes, estimate_moment
from .sampling import SampleStream

__all__ = [
    "BMBracket",
    "BasicSystem",
    "ConvexityProfile",
    "ReductionStep",
    "ReductionTrace",
    "ShadowSystem",
    "basic_system",
    "bm_triangle_bracket",
    "convexity_profile",
    "family_generator",
    "reduce_to_triangle",
    "shadow_eval",
    "steiner_shadow",
]

_RANGE_TOL = 1e-12


def _slope_changes(y, f):
    """Change of slope of the piecewise linear interpolant at interior breakpoints."""
    s = np.diff(f) / np.diff(y)
    return np.diff(s)


def _convexity_range(y, lo, hi, phi):
    """Largest interval of t for which every member is convex."""
    if len(y) < 3:
        return -np.inf, np.inf
    dl, dh, dp = _slope_changes(y, lo), _slope_changes(y, hi), _slope_changes(y, phi)
    # the base is convex, so a straight stretch of a chain shows up as a
    # round-off sized slope change of either sign; likewise a speed that is
    # linear across a breakpoint.  Neither may constrain t.
    slopes = np.concatenate([np.diff(f) / np.diff(y) for f in (lo, hi, phi)])
    tol = 1e-9 * (1.0 + np.max(np.abs(slopes)))
    dl, dh = np.maximum(dl, 0.0), np.minimum(dh, 0.0)
    dp = np.where(np.abs(dp) <= tol, 0.0, dp)
    tmin, tmax = -np.inf, np.inf
    # need dl + t dp >= 0 and dh + t dp <= 0
    for a, sgn in ((dl, 1.0), (-dh, -1.0)):
        b = sgn * dp
        pos, neg = b > 0, b < 0
        if np.any(pos):
            tmin = max(tmin, np.max(-a[pos] / b[pos]))
        if np.any(neg):
            tmax = min(tmax, np.min(-a[neg] / b[neg]))
    return tmin, tmax


def _integral_weighted(y, length, phi):
    """Exact integral of phi(y) * length(y) for piecewise linear factors."""
    h = np.diff(y)
    l0, l1, p0, p1 = length[:-1], length[1:], phi[:-1], phi[1:]
    return float(np.sum(h * (2 * l0 * p0 + l0 * p1 + l1 * p0 + 2 * l1 * p1) / 6.0))


@dataclass(frozen=True)
class ShadowSystem:
    """Volume-preserving family K_t = {x + t phi(x) v} of convex polygons."""

    direction: np.ndarray
    y: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    phi: np.ndarray
    t_min: float
    t_max: float
    recentred: bool = False

    @classmethod
    def from_polygon(cls, P, v, speed, t_range=None, recentre=False):
        """System over ``P`` with ``speed(y)`` evaluated at the chord breakpoints."""
        P = check_polygon(P)
        v = check_direction(v)
        y = _breakpoints(P.vertices, v)
        lo, hi = _chains(P.vertices, v, y)
        phi = np.asarray(speed(y), dtype=float)
        return cls._build(v, y, lo, hi, phi, t_range, recentre)

    @classmethod
    def _build(cls, v, y, lo, hi, phi, t_range, recentre):
        length = hi - lo
        area = 0.5 * float(np.sum(np.diff(y) * (length[:-1] + length[1:])))
        omega = _integral_weighted(y, length, phi) / area
        if recentre:
            phi = phi - omega
        a, b = _convexity_range(y, lo, hi, phi)
        if t_range is not None:
            a, b = max(a, t_range[0]), min(b, t_range[1])
        if not a <= 0 <= b:
            raise GeometryError("base polygon is not inside the convexity range")
        for arr in (v, y, lo, hi, phi):
            arr.flags.writeable = False
        return cls(v, y, lo, hi, phi, float(a), float(b), bool(recentre))

    @property
    def base(self):
        return self.at(0.0)

    @property
    def area(self):
        length = self.hi - self.lo
        return 0.5 * float(np.sum(np.diff(self.y) * (length[:-1] + length[1:])))

    @property
    def omega(self):
        """Centroid drift rate: gamma(K_t) = gamma(K_0) + t * omega * v."""
        return _integral_weighted(self.y, self.hi - self.lo, self.phi) / self.area

    def speed(self, X):
        """phi at points X (constant along chords parallel to the direction)."""
        w = _perp(self.direction)
        return np.interp(np.asarray(X) @ w, self.y, self.phi)

    def vertex_speeds(self, P=None):
        P = self.base if P is None else P
        return self.speed(P.vertices)

    def at(self, t):
        if not self.t_min - _RANGE_TOL <= t <= self.t_max + _RANGE_TOL:
            raise GeometryError(f"t={t} outside the range [{self.t_min}, {self.t_max}]")
        v, w = self.direction, _perp(self.direction)
        lo = self.lo + t * self.phi
        hi = self.hi + t * self.phi
        pts = np.concatenate([self.y[:, None] * w + lo[:, None] * v, self.y[:, None] * w + hi[:, None] * v])
        return make_polygon(pts)

    def push(self, X, t):
        """Image of points of the base polygon at time t."""
        return X + t * self.speed(X)[:, None] * self.direction


def shadow_eval(S, t):
    """Member of the system at parameter ``t``."""
    return S.at(float(t))


def steiner_shadow(P, v):
    """System through P (t=1), its Steiner symmetral (t=0) and its mirror image (t=-1)."""
    P = check_polygon(P)
    v = check_direction(v)
    y = _breakpoints(P.vertices, v)
    lo, hi = _chains(P.vertices, v, y)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    S = ShadowSystem._build(v, y, -half, half, mid, (-1.0, 1.0), False)
    # every member is convex on [-1, 1] (chords keep their lengths and the
    # midpoints move along a scaled copy of P's midpoint curve); pin the range
    # so round-off in the slope test cannot shave the endpoints
    return replace(S, t_min=-1.0, t_max=1.0)


@dataclass(frozen=True)
class BasicSystem:
    """System moving a single vertex q1 parallel to q2 - qk.

    ``plus`` is the member at ``t = alpha`` and ``minus`` the member at
    ``t = -beta``; ``capped_plus``/``capped_minus`` flag a side whose moving
    line never meets the blocking edge, so it was cut at ``max_shift``.
    """

    system: ShadowSystem
    vertex: int
    q_plus: np.ndarray
    q_minus: np.ndarray
    alpha: float
    beta: float
    plus: Polygon
    minus: Polygon
    capped_plus: bool = False
    capped_minus: bool = False

    @property
    def capped(self):
        return self.capped_plus or self.capped_minus


def _line_hit(p, d, a, b):
    """Parameter s with p + s d on the line through a and b; None if parallel."""
    e = b - a
    den = d[0] * e[1] - d[1] * e[0]
    if abs(den) <= 1e-12 * np.linalg.norm(d) * np.linalg.norm(e):
        return None
    r = a - p
    return (r[0] * e[1] - r[1] * e[0]) / den


def basic_system(P, i, max_shift=None):
    """Basic system at vertex ``i`` of a polygon with at least four vertices."""
    P = check_polygon(P)
    V = P.vertices
    n = len(V)
    if n < 4:
        raise GeometryError("a triangle admits no basic system")
    i = int(i) % n
    q1, q2, qk = V[i], V[(i + 1) % n], V[i - 1]
    q3, qk1 = V[(i + 2) % n], V[(i - 2) % n]
    d = (q2 - qk) / np.linalg.norm(q2 - qk)
    cap = 10.0 * P.diameter if max_shift is None else float(max_shift)
    s_plus = _line_hit(q1, d, qk, qk1)
    s_minus = _line_hit(q1, d, q2, q3)
    capped_plus = capped_minus = False
    if s_plus is None and s_minus is None:
        raise GeometryError("movement is unbounded on both sides")
    if s_plus is None:
        s_plus, capped_plus = -np.sign(s_minus) * cap, True
    if s_minus is None:
        s_minus, capped_minus = -np.sign(s_plus) * cap, True
    if not s_plus * s_minus < 0:
        raise GeometryError("vertex is not between its blocking lines")
    q_plus, q_minus = q1 + s_plus * d, q1 + s_minus * d
    span = q_plus - q_minus
    L = float(np.linalg.norm(span))
    v = span / L
    alpha, beta = abs(s_plus) / L, abs(s_minus) / L

    w = _perp(v)
    y0, y1 = q2 @ w, q1 @ w

    def speed(y):
        return L * np.clip((y - y0) / (y1 - y0), 0.0, None)

    S = ShadowSystem.from_polygon(P, v, speed, t_range=(-beta, alpha))
    # endpoints are built from the vertex lists directly, so the lost vertex is exact
    plus = make_polygon(np.vstack([np.delete(V, i, axis=0), q_plus]))
    minus = make_polygon(np.vstack([np.delete(V, i, axis=0), q_minus]))
    return BasicSystem(S, i, q_plus, q_minus, alpha, beta, plus, minus, capped_plus, capped_minus)


# -- convexity profiles ---------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityProfile:
    grid: np.ndarray
    estimates: tuple
    second_differences: np.ndarray
    second_stderr: np.ndarray
    areas: np.ndarray = None
    vertex_counts: tuple = None

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "stderr", "area", "vertex_count", "second_difference", "second_stderr"])
        d2 = np.concatenate([[np.nan], self.second_differences, [np.nan]])
        s2 = np.concatenate([[np.nan], self.second_stderr, [np.nan]])
        G = len(self.grid)
        areas = self.areas if self.areas is not None else [np.nan] * G
        counts = self.vertex_counts if self.vertex_counts is not None else [""] * G
        for t, e, ar, nv, a, b in zip(self.grid, self.estimates, areas, counts, d2, s2):
            w.writerow([repr(float(t)), repr(e.value), repr(e.stderr), repr(float(ar)), nv,
                        repr(float(a)), repr(float(b))])
        return buf.getvalue()


def _second_difference_weights(grid):
    h1, h2 = np.diff(grid)[:-1], np.diff(grid)[1:]
    W = np.zeros((len(grid) - 2, len(grid)))
    for j in range(len(grid) - 2):
        # scaled so that a uniform grid gives f(t-h) - 2 f(t) + f(t+h)
        hbar = 0.5 * (h1[j] + h2[j])
        W[j, j] = hbar / h1[j]
        W[j, j + 1] = -hbar / h1[j] - hbar / h2[j]
        W[j, j + 2] = hbar / h2[j]
    return W


def convexity_profile(S, spec, grid, samples, seed, threads=1):
    """Estimates of a functional along a shadow system with common random numbers.

    Every trial samples the base member once and pushes the points along the
    system, which is measure preserving; the pinned centroid moves with the
    exact drift.  Each trial's statistic is then a convex function of t, and
    the centred second differences are computed per trial.
    """
    if spec.d != 2:
        raise GeometryError("shadow systems are planar")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3 or np.any(np.diff(grid) <= 0):
        raise GeometryError("grid must be strictly increasing with at least three points")
    if grid[0] < S.t_min - _RANGE_TOL or grid[-1] > S.t_max + _RANGE_TOL:
        raise GeometryError("grid leaves the convexity range")
    samples = check_positive_int(samples, "samples", minimum=1000)
    seed = check_seed(seed)
    K0 = S.base
    V = K0.volume
    m = spec.free_points
    src = SampleStream(K0, seed, 0)
    g0 = K0.centroid
    drift = S.omega * S.direction
    fixed = np.asarray(spec.x, dtype=float) if spec.kind == "fixed" else None
    W = _second_difference_weights(grid)

    def stat(start, count):
        X = src.points(start * m, count * m)
        cols = []
        for t in grid:
            pts = S.push(X, t).reshape(count, m, 2)
            pinned = g0 + t * drift if spec.kind == "centroid" else fixed
            cols.append((_volumes(pts, pinned, spec) / V) ** spec.p)
        F = np.column_stack(cols)
        return np.hstack([F, F @ W.T])

    acc = _reduce(stat, samples, threads, CHUNK)
    se = np.sqrt(np.diag(acc.cov_of_mean()))
    G = len(grid)
    ests = tuple(MomentEstimate(float(acc.mean[j]), float(se[j]), samples, seed, spec) for j in range(G))
    members = [S.at(t) for t in grid]
    return ConvexityProfile(grid, ests, acc.mean[G:].copy(), se[G:].copy(),
                            np.array([P.volume for P in members]), tuple(len(P.vertices) for P in members))


# -- reduction to a triangle ---------------------------------------------------------


@dataclass(frozen=True)
class ReductionStep:
    polygon: Polygon
    estimate: MomentEstimate
    vertex: int
    side: str


@dataclass(frozen=True)
class ReductionTrace:
    initial: Polygon
    initial_estimate: MomentEstimate
    steps: tuple

    @property
    def final(self):
        return self.steps[-1] if self.steps else None

    def values(self):
        return [self.initial_estimate] + [s.estimate for s in self.steps]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "value", "stderr", "area", "vertex_count"])
        polys = [self.initial] + [s.polygon for s in self.steps]
        for k, (P, e) in enumerate(zip(polys, self.values())):
            w.writerow([k, repr(e.value), repr(e.stderr), repr(P.volume), P.n_vertices])
        return buf.getvalue()


def reduce_to_triangle(P, spec, samples, seed, threads=1):
    """Deform a polygon into a triangle through basic systems, greedily.

    At each step every vertex's basic system is tried; the endpoint with the
    largest estimate (lowest vertex index on ties) is kept.  Capped sides are
    skipped because they do not remove a vertex.
    """
    P = check_polygon(P)
    if spec.kind not in ("full", "centroid"):
        raise GeometryError("reduction supports the full and centroid functionals")

    def est(Q):
        return estimate_moment(Q, spec, samples, seed, threads)

    current, current_est = P, est(P)
    initial_est = current_est
    steps = []
    while current.n_vertices > 3:
        best = None
        for i in range(current.n_vertices):
            try:
                B = basic_system(current, i)
            except GeometryError:
                continue
            for side, Q, capped in (("plus", B.plus, B.capped_plus), ("minus", B.minus, B.capped_minus)):
                if capped or Q.n_vertices >= current.n_vertices:
                    continue
                e = est(Q)
                if best is None or e.value > best[1].value:
                    best = (Q, e, i, side)
        if best is None:
            raise GeometryError("no basic system reduces the polygon")
        current, current_est = best[0], best[1]
        steps.append(ReductionStep(best[0], best[1], best[2], best[3]))
    return ReductionTrace(P, initial_est, tuple(steps))


# -- Banach-Mazur bracket and parametrised families ------------------------------------


@dataclass(frozen=True)
class BMBracket:
    """Bracket ``lower <= distance <= upper``; ``lower_open`` marks a strict bound."""

    lower: float
    upper: float
    lower_method: str
    upper_method: str
    lower_open: bool = False
    upper_open: bool = False


def bm_triangle_bracket(P):
    """Bracket on the Banach-Mazur distance to a triangle from the area ratio rho.

    rho = A(P) / A(T_P) for the maximal inscribed triangle gives
    sqrt(rho) < distance <= rho.
    """
    rho = max_inscribed_triangle(P).ratio
    if rho < 1 + 1e-12:
        return BMBracket(1.0, 1.0, "area ratio", "area ratio")
    return BMBracket(float(np.sqrt(rho)), float(rho), "sqrt area ratio", "area ratio", lower_open=True)


def family_generator(kind, param, resolution=512):
    """Members of the two sharpness families.

    ``spindle``: hull of the regular ``resolution``-gon (vertices at +-e1) and
    the points +-(1+param) e1.  ``truncated_triangle``: the triangle
    conv{0, e1, e2} with the corner param * T at the origin removed.
    """
    param = float(param)
    if kind == "spindle":
        if not 0 <= param < 1:
            raise GeometryError("spindle parameter must lie in [0, 1)")
        resolution = check_positive_int(resolution, "resolution", minimum=4)
        if resolution % 2:
            raise GeometryError("spindle resolution must be even")
        disc = regular_polygon(resolution, phase=0.0)
        if param == 0:
            return disc
        tips = np.array([[1 + param, 0.0], [-(1 + param), 0.0]])
        return make_polygon(np.vstack([disc.vertices, tips]))
    if kind == "truncated_triangle":
        if not 0 <= param < 1:
            raise GeometryError("truncation parameter must lie in [0, 1)")
        if param == 0:
            return Polygon([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        return Polygon([[param, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, param]])
    raise GeometryError(f"unknown family {kind!r}")
