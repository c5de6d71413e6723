"""Moment functionals of random simplex volumes.

Three functionals are supported, all normalised so they are affine
invariant: the full hull moment of n points, the moment of the simplex with
one vertex pinned at a point x, and the pinned moment at the centroid.
Monte Carlo estimators reduce fixed-size chunks in a fixed order, so results
do not depend on the number of worker threads.
"""

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from numbers import Integral

import numpy as np
from scipy.special import gammaln
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    GeometryError,
    check_body,
    check_polygon,
    check_positive_int,
    check_seed,
    check_vector,
)
from .bodies import Polygon, make_polygon, unit_ball_volume
from .derived import centroid_support, panel_quadrature
from .sampling import SampleStream, TriangleSoup, hull_area_2d, simplex_volume

__all__ = [
    "FunctionalSpec",
    "IdentityReport",
    "IsotropicPosition",
    "IsotropyResult",
    "MomentEstimate",
    "MomentEstimator",
    "Slack",
    "ball_moment",
    "estimate_moment",
    "estimate_moment_split",
    "estimates_to_csv",
    "first_moment_quadrature",
    "identity_report",
    "isotropy_constant",
    "kappa",
    "reed_moment",
    "simplex_second_moment_bound",
]

CHUNK = 1 << 16
MIN_SAMPLES = 1000


def kappa(d):
    """Volume of the unit ball in dimension ``d``."""
    return unit_ball_volume(check_positive_int(d, "d", minimum=0))


def _log_kappa(x):
    # real-dimension extension, used inside the closed forms
    return 0.5 * x * np.log(np.pi) - gammaln(0.5 * x + 1.0)


def _log_binom(a, b):
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def ball_moment(d, p, kind="centroid", variant="corrected"):
    """Closed-form moments of the unit ball.

    ``kind="full_simplex"`` is the hull moment of d+1 points; ``kind="centroid"``
    pins one vertex at the centre.  For the centroid kind the textbook
    expression is missing a factor (d!)^-p; ``variant="printed"`` evaluates it
    without that factor, for comparison only.
    """
    d = check_positive_int(d, "d")
    p = float(p)
    if not p >= 1:
        raise GeometryError("exponent p must be >= 1")
    ratio = sum(_log_kappa(i) - _log_kappa(p + i) for i in range(1, d + 1))
    log_fact = p * np.log(float(factorial(d)))
    if kind == "full_simplex":
        m = d * d + d * p + d
        val = (
            -log_fact
            - _log_binom(d + p, d)
            - (d + p + 1) * _log_kappa(d)
            + (d + 1) * _log_kappa(d + p)
            + _log_kappa(m)
            - _log_kappa(m + p)
            + ratio
        )
    elif kind == "centroid":
        val = -_log_binom(d + p, d) - (d + p) * _log_kappa(d) + d * _log_kappa(d + p) + ratio
        if variant == "corrected":
            val -= log_fact
        elif variant != "printed":
            raise GeometryError(f"unknown variant {variant!r}")
    else:
        raise GeometryError(f"unknown kind {kind!r}")
    return float(np.exp(val))


def reed_moment(p):
    """Exact p-th moment of the area of a random triangle in a triangle."""
    if isinstance(p, bool) or not isinstance(p, Integral):
        raise GeometryError("the closed form holds for integer p only")
    p = check_positive_int(p, "p")
    s = sum(Fraction(1, comb(p, i) ** 2) for i in range(p + 1))
    lead = Fraction(12, (p + 1) ** 3 * (p + 2) ** 3 * (p + 3) * (2 * p + 5))
    return lead * (6 * (p + 1) ** 2 + (p + 2) ** 2 * s)


def simplex_second_moment_bound(d):
    """Upper bound 1/d! on the centroid second moment of a d-simplex."""
    return 1.0 / factorial(check_positive_int(d, "d"))


@dataclass(frozen=True)
class FunctionalSpec:
    """Which moment functional to estimate.

    ``kind`` is ``"full"`` (hull of ``n`` points), ``"fixed"`` (one vertex
    pinned at ``x``) or ``"centroid"``.
    """

    kind: str
    p: float
    d: int
    n: int = None
    x: tuple = None

    def __post_init__(self):
        d = check_positive_int(self.d, "d")
        if not float(self.p) >= 1:
            raise GeometryError("exponent p must be >= 1")
        if self.kind == "full":
            n = check_positive_int(self.n, "n", minimum=d + 1)
            if d > 2 and n > d + 1:
                raise GeometryError("hull volumes for n > d+1 are implemented in the plane only")
            object.__setattr__(self, "n", n)
        elif self.kind == "fixed":
            if self.x is None:
                raise GeometryError("fixed-point functional needs x")
            object.__setattr__(self, "x", tuple(check_vector(self.x, d, "x").tolist()))
            object.__setattr__(self, "n", d + 1)
        elif self.kind == "centroid":
            object.__setattr__(self, "n", d + 1)
        else:
            raise GeometryError(f"unknown functional kind {self.kind!r}")
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def full(cls, n, p, d=2):
        return cls("full", p, d, n=n)

    @classmethod
    def centroid(cls, p, d=2):
        return cls("centroid", p, d)

    @classmethod
    def fixed_point(cls, x, p):
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls("fixed", p, len(x), x=tuple(x))

    @property
    def free_points(self):
        return self.n if self.kind == "full" else self.d

    def label(self):
        if self.kind == "full":
            return f"full({self.n})"
        if self.kind == "fixed":
            return "fixed(" + ",".join(f"{v:.17g}" for v in self.x) + ")"
        return "centroid"


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    samples: int
    seed: int
    spec: FunctionalSpec
    seconds: float = field(default=None, compare=False)

    def to_dict(self, timing=True):
        out = {
            "functional": self.spec.kind,
            "p": self.spec.p,
            "n": self.spec.n,
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "seconds": self.seconds if timing else None,
        }
        if self.spec.kind == "fixed":
            out["x"] = list(self.spec.x)
        return out

    def to_json(self, timing=True):
        return json.dumps(self.to_dict(timing), sort_keys=True)


def estimates_to_csv(estimates, timing=True):
    """CSV text with one row per estimate."""
    buf = io.StringIO()
    cols = ["functional", "p", "n", "value", "stderr", "samples", "seed", "seconds"]
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for e in estimates:
        w.writerow(e.to_dict(timing))
    return buf.getvalue()


# -- chunked reduction --------------------------------------------------------


class _Moments:
    """Count, mean vector and centred cross-product sums, merged pairwise."""

    def __init__(self, k):
        self.n = 0
        self.mean = np.zeros(k)
        self.m2 = np.zeros((k, k))

    def add_block(self, S):
        nb = len(S)
        if nb == 0:
            return
        mb = S.mean(axis=0)
        C = S - mb
        m2b = C.T @ C
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + np.outer(delta, delta) * (self.n * nb / n)
        self.n = n

    def cov_of_mean(self):
        if self.n < 2:
            return np.full_like(self.m2, np.inf)
        return self.m2 / (self.n - 1) / self.n


def _reduce(stat, total, threads=1, chunk=CHUNK):
    """Apply ``stat(start, count)`` over fixed chunks and merge in order."""
    starts = list(range(0, total, chunk))
    counts = [min(chunk, total - s) for s in starts]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            blocks = list(ex.map(stat, starts, counts))
    else:
        blocks = [stat(s, c) for s, c in zip(starts, counts)]
    acc = None
    for B in blocks:
        B = B.reshape(len(B), -1)
        if acc is None:
            acc = _Moments(B.shape[1])
        acc.add_block(B)
    return acc


def _pinned_point(K, spec):
    if spec.kind == "centroid":
        return np.asarray(K.centroid, dtype=float)
    if spec.kind == "fixed":
        x = np.asarray(spec.x, dtype=float)
        if not K.contains(x[None])[0]:
            raise GeometryError("the pinned point must lie in the body")
        return x
    return None


def _volumes(pts, pinned, spec):
    """Hull or simplex volume for each trial in a (T, m, d) batch."""
    if pinned is not None:
        T = len(pts)
        X = np.concatenate([np.broadcast_to(pinned, (T, 1, spec.d)), pts], axis=1)
        return simplex_volume(X)
    if spec.n == spec.d + 1:
        return simplex_volume(pts)
    return hull_area_2d(pts)


def _check_spec(K, spec):
    check_body(K)
    if not isinstance(spec, FunctionalSpec):
        raise GeometryError("spec must be a FunctionalSpec")
    if spec.d != K.dim:
        raise GeometryError(f"functional is for d={spec.d}, body has d={K.dim}")


def estimate_moment(K, spec, samples, seed, threads=1, stream=0, chunk=CHUNK):
    """Monte Carlo estimate of a normalised moment functional.

    Trial j uses points j*m .. j*m+m-1 of the stream, m being the number of
    free vertices; the statistic is (volume / V(K))^p.
    """
    _check_spec(K, spec)
    samples = check_positive_int(samples, "samples", minimum=MIN_SAMPLES)
    seed = check_seed(seed)
    t0 = time.perf_counter()
    m = spec.free_points
    V = K.volume
    pinned = _pinned_point(K, spec)
    src = SampleStream(K, seed, stream)

    def stat(start, count):
        pts = src.points(start * m, count * m).reshape(count, m, spec.d)
        return (_volumes(pts, pinned, spec) / V) ** spec.p

    acc = _reduce(stat, samples, threads, chunk)
    se = float(np.sqrt(acc.cov_of_mean()[0, 0]))
    return MomentEstimate(
        float(acc.mean[0]), se, samples, seed, spec, seconds=time.perf_counter() - t0
    )


def estimate_moment_split(
    K, spec, reference, reference_value, samples, seed, threads=1, chunk=CHUNK
):
    """Estimate a planar functional of ``K`` relative to a nested reference body.

    If ``reference`` is contained in ``K`` the integral over K^m is split by
    how many vertices fall in the shell ``K \\ reference``; if it contains
    ``K`` the shell ``reference \\ K`` is subtracted instead.  The all-inside
    term is ``reference_value`` (the normalised functional of the reference),
    so only the thin shell terms are sampled, each from its own stream.
    Pinned kinds require the pinned point to be shared by both bodies.
    """
    K, R = check_polygon(K), check_polygon(reference)
    _check_spec(K, spec)
    samples = check_positive_int(samples, "samples", minimum=MIN_SAMPLES)
    seed = check_seed(seed)
    t0 = time.perf_counter()
    VK, VR = K.volume, R.volume
    if np.all(K.contains(R.vertices)):
        sign, inner, shell = 1.0, R, TriangleSoup.between(K, R)
    elif np.all(R.contains(K.vertices)):
        sign, inner, shell = -1.0, K, TriangleSoup.between(R, K)
    else:
        raise GeometryError("reference body must be nested with K")
    pinned = _pinned_point(K, spec)
    if pinned is not None:
        other = _pinned_point(R, spec)
        if np.linalg.norm(other - pinned) > 1e-12 * K.diameter:
            raise GeometryError("pinned point differs between body and reference")
    m, p, d = spec.free_points, spec.p, spec.d
    VS = shell.volume

    # all-inside term, rescaled to the normalisation of K
    base = float(reference_value) * (VR / VK) ** (m + p)
    VI = inner.volume
    weights = [comb(m, k) * (VS / VK) ** k * (VI / VK) ** (m - k) for k in range(1, m + 1)]
    wsum = sum(weights)
    value, var = base, 0.0
    for k, w in zip(range(1, m + 1), weights):
        n_k = max(MIN_SAMPLES, int(round(samples * w / wsum)))
        s_shell = SampleStream(shell, seed, 2 * k)
        s_inner = SampleStream(inner, seed, 2 * k + 1)

        def stat(start, count, k=k, s_shell=s_shell, s_inner=s_inner):
            a = s_shell.points(start * k, count * k).reshape(count, k, d)
            parts = [a]
            if m > k:
                parts.append(s_inner.points(start * (m - k), count * (m - k)).reshape(count, m - k, d))
            pts = np.concatenate(parts, axis=1)
            return (_volumes(pts, pinned, spec) / VK) ** p

        acc = _reduce(stat, n_k, threads, chunk)
        value += sign * w * float(acc.mean[0])
        var += w * w * float(acc.cov_of_mean()[0, 0])
    return MomentEstimate(
        value, float(np.sqrt(var)), samples, seed, spec, seconds=time.perf_counter() - t0
    )


def first_moment_quadrature(P, origin=None, nodes=16):
    """Deterministic first moment of the pinned triangle area in a polygon.

    With the pinned vertex o as pole, the area of [o, x1, x2] is
    r |<x2 - o, u_perp>| / 2, so integrating x1 in polar coordinates leaves
    a single direction integral of the centroid-body support function against
    the cube of the radial function.  Returns (value, error estimate).
    """
    P = check_polygon(P)
    o = P.centroid if origin is None else check_vector(origin, 2, "origin")
    V = P.volume

    def integrand(t):
        U = np.column_stack([np.cos(t), np.sin(t)])
        Up = np.column_stack([-U[:, 1], U[:, 0]])
        return centroid_support(P, Up, origin=o) * P.radial(U, o) ** 3

    th = np.arctan2(*(P.vertices - o)[:, ::-1].T)
    total, err = panel_quadrature(np.concatenate([th, th + np.pi]), integrand, nodes=nodes)
    scale = 1.0 / (6.0 * V * V)
    return total * scale, err * scale


# -- isotropy constant and the identity/inequality residuals --------------------


@dataclass(frozen=True)
class IsotropyResult:
    value: float
    stderr: float
    exact: bool


def isotropy_constant(K, samples=1_000_000, seed=0, threads=1):
    """Isotropy constant; exact from the inertia matrix for polygons."""
    check_body(K)
    d = K.dim
    if isinstance(K, Polygon):
        M = K.inertia
        val = np.linalg.det(M) ** (1 / (2 * d)) * K.volume ** (-(d + 2) / (2 * d))
        return IsotropyResult(float(val), 0.0, True)
    est = estimate_moment(K, FunctionalSpec.centroid(2, d), samples, seed, threads)
    q = factorial(d) * est.value
    val = q ** (1 / (2 * d))
    se = val / (2 * d) * est.stderr / est.value
    return IsotropyResult(float(val), float(se), False)


@dataclass(frozen=True)
class Slack:
    """Signed slack of an inequality (>= 0 when it holds) or of an identity (= 0)."""

    name: str
    value: float
    stderr: float
    identity: bool = False

    def passed(self, nsigma=4.0):
        if self.identity:
            return abs(self.value) <= nsigma * self.stderr
        return self.value >= -nsigma * self.stderr


@dataclass(frozen=True)
class IdentityReport:
    p: float
    q: float
    centroid_p: float
    full_p: float
    centroid_q: float
    slacks: tuple
    samples: int
    seed: int

    def __getitem__(self, name):
        for s in self.slacks:
            if s.name == name:
                return s
        raise KeyError(name)


def identity_report(K, p, q, samples, seed, threads=1):
    """Sandwich, Hoelder and (when 2 is among the exponents) the centroid identity.

    Every trial draws d+1 points; the first d together with the centroid give
    the pinned statistic and all d+1 give the hull statistic, so all slacks
    share one sample and their errors follow from the joint covariance.
    """
    check_body(K)
    p, q = float(p), float(q)
    if not 1 <= p < q:
        raise GeometryError("need 1 <= p < q")
    samples = check_positive_int(samples, "samples", minimum=MIN_SAMPLES)
    seed = check_seed(seed)
    d = K.dim
    V = K.volume
    g = np.asarray(K.centroid, dtype=float)
    src = SampleStream(K, seed, 0)
    m = d + 1

    def stat(start, count):
        pts = src.points(start * m, count * m).reshape(count, m, d)
        pinned = np.concatenate([np.broadcast_to(g, (count, 1, d)), pts[:, :d]], axis=1)
        s_star = simplex_volume(pinned) / V
        s_full = simplex_volume(pts) / V
        return np.column_stack([s_star**p, s_full**p, s_star**q, s_star**2, s_full**2])

    acc = _reduce(stat, samples, threads)
    mu, C = acc.mean, acc.cov_of_mean()

    def slack(name, f, grad, identity=False):
        gvec = np.asarray(grad, dtype=float)
        return Slack(name, float(f), float(np.sqrt(max(gvec @ C @ gvec, 0.0))), identity)

    a, b, c, e2s, e2f = mu
    ra, rb, rc = a ** (1 / p), b ** (1 / p), c ** (1 / q)
    da, db, dc = ra / (p * a), rb / (p * b), rc / (q * c)
    out = [
        slack("sandwich_lower", rb - ra, [-da, db, 0, 0, 0]),
        slack("sandwich_upper", (d + 1) * ra - rb, [(d + 1) * da, -db, 0, 0, 0]),
        slack("holder", rc - ra, [-da, 0, dc, 0, 0]),
    ]
    if 2.0 in (p, q):
        out.append(slack("identity_2", (d + 1) * e2s - e2f, [0, 0, 0, d + 1, -1], True))
    return IdentityReport(p, q, float(a), float(b), float(c), tuple(out), samples, seed)


# -- estimator-style wrappers ------------------------------------------------------


class MomentEstimator(BaseEstimator):
    """Estimate a moment functional of the polygon spanned by the rows of ``X``.

    ``fit`` builds the convex hull of ``X`` and stores ``value_`` and
    ``stderr_``; ``score`` returns the estimate for a new point set.
    """

    def __init__(self, kind="full", n=3, p=1.0, x=None, samples=200_000, seed=0, threads=1):
        self.kind = kind
        self.n = n
        self.p = p
        self.x = x
        self.samples = samples
        self.seed = seed
        self.threads = threads

    def _spec(self):
        if self.kind == "full":
            return FunctionalSpec.full(self.n, self.p)
        if self.kind == "centroid":
            return FunctionalSpec.centroid(self.p)
        return FunctionalSpec.fixed_point(self.x, self.p)

    def fit(self, X, y=None):
        P = make_polygon(X)
        est = estimate_moment(P, self._spec(), self.samples, self.seed, self.threads)
        self.body_ = P
        self.estimate_ = est
        self.value_ = est.value
        self.stderr_ = est.stderr
        return self

    def score(self, X, y=None):
        P = make_polygon(X)
        return estimate_moment(P, self._spec(), self.samples, self.seed, self.threads).value


class IsotropicPosition(TransformerMixin, BaseEstimator):
    """Affine map to isotropic position: centroid at 0, unit volume, scalar inertia.

    Fitted from polygon vertices (exact moments).
    """

    def fit(self, X, y=None):
        P = make_polygon(X)
        M, V = P.inertia, P.volume
        w, Q = np.linalg.eigh(M)
        W = (Q / np.sqrt(w)) @ Q.T  # M^{-1/2}
        # after x -> W (x - g), the body has inertia V |det W| I and volume V |det W|;
        # a final scalar rescale makes the volume 1
        s = (V * abs(np.linalg.det(W))) ** (-1 / 2)
        self.centroid_ = P.centroid
        self.linear_ = s * W
        self.isotropy_constant_ = isotropy_constant(P).value
        return self

    def transform(self, X):
        check_is_fitted(self, "linear_")
        return (np.asarray(X, dtype=float) - self.centroid_) @ self.linear_.T
