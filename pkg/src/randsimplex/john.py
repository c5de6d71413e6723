"""Maximum-area inscribed ellipse of a polygon (planar John ellipse).

The program ``max log det B  s.t.  |B a_i| + <a_i, c> <= b_i`` is solved by a
log-barrier method with damped Newton steps over the five unknowns
``(B11, B12, B22, c1, c2)``.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import ConvergenceError, GeometryError, check_polygon

__all__ = ["Ellipse", "JohnResult", "JohnEllipse", "john_ellipse"]


@dataclass(frozen=True)
class Ellipse:
    """``{center + shape @ w : |w| <= 1}`` with ``shape`` symmetric positive definite."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.shape, dtype=float)
        if S.shape != (2, 2) or not np.allclose(S, S.T, atol=1e-12 * np.abs(S).max()):
            raise GeometryError("ellipse shape must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise GeometryError("ellipse shape must be positive definite")
        object.__setattr__(self, "shape", 0.5 * (S + S.T))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))

    @property
    def area(self):
        return float(np.pi * np.linalg.det(self.shape))


@dataclass(frozen=True)
class JohnResult:
    ellipse: Ellipse
    bm_disc_upper: float
    gap: float
    iterations: int


def _barrier(z, t, A, b):
    """Value, gradient and Hessian of ``-t log det B - sum log slack``."""
    b11, b12, b22, c1, c2 = z
    D = b11 * b22 - b12 * b12
    if b11 <= 0 or D <= 0:
        return np.inf, None, None
    B = np.array([[b11, b12], [b12, b22]])
    W = A @ B  # rows B a_i (B symmetric)
    r = np.linalg.norm(W, axis=1)
    s = b - A @ np.array([c1, c2]) - r
    if np.any(s <= 0):
        return np.inf, None, None
    f = -t * np.log(D) - np.log(s).sum()

    # d w_i / d(b11, b12, b22) for w = B a
    m = len(A)
    J = np.zeros((m, 2, 3))
    J[:, 0, 0] = A[:, 0]
    J[:, 0, 1] = A[:, 1]
    J[:, 1, 1] = A[:, 0]
    J[:, 1, 2] = A[:, 1]
    what = W / r[:, None]
    gs = np.zeros((m, 5))  # gradient of each slack
    gs[:, :3] = -np.einsum("ik,ikj->ij", what, J)
    gs[:, 3:] = -A
    P = (np.eye(2)[None] - what[:, :, None] * what[:, None, :]) / r[:, None, None]
    Hs = np.zeros((m, 5, 5))
    Hs[:, :3, :3] = -np.einsum("ikp,ikl,ilq->ipq", J, P, J)

    gD = np.array([b22, -2 * b12, b11])
    hD = np.array([[0.0, 0, 1], [0, -2, 0], [1, 0, 0]])
    g = np.zeros(5)
    H = np.zeros((5, 5))
    g[:3] = -t * gD / D
    H[:3, :3] = t * (np.outer(gD, gD) / D**2 - hD / D)
    g -= (gs / s[:, None]).sum(axis=0)
    H += np.einsum("ip,iq->pq", gs / s[:, None], gs / s[:, None])
    H -= (Hs / s[:, None, None]).sum(axis=0)
    return f, g, H


def john_ellipse(P, tol=1e-8, max_iter=200):
    """Maximum-area ellipse inscribed in ``P``.

    Returns the ellipse, the John-position upper bound on the Banach-Mazur
    distance to the disc, the final duality gap bound and the Newton count.
    """
    P = check_polygon(P)
    N, h = P.halfplanes
    norms = np.linalg.norm(N, axis=1)
    A, b = N / norms[:, None], h / norms
    m = len(A)

    g0 = P.centroid
    r0 = 0.5 * np.min(b - A @ g0)
    z = np.array([r0, 0.0, r0, g0[0], g0[1]])
    t = 1.0
    iters = 0
    while True:
        # centering
        prev = np.inf
        while True:
            f, g, H = _barrier(z, t, A, b)
            step = -np.linalg.solve(H, g)
            lam2 = float(-g @ step)
            if lam2 / 2 <= 1e-10:
                break
            # Newton is quadratic here, so a decrement that stops shrinking is
            # the round-off floor (thin polygons at large t)
            if lam2 <= 1e-6 and lam2 >= 0.5 * prev:
                break
            prev = lam2
            if iters >= max_iter:
                raise ConvergenceError(
                    f"John ellipse did not converge in {max_iter} Newton steps", gap=m / t
                )
            iters += 1
            # inside the quadratic region a full step is safe; outside, backtrack.
            # Comparing barrier values there would drown in round-off at large t.
            s = 1.0
            if lam2 >= 0.05:
                while _barrier(z + s * step, t, A, b)[0] > f - 0.25 * s * lam2:
                    s *= 0.5
            while not np.isfinite(_barrier(z + s * step, t, A, b)[0]):
                s *= 0.5
            z = z + s * step
        gap = (m + lam2) / t
        if gap <= tol:
            break
        t *= 10.0

    B = np.array([[z[0], z[1]], [z[1], z[2]]])
    E = Ellipse(center=z[3:], shape=B)
    Z = (P.vertices - E.center) @ np.linalg.inv(B).T
    upper = float(np.max(np.linalg.norm(Z, axis=1)))
    return JohnResult(ellipse=E, bm_disc_upper=upper, gap=gap, iterations=iters)


class JohnEllipse(TransformerMixin, BaseEstimator):
    """Fit the John ellipse of a polygon and map points into John position.

    ``fit`` takes the polygon vertices (any order); ``transform`` applies the
    affine map sending the ellipse to the unit disc.
    """

    def __init__(self, tol=1e-8, max_iter=200):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        from .bodies import make_polygon

        res = john_ellipse(make_polygon(X), tol=self.tol, max_iter=self.max_iter)
        self.center_ = res.ellipse.center
        self.shape_ = res.ellipse.shape
        self.bm_disc_upper_ = res.bm_disc_upper
        self.n_iter_ = res.iterations
        return self

    def transform(self, X):
        check_is_fitted(self, "shape_")
        X = np.asarray(X, dtype=float)
        return (X - self.center_) @ np.linalg.inv(self.shape_).T
