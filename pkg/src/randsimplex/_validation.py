"""Input validation helpers shared by the geometry, sampling and estimator code."""

import numbers

import numpy as np

# Relative tolerance used by every geometric predicate (scaled by the squared
# diameter for cross products, by the diameter for lengths).
REL_TOL = 1e-12


class GeometryError(ValueError):
    """Raised when an input does not describe a valid convex body or query."""


class DegenerateHullError(GeometryError):
    """The convex hull of the input has empty interior."""


class ChordMissError(GeometryError):
    """The query line does not meet the body."""


class ChordTangentError(GeometryError):
    """The query line only touches the body in a single point."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of its iteration budget."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


def check_points(points, dim=None, min_count=1, name="points"):
    """Return ``points`` as a float array of shape (m, dim)."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise GeometryError(f"{name} must be a 2-D array, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise GeometryError(f"{name} must have {dim} columns, got {X.shape[1]}")
    if X.shape[0] < min_count:
        raise GeometryError(f"{name} needs at least {min_count} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise GeometryError(f"{name} contains non-finite values")
    return X


def check_vector(v, dim=None, name="vector"):
    x = np.asarray(v, dtype=float).reshape(-1)
    if dim is not None and x.shape[0] != dim:
        raise GeometryError(f"{name} must have length {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise GeometryError(f"{name} contains non-finite values")
    return x


def check_direction(v, dim=2, name="direction"):
    """Return ``v`` normalised to unit length."""
    x = check_vector(v, dim, name)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise GeometryError(f"{name} must be non-zero")
    return x / norm


def check_matrix(A, dim, name="matrix", nonsingular=True):
    M = np.asarray(A, dtype=float)
    if M.shape != (dim, dim):
        raise GeometryError(f"{name} must have shape ({dim}, {dim}), got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise GeometryError(f"{name} contains non-finite values")
    if nonsingular:
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= REL_TOL * max(s[0], 1.0):
            raise GeometryError(f"{name} is singular")
    return M


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise GeometryError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise GeometryError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise GeometryError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise GeometryError("seed must fit in an unsigned 64-bit integer")
    return int(seed)


def check_polygon(P):
    """Return ``P`` if it is a :class:`~randsimplex.bodies.Polygon`, else raise."""
    from .bodies import Polygon

    if not isinstance(P, Polygon):
        raise GeometryError(f"expected a Polygon, got {type(P).__name__}")
    return P


def check_body(K):
    from .bodies import ConvexBody

    if not isinstance(K, ConvexBody):
        raise GeometryError(f"expected a convex body, got {type(K).__name__}")
    return K
