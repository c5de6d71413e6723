"""Stability sweeps over the two sharpness families and log-log slope fits."""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from ._validation import GeometryError
from .moments import (
    FunctionalSpec,
    ball_moment,
    estimate_moment,
    estimate_moment_split,
    first_moment_quadrature,
    reed_moment,
)
from .shadow import family_generator

__all__ = ["SlopeFit", "SweepReport", "SweepRow", "fit_loglog", "sweep_ball", "sweep_triangle",
           "triangle_value"]

BALL_BAND = (1.3, 2.6)
TRIANGLE_BAND = (1.6, 2.4)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_stderr: float
    ci_low: float
    ci_high: float


def fit_loglog(x, y, yerr, level=0.95):
    """Weighted least squares of log y on log x.

    Weights are the inverse variances of log y (delta method, yerr / y); the
    parameter covariance is rescaled by the residual variance and the interval
    uses Student t with n - 2 degrees of freedom.
    """
    x, y, yerr = (np.asarray(a, dtype=float) for a in (x, y, yerr))
    if len(x) < 3:
        raise GeometryError("need at least three points to fit a slope")
    if np.any(y <= 0):
        raise GeometryError("log-log fit needs positive values")
    X = np.column_stack([np.ones_like(x), np.log(x)])
    z = np.log(y)
    w = (y / yerr) ** 2
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ (XtW @ z)
    r = z - X @ beta
    dof = len(x) - 2
    scale = float(w @ r**2) / dof if dof > 0 else 1.0
    se = float(np.sqrt(cov[1, 1] * scale))
    q = stats.t.ppf(0.5 + level / 2, max(dof, 1))
    return SlopeFit(float(beta[1]), float(beta[0]), se, float(beta[1] - q * se), float(beta[1] + q * se))


@dataclass(frozen=True)
class SweepRow:
    param: float
    value: float
    stderr: float
    reference: float
    gap: float
    gap_stderr: float

    @property
    def z(self):
        return self.gap / self.gap_stderr if self.gap_stderr > 0 else np.inf


@dataclass(frozen=True)
class SweepReport:
    family: str
    functional: str
    p: float
    rows: tuple
    sanity: SweepRow
    fit: SlopeFit
    band: tuple
    config: dict = field(default_factory=dict)

    @property
    def all_positive(self):
        return all(r.gap > 4 * r.gap_stderr for r in self.rows)

    @property
    def sanity_ok(self):
        return abs(self.sanity.gap) <= 4 * self.sanity.gap_stderr

    @property
    def slope_in_band(self):
        return self.band[0] <= self.fit.slope <= self.band[1]

    @property
    def passed(self):
        return self.all_positive and self.sanity_ok and self.slope_in_band

    def to_dict(self):
        return {
            "family": self.family,
            "functional": self.functional,
            "p": self.p,
            "rows": [asdict(r) for r in self.rows],
            "sanity": asdict(self.sanity),
            "fit": asdict(self.fit),
            "band": list(self.band),
            "all_positive": self.all_positive,
            "sanity_ok": self.sanity_ok,
            "slope_in_band": self.slope_in_band,
            "config": self.config,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "value", "stderr", "reference", "gap", "gap_stderr"])
        for r in (self.sanity,) + tuple(self.rows):
            w.writerow([repr(getattr(r, k)) for k in ("param", "value", "stderr", "reference", "gap", "gap_stderr")])
        f = self.fit
        w.writerow([])
        w.writerow(["slope", "slope_stderr", "ci_low", "ci_high", "band_low", "band_high", "passed"])
        w.writerow([repr(f.slope), repr(f.slope_stderr), repr(f.ci_low), repr(f.ci_high),
                    self.band[0], self.band[1], self.passed])
        return buf.getvalue()


def _check_grid(grid, upper):
    grid = [float(g) for g in grid]
    if len(grid) < 5:
        raise GeometryError("a sweep grid needs at least five points")
    if any(not 0 < g <= upper for g in grid):
        raise GeometryError(f"grid values must lie in (0, {upper}]")
    return grid


def sweep_ball(p=1.0, grid=(0.05, 0.1, 0.2, 0.3, 0.4), samples=4_000_000, seed=0,
               resolution=512, method="split", threads=1):
    """Relative excess of the pinned centroid moment of spindles over the disc.

    ``method="split"`` samples only the two caps outside the polygonal disc and
    takes the disc's own term from the deterministic quadrature (p = 1) or the
    closed form (other p).  The gap is estimate / disc value - 1.
    """
    grid = _check_grid(grid, 0.5)
    spec = FunctionalSpec.centroid(p)
    ball = ball_moment(2, p, "centroid")
    disc = family_generator("spindle", 0.0, resolution)
    if spec.p == 1.0:
        disc_value = first_moment_quadrature(disc)[0]
    else:
        disc_value = ball

    def row(eps, est):
        return SweepRow(eps, est.value, est.stderr, ball, est.value / ball - 1.0, est.stderr / ball)

    rows = []
    for j, eps in enumerate(grid):
        K = family_generator("spindle", eps, resolution)
        s = seed + j + 1
        if method == "split":
            est = estimate_moment_split(K, spec, disc, disc_value, samples, s, threads)
        elif method == "plain":
            est = estimate_moment(K, spec, samples, s, threads)
        else:
            raise GeometryError(f"unknown method {method!r}")
        rows.append(row(eps, est))
    sanity = row(0.0, estimate_moment(disc, spec, samples, seed, threads))
    fit = fit_loglog([r.param for r in rows], [max(r.gap, 1e-300) for r in rows],
                     [r.gap_stderr for r in rows])
    config = {"p": spec.p, "grid": grid, "samples": samples, "seed": seed,
              "resolution": resolution, "method": method}
    return SweepReport("spindle", "centroid", spec.p, tuple(rows), sanity, fit, BALL_BAND, config)


def triangle_value(spec):
    """Extremal (triangle) value of the hull or centroid functional."""
    if spec.kind == "full":
        if spec.p != int(spec.p):
            raise GeometryError("the triangle reference needs integer p for the hull functional")
        return reed_moment(int(spec.p))
    if spec.p == 1.0:
        return first_moment_quadrature(family_generator("truncated_triangle", 0.0))[0]
    if spec.p == 2.0:
        return reed_moment(2) / 3
    raise GeometryError("centroid triangle reference is available for p in {1, 2}")


def sweep_triangle(p=1.0, grid=(0.05, 0.1, 0.15, 0.2, 0.3), samples=4_000_000, seed=0,
                   kind="full", method="split", threads=1):
    """Relative deficit 1 - estimate / triangle value over truncated triangles.

    For the hull functional ``method="split"`` subtracts the removed corner
    from the exact triangle value; the centroid kind moves the centroid, so it
    always uses plain Monte Carlo.
    """
    grid = _check_grid(grid, 0.4)
    spec = FunctionalSpec.full(3, p) if kind == "full" else FunctionalSpec.centroid(p)
    ref_exact = triangle_value(spec)
    ref = float(ref_exact)
    T = family_generator("truncated_triangle", 0.0)

    def row(delta, est):
        return SweepRow(delta, est.value, est.stderr, ref, 1.0 - est.value / ref, est.stderr / ref)

    rows = []
    for j, delta in enumerate(grid):
        K = family_generator("truncated_triangle", delta)
        s = seed + j + 1
        if method == "split" and spec.kind == "full":
            est = estimate_moment_split(K, spec, T, ref_exact, samples, s, threads)
        elif method in ("split", "plain"):
            est = estimate_moment(K, spec, samples, s, threads)
        else:
            raise GeometryError(f"unknown method {method!r}")
        rows.append(row(delta, est))
    sanity = row(0.0, estimate_moment(T, spec, samples, seed, threads))
    fit = fit_loglog([r.param for r in rows], [max(r.gap, 1e-300) for r in rows],
                     [r.gap_stderr for r in rows])
    config = {"p": spec.p, "grid": grid, "samples": samples, "seed": seed, "kind": kind,
              "method": method, "reference": str(ref_exact) if isinstance(ref_exact, Fraction) else ref}
    return SweepReport("truncated_triangle", spec.label(), spec.p, tuple(rows), sanity, fit,
                       TRIANGLE_BAND, config)
