import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from randsimplex import (
    Ball,
    FunctionalSpec,
    GeometryError,
    IsotropicPosition,
    MomentEstimator,
    Simplex,
    affine_apply,
    ball_moment,
    estimate_moment,
    estimate_moment_split,
    first_moment_quadrature,
    identity_report,
    isotropy_constant,
    kappa,
    make_polygon,
    random_polygon,
    reed_moment,
    regular_polygon,
    simplex_second_moment_bound,
    standard_body,
)
from randsimplex.moments import estimates_to_csv
from randsimplex.shadow import family_generator

from conftest import random_affine

# E^1_o of the triangle about its centroid, evaluated independently to 14 digits with mpmath
TRIANGLE_E1_CENTROID = 0.05171026743957


def within(est, target, nsigma=4.0, extra=0.0):
    return abs(est.value - target) <= nsigma * est.stderr + extra


def second_moments_exact(P):
    """E^2_3 and E^2_* of a polygon from its covariance: E[det^2] = k! det(second moments)."""
    C = P.inertia / P.volume
    dc = np.linalg.det(C)
    return 3 * dc / (2 * P.volume**2), dc / (2 * P.volume**2)


def ball_second_moments(d):
    """E^2_{d+1}(B^d) and E^2_o(B^d); the covariance of the unit ball is I/(d+2)."""
    s = 1.0 / (d + 2)
    star = math.factorial(d) * s**d / (math.factorial(d) ** 2 * kappa(d) ** 2)
    return (d + 1) * star, star


# -- closed forms ----------------------------------------------------------------------


def test_kappa():
    assert kappa(0) == pytest.approx(1.0, rel=1e-13)
    assert kappa(1) == pytest.approx(2.0, rel=1e-13)
    assert kappa(2) == pytest.approx(math.pi, rel=1e-13)
    assert kappa(3) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    for d in range(0, 40):
        assert kappa(d) == pytest.approx(math.pi ** (d / 2) / math.gamma(d / 2 + 1), rel=1e-13)


def test_ball_moment_examples():
    assert ball_moment(2, 1, "full_simplex") == pytest.approx(35 / (48 * math.pi**2), rel=1e-13)
    assert ball_moment(2, 1, "centroid") == pytest.approx(4 / (9 * math.pi**2), rel=1e-13)
    assert ball_moment(2, 2, "centroid") == pytest.approx(1 / (32 * math.pi**2), rel=1e-13)


def test_ball_centroid_first_moment_polar_oracle():
    # E|det(x1, x2)| for x_i uniform in the disc: E r1 r2 |sin| = (2/3)^2 * 2/pi
    e_area = 0.5 * (2 / 3) ** 2 * (2 / math.pi)
    assert ball_moment(2, 1, "centroid") == pytest.approx(e_area / math.pi, rel=1e-13)


@pytest.mark.parametrize("d", range(1, 9))
def test_ball_second_moments_all_dimensions(d):
    full, star = ball_second_moments(d)
    assert ball_moment(d, 2, "full_simplex") == pytest.approx(full, rel=1e-12)
    assert ball_moment(d, 2, "centroid") == pytest.approx(star, rel=1e-12)
    printed = ball_moment(d, 2, "centroid", variant="printed")
    assert printed == pytest.approx(star * math.factorial(d) ** 2, rel=1e-12)


def test_ball_moment_rejects():
    with pytest.raises(GeometryError):
        ball_moment(2, 0.5)
    with pytest.raises(GeometryError):
        ball_moment(2, 1, "nope")
    with pytest.raises(GeometryError):
        ball_moment(2, 1, "centroid", variant="nope")


def test_reed_exact():
    assert reed_moment(1) == Fraction(1, 12)
    assert reed_moment(2) == Fraction(1, 72)
    assert isinstance(reed_moment(3), Fraction)
    with pytest.raises(GeometryError):
        reed_moment(1.5)
    with pytest.raises(GeometryError):
        reed_moment(0)


def test_reed_second_moment_matches_covariance_oracle(triangle):
    full, star = second_moments_exact(triangle)
    assert full == pytest.approx(float(reed_moment(2)), rel=1e-13)
    assert star == pytest.approx(1 / 216, rel=1e-13)


def test_reed_third_moment_monte_carlo(triangle):
    est = estimate_moment(triangle, FunctionalSpec.full(3, 3), 2_000_000, seed=21)
    assert within(est, float(reed_moment(3)))


def test_simplex_second_moment_bound():
    assert simplex_second_moment_bound(1) == 1.0
    assert simplex_second_moment_bound(2) == 0.5
    assert simplex_second_moment_bound(3) == pytest.approx(1 / 6)


@pytest.mark.parametrize("d", range(1, 7))
def test_simplex_second_moment_below_bound(d):
    T = standard_body("simplex", d)
    est = estimate_moment(T, FunctionalSpec.centroid(2, d), 200_000, seed=d)
    assert est.value <= simplex_second_moment_bound(d) + 4 * est.stderr
    if d == 1:
        # a segment about its midpoint: E (|x - 1/2| / 1)^2 = 1/12
        assert within(est, 1 / 12)


# -- functional descriptors -------------------------------------------------------------


def test_functional_spec_validation():
    with pytest.raises(GeometryError):
        FunctionalSpec.full(2, 1)
    with pytest.raises(GeometryError):
        FunctionalSpec.full(5, 1, d=3)
    with pytest.raises(GeometryError):
        FunctionalSpec.centroid(0.5)
    with pytest.raises(GeometryError):
        FunctionalSpec("fixed", 1, 2)
    s = FunctionalSpec.fixed_point([0.1, 0.2], 1.5)
    assert s.d == 2 and s.n == 3 and s.free_points == 2
    assert FunctionalSpec.full(6, 1).free_points == 6
    assert FunctionalSpec.full(4, 2).label() == "full(4)"


def test_estimate_rejects_mismatched_dimension(square):
    with pytest.raises(GeometryError):
        estimate_moment(square, FunctionalSpec.centroid(1, 3), 1000, 0)
    with pytest.raises(GeometryError):
        estimate_moment(square, FunctionalSpec.centroid(1), 10, 0)


# -- Monte Carlo estimators ---------------------------------------------------------------


def test_triangle_first_moment(triangle):
    est = estimate_moment(triangle, FunctionalSpec.full(3, 1), 2_000_000, seed=7)
    assert est.stderr <= 2e-4
    assert within(est, 1 / 12)


def test_disc_first_moment():
    P = regular_polygon(512)
    est = estimate_moment(P, FunctionalSpec.full(3, 1), 2_000_000, seed=8)
    assert within(est, ball_moment(2, 1, "full_simplex"), extra=1e-4)


@given(st.integers(3, 12), st.integers(0, 2**31 - 1))
def test_second_moments_match_covariance_oracle(n, seed):
    P = random_polygon(n, seed=seed, affine=True)
    full, star = second_moments_exact(P)
    e3 = estimate_moment(P, FunctionalSpec.full(3, 2), 20000, seed=seed % 1000)
    es = estimate_moment(P, FunctionalSpec.centroid(2), 20000, seed=seed % 1000)
    assert within(e3, full, 5) and within(es, star, 5)


def test_hull_functional_against_scipy(unit_square):
    est = estimate_moment(unit_square, FunctionalSpec.full(5, 1), 200_000, seed=3)
    rng = np.random.default_rng(99)
    X = rng.uniform(size=(20000, 5, 2))
    a = np.array([ConvexHull(x).volume for x in X])
    se = math.hypot(est.stderr, a.std(ddof=1) / math.sqrt(len(a)))
    assert abs(est.value - a.mean()) <= 4 * se


def test_fixed_point_functional(square):
    # pinned at the centre of the square = centroid functional, same stream
    a = estimate_moment(square, FunctionalSpec.fixed_point([0, 0], 1), 50_000, 4)
    b = estimate_moment(square, FunctionalSpec.centroid(1), 50_000, 4)
    assert a.value == b.value
    corner = estimate_moment(square, FunctionalSpec.fixed_point([-1, -1], 1), 50_000, 4)
    assert corner.value > a.value


def test_three_dimensional_estimators():
    B = Ball(3)
    full, star = ball_second_moments(3)
    assert within(estimate_moment(B, FunctionalSpec.full(4, 2, 3), 200_000, 1), full)
    assert within(estimate_moment(B, FunctionalSpec.centroid(2, 3), 200_000, 1), star)
    assert within(estimate_moment(B, FunctionalSpec.centroid(1, 3), 400_000, 2),
                  ball_moment(3, 1, "centroid"))


def test_thread_count_does_not_change_bits(triangle):
    spec = FunctionalSpec.full(4, 1.5)
    a = estimate_moment(triangle, spec, 300_000, 5, threads=1)
    b = estimate_moment(triangle, spec, 300_000, 5, threads=3)
    assert a.value == b.value and a.stderr == b.stderr


def test_chunk_size_changes_only_rounding(triangle):
    spec = FunctionalSpec.centroid(1)
    a = estimate_moment(triangle, spec, 300_000, 5)
    b = estimate_moment(triangle, spec, 300_000, 5, chunk=1000)
    assert a.value == pytest.approx(b.value, rel=1e-13)


@pytest.mark.parametrize("kind", ["full", "centroid", "fixed"])
def test_scale_invariance_exact(kind):
    P = random_polygon(7, seed=3)
    spec = {"full": FunctionalSpec.full(4, 2), "centroid": FunctionalSpec.centroid(1.5),
            "fixed": FunctionalSpec.fixed_point(P.centroid + 0.05, 1)}[kind]
    Q = affine_apply(2 * np.eye(2), np.zeros(2), P)
    spec_q = spec if kind != "fixed" else FunctionalSpec.fixed_point(2 * np.asarray(spec.x), 1)
    a = estimate_moment(P, spec, 20_000, 6)
    b = estimate_moment(Q, spec_q, 20_000, 6)
    assert a.value == b.value


def test_split_estimator_matches_plain():
    T = family_generator("truncated_triangle", 0.0)
    K = family_generator("truncated_triangle", 0.2)
    spec = FunctionalSpec.full(3, 1)
    a = estimate_moment_split(K, spec, T, reed_moment(1), 400_000, 3)
    b = estimate_moment(K, spec, 1_000_000, 4)
    assert abs(a.value - b.value) <= 4 * math.hypot(a.stderr, b.stderr)
    assert a.stderr < b.stderr
    disc = family_generator("spindle", 0.0, 256)
    S = family_generator("spindle", 0.3, 256)
    spec = FunctionalSpec.centroid(2)
    ref = estimate_moment(disc, spec, 10**6, 1)
    a = estimate_moment_split(S, spec, disc, ref.value, 400_000, 3)
    b = estimate_moment(S, spec, 10**6, 4)
    assert abs(a.value - b.value) <= 4 * math.sqrt(a.stderr**2 + b.stderr**2 + ref.stderr**2)


def test_split_estimator_rejects_non_nested(square, triangle):
    with pytest.raises(GeometryError):
        estimate_moment_split(triangle, FunctionalSpec.full(3, 1),
                              affine_apply(np.eye(2), [5, 5], square), 0.1, 1000, 0)


def test_first_moment_quadrature(triangle):
    val, err = first_moment_quadrature(triangle)
    assert val == pytest.approx(TRIANGLE_E1_CENTROID, abs=1e-12)
    assert err < 1e-10
    est = estimate_moment(triangle, FunctionalSpec.centroid(1), 2_000_000, 31)
    assert within(est, val)
    disc, _ = first_moment_quadrature(regular_polygon(1024))
    assert disc == pytest.approx(4 / (9 * math.pi**2), rel=1e-5)
    P = random_polygon(8, seed=12, affine=True)
    val, _ = first_moment_quadrature(P, origin=P.centroid + [0.05, 0])
    est = estimate_moment(P, FunctionalSpec.fixed_point(P.centroid + [0.05, 0], 1), 1_000_000, 2)
    assert within(est, val)


# -- serialisation ---------------------------------------------------------------------------


def test_estimate_records(triangle):
    est = estimate_moment(triangle, FunctionalSpec.full(3, 1), 1000, 1)
    doc = json.loads(est.to_json(timing=False))
    assert set(doc) == {"functional", "p", "n", "value", "stderr", "samples", "seed", "seconds"}
    assert doc["seconds"] is None and doc["n"] == 3 and doc["seed"] == 1
    assert json.loads(est.to_json())["seconds"] >= 0
    text = estimates_to_csv([est, est], timing=False)
    assert text.splitlines()[0] == "functional,p,n,value,stderr,samples,seed,seconds"
    assert len(text.splitlines()) == 3
    assert est.value >= 0 and est.stderr >= 0


# -- isotropy constant -------------------------------------------------------------------------


def test_isotropy_examples(triangle):
    disc = isotropy_constant(regular_polygon(4096))
    assert disc.exact
    assert disc.value == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-6)
    assert isotropy_constant(triangle).value == pytest.approx(108 ** -0.25, rel=1e-13)
    mc = isotropy_constant(Ball(2), samples=1_000_000, seed=3)
    assert not mc.exact
    assert abs(mc.value - 1 / (2 * math.sqrt(math.pi))) <= 4 * mc.stderr


def test_isotropy_affine_invariance():
    P = random_polygon(9, seed=1)
    A, b = random_affine(np.random.default_rng(2))
    assert isotropy_constant(affine_apply(A, b, P)).value == pytest.approx(
        isotropy_constant(P).value, rel=1e-12)
    A3, b3 = random_affine(np.random.default_rng(2), 3)
    E = affine_apply(A3, b3, Ball(3))
    x, y = isotropy_constant(E, 400_000, 5), isotropy_constant(Ball(3), 400_000, 6)
    assert abs(x.value - y.value) <= 4 * math.hypot(x.stderr, y.stderr)


def test_isotropy_polygon_matches_monte_carlo():
    P = random_polygon(6, seed=8, affine=True)
    exact = isotropy_constant(P).value
    est = estimate_moment(P, FunctionalSpec.centroid(2), 1_000_000, 3)
    assert abs((2 * est.value) ** 0.25 - exact) <= 4 * (2 * est.value) ** 0.25 / 4 * est.stderr / est.value


# -- identity report -----------------------------------------------------------------------------


def test_identity_report_triangle(triangle):
    rep = identity_report(triangle, 2, 3, 400_000, 1)
    assert rep["identity_2"].passed()
    assert rep["identity_2"].identity
    assert all(s.passed() for s in rep.slacks)


def test_identity_report_square_holder(square):
    rep = identity_report(square, 1, 2, 200_000, 2)
    assert rep["holder"].value >= -4 * rep["holder"].stderr
    assert rep["identity_2"].passed()
    with pytest.raises(KeyError):
        rep["nope"]


def test_identity_report_values_match_estimators(triangle):
    rep = identity_report(triangle, 1, 2, 100_000, 3)
    assert rep.centroid_p == pytest.approx(estimate_moment(triangle, FunctionalSpec.centroid(1), 100_000, 3).value, rel=0.05)
    with pytest.raises(GeometryError):
        identity_report(triangle, 2, 1, 1000, 0)


@given(st.integers(3, 12), st.integers(0, 2**31 - 1))
def test_sandwich_on_random_polygons(n, seed):
    P = random_polygon(n, seed=seed, affine=True)
    rep = identity_report(P, 1, 2, 20_000, seed % 997)
    assert rep["sandwich_lower"].passed() and rep["sandwich_upper"].passed()


def test_identity_report_three_dimensions():
    rep = identity_report(Simplex(np.vstack([np.zeros(3), np.eye(3)])), 2, 3, 200_000, 4)
    assert all(s.passed() for s in rep.slacks)


# -- estimator wrappers ----------------------------------------------------------------------------


def test_moment_estimator_api(triangle):
    m = MomentEstimator(samples=50_000, seed=2).fit(triangle.vertices)
    assert abs(m.value_ - 1 / 12) <= 4 * m.stderr_
    assert m.get_params()["samples"] == 50_000
    assert m.score(triangle.vertices) == m.value_
    c = MomentEstimator(kind="centroid", p=2, samples=50_000).fit(triangle.vertices)
    assert abs(c.value_ - 1 / 216) <= 4 * c.stderr_


def test_isotropic_position(triangle):
    P = random_polygon(7, seed=5, affine=True)
    iso = IsotropicPosition().fit(P.vertices)
    Q = make_polygon(iso.transform(P.vertices))
    assert Q.volume == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(Q.centroid, 0, atol=1e-12)
    L = iso.isotropy_constant_
    assert np.allclose(Q.inertia, L**2 * np.eye(2), atol=1e-12)
