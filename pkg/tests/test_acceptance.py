"""Acceptance criteria 1 to 12, one test each.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible under
``pytest -v``) and then asserts the criterion at its stated tolerance.  The
seed is fixed up front; nothing here is tuned to a particular outcome.
"""

import csv
import io
import json
import math
import shutil
from fractions import Fraction

import numpy as np
import pytest

from randsimplex import (
    Ball,
    FunctionalSpec,
    affine_apply,
    ball_moment,
    basic_system,
    busemann_formula_residual,
    centroid_body,
    convexity_profile,
    estimate_moment,
    identity_report,
    intersection_body_area,
    make_polygon,
    petty_product,
    random_polygon,
    reduce_to_triangle,
    reed_moment,
    regular_polygon,
    steiner_shadow,
)
from randsimplex.cli import main
from randsimplex.corpus import corpus_dir, load_corpus
from randsimplex.sweeps import sweep_ball, sweep_triangle, triangle_value

from conftest import polygons, random_affine

SEED = 11
NS = 4.0
pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        return ok

    return emit


def corpus():
    bodies, errors = load_corpus()
    assert not errors
    return bodies


def centred(P):
    return affine_apply(np.eye(2), -P.centroid, P)


def test_criterion_01_reed(report):
    exact = reed_moment(1) == Fraction(1, 12) and reed_moment(2) == Fraction(1, 72)
    T = make_polygon([[0, 0], [1, 0], [0, 1]])
    e = estimate_moment(T, FunctionalSpec.full(3, 1), 2_000_000, SEED)
    ok = exact and e.stderr <= 2e-4 and abs(e.value - 1 / 12) <= NS * e.stderr
    report(1, ok, f"exact={exact} E1_3(T)={e.value:.6f} sigma={e.stderr:.2e} z={(e.value - 1 / 12) / e.stderr:+.2f}")
    assert ok


def test_criterion_02_ball(report):
    disc = dict(corpus())["disc_512"]
    checks = []
    a = estimate_moment(disc, FunctionalSpec.full(3, 1), 4_000_000, SEED)
    checks.append(("E1_3(B2)", a, 35 / (48 * math.pi**2), 1e-4))
    b = estimate_moment(disc, FunctionalSpec.centroid(1), 4_000_000, SEED + 1)
    checks.append(("E1_o(B2)", b, 4 / (9 * math.pi**2), 0.0))
    c = estimate_moment(disc, FunctionalSpec.centroid(2), 4_000_000, SEED + 2)
    checks.append(("E2_o(B2)", c, 1 / (32 * math.pi**2), 0.0))
    # the shipped centroid formula against the round ball sampler
    for d, p in [(2, 1), (2, 2), (3, 1)]:
        e = estimate_moment(Ball(d), FunctionalSpec.centroid(p, d), 10_000_000, SEED + 10 * d + p)
        checks.append((f"ball_moment(d={d},p={p})", e, ball_moment(d, p, "centroid"), 0.0))
    ok = True
    parts = []
    for name, e, ref, bias in checks:
        good = abs(e.value - ref) <= NS * e.stderr + bias
        ok &= good
        parts.append(f"{name} z={(e.value - ref) / e.stderr:+.2f}")
    report(2, ok, "; ".join(parts))
    assert ok


def test_criterion_03_identity(report):
    bodies = [make_polygon([[0, 0], [1, 0], [0, 1]]), make_polygon([[-1, -1], [1, -1], [1, 1], [-1, 1]])]
    bodies += polygons(SEED, 10)
    worst = 0.0
    for K in bodies:
        rep = identity_report(K, 1, 2, 1_000_000, SEED)
        s = next(s for s in rep.slacks if s.name == "identity_2")
        worst = max(worst, abs(s.value) / s.stderr)
    ok = worst <= NS
    report(3, ok, f"12 bodies, max |3E2_* - E2_3| / sigma = {worst:.2f}")
    assert ok


def test_criterion_04_sandwich_holder(report):
    worst, n = np.inf, 0
    for name, K in corpus():
        for p, q in [(1, 2), (2, 3)]:
            rep = identity_report(K, p, q, 500_000, SEED)
            for s in rep.slacks:
                if s.name == "identity_2":
                    continue
                worst = min(worst, s.value / s.stderr if s.stderr > 0 else np.inf)
                n += 1
    ok = worst >= -NS
    report(4, ok, f"{n} slacks, min slack / sigma = {worst:.2f}")
    assert ok


def test_criterion_05_affine(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for k in range(20):
        P = random_polygon(int(rng.integers(3, 10)), seed=int(rng.integers(2**31)), affine=True)
        A, b = random_affine(rng)
        Q = affine_apply(A, b, P)
        x = P.centroid + 0.3 * (P.vertices[0] - P.centroid)
        pairs = [(FunctionalSpec.full(3, 1), FunctionalSpec.full(3, 1)),
                 (FunctionalSpec.centroid(1), FunctionalSpec.centroid(1)),
                 (FunctionalSpec.fixed_point(x, 1), FunctionalSpec.fixed_point(A @ x + b, 1))]
        for s0, s1 in pairs:
            e0 = estimate_moment(P, s0, 200_000, SEED + 2 * k)
            e1 = estimate_moment(Q, s1, 200_000, SEED + 2 * k + 1)
            worst = max(worst, abs(e0.value - e1.value) / math.hypot(e0.stderr, e1.stderr))
    ok = worst <= NS
    report(5, ok, f"20 maps x 3 functionals, max |diff| / combined sigma = {worst:.2f}")
    assert ok


def test_criterion_06_extremal(report):
    low, high, n = np.inf, np.inf, 0
    for name, K in corpus():
        for p in (1, 2):
            for spec, bkind in [(FunctionalSpec.full(3, p), "full_simplex"), (FunctionalSpec.centroid(p), "centroid")]:
                e = estimate_moment(K, spec, 1_000_000, SEED)
                low = min(low, (e.value - ball_moment(2, p, bkind)) / e.stderr)
                high = min(high, (float(triangle_value(spec)) - e.value) / e.stderr)
                n += 1
    ok = low >= -NS and high >= -NS
    report(6, ok, f"{n} estimates, min (E - ball)/sigma = {low:.2f}, min (triangle - E)/sigma = {high:.2f}")
    assert ok


def test_criterion_07_shadow(report):
    rng = np.random.default_rng(SEED)
    conv, mono, dom = np.inf, np.inf, np.inf
    for k in range(100):
        spec = FunctionalSpec.full(3, 1) if k % 2 == 0 else FunctionalSpec.centroid(1)
        n = int(rng.integers(4, 10))
        P = random_polygon(n, seed=int(rng.integers(2**31)), affine=True)
        if k < 50:
            B = basic_system(P, int(rng.integers(n)))
            grid = np.linspace(-B.beta, B.alpha, 5)
            prof = convexity_profile(B.system, spec, grid, 200_000, SEED + k)
            v = np.array([e.value for e in prof.estimates])
            se = np.array([e.stderr for e in prof.estimates])
            top = int(np.argmax(v[[0, -1]])) * 4
            for j in range(1, 4):
                dom = min(dom, (v[top] - v[j]) / math.hypot(se[top], se[j]))
        else:
            th = rng.uniform(0, np.pi)
            S = steiner_shadow(P, [math.cos(th), math.sin(th)])
            prof = convexity_profile(S, spec, [-1, -0.5, 0, 0.5, 1], 200_000, SEED + k)
            e0, e1 = prof.estimates[2], prof.estimates[4]
            mono = min(mono, (e1.value - e0.value) / math.hypot(e0.stderr, e1.stderr))
        conv = min(conv, np.min(prof.second_differences / prof.second_stderr))
    ok = conv >= -NS and mono >= -NS and dom >= -NS
    report(7, ok, f"100 systems, min z: second difference {conv:.2f}, Steiner monotone {mono:.2f}, "
                  f"endpoint dominance {dom:.2f}")
    assert ok


def test_criterion_08_reduction(report):
    spec = FunctionalSpec.full(3, 1)
    ok, parts = True, []
    for name, P in [("square", regular_polygon(4)), ("pentagon", regular_polygon(5)),
                    ("hexagon", regular_polygon(6)), ("octagon", regular_polygon(8))]:
        tr = reduce_to_triangle(P, spec, 400_000, SEED)
        vals = tr.values()
        step = min((b.value - a.value) / math.hypot(a.stderr, b.stderr) for a, b in zip(vals, vals[1:]))
        f = tr.final.estimate
        tri = tr.final.polygon.n_vertices == 3
        z = (f.value - 1 / 12) / f.stderr
        good = step >= -NS and tri and abs(z) <= NS
        ok &= good
        parts.append(f"{name}: {len(tr.steps)} steps, min step z={step:.2f}, final z={z:+.2f}")
    report(8, ok, "; ".join(parts))
    assert ok


def _sweep_line(rep):
    f = rep.fit
    zmin = min(r.gap / r.gap_stderr for r in rep.rows)
    return (f"slope={f.slope:.3f} CI=[{f.ci_low:.3f}, {f.ci_high:.3f}] band={list(rep.band)} "
            f"min gap z={zmin:.1f} sanity z={rep.sanity.gap / rep.sanity.gap_stderr:+.2f}")


def test_criterion_09_ball_sweep(report):
    rep = sweep_ball(1.0, (0.05, 0.1, 0.2, 0.3, 0.4), 4_000_000, SEED)
    ok = rep.all_positive and rep.slope_in_band and rep.sanity_ok
    report(9, ok, _sweep_line(rep))
    assert ok


def test_criterion_10_triangle_sweep(report):
    rep = sweep_triangle(1.0, (0.05, 0.1, 0.15, 0.2, 0.3), 4_000_000, SEED)
    ok = rep.all_positive and rep.slope_in_band and rep.sanity_ok
    report(10, ok, _sweep_line(rep))
    assert ok


def test_criterion_11_derived(report):
    bodies = corpus()
    worst_g, worst_b, worst_p, worst_i = 0.0, 0.0, -np.inf, 0.0
    for j, (name, K) in enumerate(bodies):
        C = centred(K)
        if j < 10:
            G = centroid_body(C)
            e = estimate_moment(K, FunctionalSpec.centroid(1), 2_000_000, SEED + j)
            se = 4 * K.volume * e.stderr
            worst_g = max(worst_g, (abs(G.area - 4 * K.volume * e.value) - G.area_error) / se)
        worst_b = max(worst_b, abs(busemann_formula_residual(C)) / K.volume)
        worst_p = max(worst_p, petty_product(K) - math.pi**2 / 4)
        if np.all(C.contains(-C.vertices, tol=1e-10)):
            worst_i = max(worst_i, abs(intersection_body_area(C) / (4 * K.volume) - 1))
    disc = abs(petty_product(dict(bodies)["disc_512"]) - math.pi**2 / 4)
    ok = worst_g <= NS and worst_b <= 1e-4 and worst_p <= 1e-6 and disc <= 1e-3 and worst_i <= 1e-4
    report(11, ok, f"centroid body z={worst_g:.2f}, Busemann residual/V={worst_b:.1e}, "
                   f"Petty excess={worst_p:.2e}, disc Petty gap={disc:.1e}, intersection rel={worst_i:.1e}")
    assert ok


def test_criterion_12_determinism(report, capsys, tmp_path):
    D = corpus_dir()
    small = tmp_path / "corpus"
    small.mkdir()
    for name in ["triangle", "square"]:
        shutil.copy(D / f"{name}.json", small)
    commands = [
        ["estimate", "--body", D / "regular_5.json", "--samples", 200_000, "--seed", 7],
        ["estimate", "--body", D / "regular_5.json", "--kind", "centroid", "--p", 2, "--format", "csv",
         "--samples", 100_000],
        ["verify", "--corpus", small, "--samples", 50_000, "--plist", "1"],
        ["sweep-triangle", "--samples", 20_000, "--grid", "0.1,0.15,0.2,0.25,0.3"],
        ["sweep-ball", "--samples", 20_000, "--resolution", 64, "--grid", "0.1,0.2,0.3,0.4,0.5"],
        ["shadow-profile", "--body", D / "square.json", "--samples", 20_000],
        ["reduce", "--body", D / "regular_6.json", "--samples", 20_000],
        ["derive", "--body", D / "random_07.json", "--op", "centroid"],
    ]
    same = True
    for cmd in commands:
        outs = []
        for _ in range(2):
            main([str(c) for c in cmd])
            outs.append(capsys.readouterr().out)
        same &= outs[0] == outs[1] and len(outs[0]) > 0
    threads = True
    K = random_polygon(8, seed=SEED, affine=True)
    for spec in [FunctionalSpec.full(3, 1), FunctionalSpec.centroid(2), FunctionalSpec.full(5, 1.5)]:
        ref = estimate_moment(K, spec, 300_000, SEED, threads=1)
        for t in (2, 3, 4):
            e = estimate_moment(K, spec, 300_000, SEED, threads=t)
            threads &= (e.value, e.stderr) == (ref.value, ref.stderr)
    ok = same and threads
    report(12, ok, f"{len(commands)} commands byte-identical={same}, thread counts 1-4 bit-identical={threads}")
    assert ok
