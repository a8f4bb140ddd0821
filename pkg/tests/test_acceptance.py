"""The twelve acceptance criteria, each at its stated tolerance.

Every test carries an ``acceptance`` mark; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from causal_ot.curvature import check_pathwise, check_tcde
from causal_ot.distortion import Potential, sigma
from causal_ot.inequalities import brunn_minkowski, hawking_threshold, schneider, schneider_hypothesis, sin_kappa_zeros
from causal_ot.localization import check_cd_needle, localize_mean_zero
from causal_ot.measures import Measure
from causal_ot.spacetime import generate, minkowski, verify_axioms
from causal_ot.transport import kantorovich_dual_l1, lp_cost, lp_geodesic

from conftest import grid, index_of, line, three_lines
from oracles import lp_optimum, permutation_optimum, sigma_closed


def detail(record_property, text):
    record_property("detail", text)


@pytest.mark.acceptance("C1", "distortion oracle, 200 constant potentials over all four branches")
def test_c1_distortion_oracle(record_property):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst, branches = 0.0, set()
    for c in range(200):
        branch = c % 4
        theta = rng.uniform(0.1, 3.0)
        q = {0: -rng.uniform(0.01, 30), 1: 0.0, 2: rng.uniform(0.01, 0.99) * math.pi ** 2,
             3: rng.uniform(1.0, 3.0) * math.pi ** 2}[branch]
        kappa, t = q / theta ** 2, rng.uniform(0, 1)
        got, want = sigma(Potential.constant(kappa, theta), t), sigma_closed(kappa, theta, t)
        if math.isinf(want):
            assert got == math.inf, (kappa, theta, t)
        else:
            err = abs(got - want) / max(abs(want), 1e-300) if want else abs(got)
            assert err <= 1e-8, (kappa, theta, t, got, want)
            worst = max(worst, err)
        branches.add(branch)
    elapsed = time.perf_counter() - start
    assert branches == {0, 1, 2, 3}
    assert elapsed < 5.0
    detail(record_property, f"max rel err {worst:.1e}, {elapsed:.2f} s")


def random_potential(rng, low=-6.0, high=6.0):
    return Potential(rng.uniform(0.1, 2.5), rng.uniform(low, high, rng.integers(2, 9)))


@pytest.mark.acceptance("C2", "scaling law on 100 piecewise-linear potentials")
def test_c2_scaling_law(record_property):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        p = random_potential(rng)
        t = rng.uniform(0, 1)
        a = sigma(p, t)
        b = sigma(Potential(1.0, p.values * p.length ** 2), t)
        if math.isinf(a) or math.isinf(b):
            assert a == b
            continue
        worst = max(worst, abs(a - b))
        assert abs(a - b) <= 1e-7
    detail(record_property, f"max |diff| {worst:.1e}")


@pytest.mark.acceptance("C3", "monotonicity on 500 ordered potential pairs")
def test_c3_monotonicity(record_property):
    rng = np.random.default_rng(303)
    worst = -math.inf
    for _ in range(500):
        p = random_potential(rng)
        lower = Potential(p.length, p.values - rng.uniform(0, 4, p.values.size))
        t = rng.uniform(0, 1)
        a, b = sigma(lower, t), sigma(p, t)
        if math.isinf(b):
            continue
        assert a <= b + 1e-9
        worst = max(worst, a - b)
    detail(record_property, f"max sigma(k') - sigma(k) = {worst:.1e}")


@pytest.mark.acceptance("C4", "l_p against exhaustive permutations, 100 instances, p in {1, 1/2}")
def test_c4_ot_oracle(record_property):
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    infeasible = 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        src = np.c_[rng.uniform(0, 1, n), rng.uniform(0, 1, n)]
        dst = np.c_[rng.uniform(0.8, 2.0, n), rng.uniform(-0.5, 1.5, n)]
        st = minkowski(np.vstack([src, dst]))
        mu = Measure.uniform(2 * n, range(n))
        nu = Measure.uniform(2 * n, range(n, 2 * n))
        block = st.l[:n, n:]
        allowed = block >= 0
        for p in (1.0, 0.5):
            want = permutation_optimum(np.where(allowed, block, 0.0) ** p, allowed)
            got = lp_cost(mu, nu, p, st)
            if want == -math.inf:
                assert got == -math.inf
                infeasible += 1
            else:
                assert got == pytest.approx(want ** (1 / p), abs=1e-9)
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    detail(record_property, f"{infeasible // 2} infeasible instances, {elapsed:.2f} s")


@pytest.mark.acceptance("C5", "l_1 strong duality on 50 chronological instances")
def test_c5_duality(record_property):
    rng = np.random.default_rng(505)
    worst_gap = worst_eq = 0.0
    for _ in range(50):
        a_n, b_n = rng.integers(2, 31, 2)
        src = np.c_[rng.uniform(0, 1, a_n), rng.uniform(0, 1, a_n)]
        dst = np.c_[rng.uniform(2, 3, b_n), rng.uniform(0, 1, b_n)]
        mid = np.c_[rng.uniform(0, 3, 20), rng.uniform(0, 1, 20)]
        st = minkowski(np.vstack([src, dst, mid]))
        n = st.n
        a, b = rng.dirichlet(np.ones(a_n)), rng.dirichlet(np.ones(b_n))
        mu = Measure(np.r_[a, np.zeros(n - a_n)])
        nu = Measure(np.r_[np.zeros(a_n), b, np.zeros(20)])
        dual = kantorovich_dual_l1(mu, nu, range(n), st)
        block = st.l[:a_n, a_n:a_n + b_n]
        want = lp_optimum(a, b, np.maximum(block, 0), block >= 0)
        assert dual.primal == pytest.approx(want, abs=1e-9)
        worst_gap = max(worst_gap, abs(dual.primal - dual.value))
        u = dual.as_array(n)
        causal = st.l >= 0
        slack = (u[None, :] - u[:, None]) - st.l
        assert np.count_nonzero(slack[causal] < -1e-9) == 0
        for i, j, _ in dual.coupling.pairs():
            worst_eq = max(worst_eq, abs(u[j] - u[i] - st.l[i, j]))
    assert worst_gap <= 1e-9 and worst_eq <= 1e-9
    detail(record_property, f"max gap {worst_gap:.1e}, max equality residual {worst_eq:.1e}")


def lattice_box(st, rows, cols):
    return [index_of(st, r * 0.1, c * 0.1) for r in rows for c in cols]


@pytest.mark.acceptance("C6", "TCD(0, 2) on a 2000-event Minkowski lattice")
def test_c6_minkowski_tcd(record_property):
    start = time.perf_counter()
    st = grid((40, 50), [(0.0, 3.9), (0.0, 4.9)])
    assert st.n == 2000
    mu0 = Measure.uniform(st.n, lattice_box(st, range(0, 5), range(10, 15)))
    notes = []
    # a rigid translate and a box spread four times wider in x
    for name, cols in (("translate", range(20, 25)), ("dilate", range(5, 25, 4))):
        mu1 = Measure.uniform(st.n, lattice_box(st, range(30, 35), cols))
        plan, _ = lp_geodesic(mu0, mu1, 0.5, 10, st, tol=1e-2)
        steps = st.l[plan.chains[:, :-1], plan.chains[:, 1:]]
        undershoot = float(np.max((plan.lengths - steps.sum(axis=1)) / plan.lengths))
        a = check_tcde(plan, st, N=2.0)
        b = check_pathwise(plan, st, N=2.0)
        tol = 3.0 * max(undershoot, 1e-12) * max(float(np.max(a.lhs)), 1.0)
        assert a.stamps.size == 11 and b.stamps.size == 11
        assert a.min_margin >= -tol and b.min_margin >= -tol
        notes.append(f"{name} undershoot {undershoot:.1e} margins {a.min_margin:.1e}/{b.min_margin:.1e}")
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    detail(record_property, "; ".join(notes) + f", {elapsed:.1f} s")


@pytest.mark.acceptance("C7", "Brunn-Minkowski equality for a translated interval")
def test_c7_bm_equality(record_property):
    st = line(500, 4.99)
    A0 = np.arange(100)
    errs = []
    for sharp in (False, True):
        rep = brunn_minkowski(st, A0, A0 + 300, 0.5, N=2.0, sharp=sharp)
        err = abs(rep.lhs - rep.rhs) / rep.lhs
        assert err <= 1e-3
        errs.append(err)
    detail(record_property, f"rel diff sigma {errs[0]:.1e}, tau {errs[1]:.1e}")


@pytest.mark.acceptance("C8", "needle pipeline on a three-ray instance")
def test_c8_needles(record_property):
    rng = np.random.default_rng(808)
    st, f = three_lines(m=rng.uniform(0.5, 2.0, 27))
    res = localize_mean_zero(f, st)
    dec = res.decomposition
    assert len(dec.rays) == 3
    node_err = 0.0
    total = 0.0
    for q, h, r in zip(dec.q, dec.h, dec.rays):
        cell = sum(r.cells())
        node_err = max(node_err, float(np.max(np.abs(q * h * cell - st.m[r.nodes]))))
        total += float(q * np.sum(h * cell))
    balance = abs(total - dec.mass)
    assert balance <= 1e-12 and node_err <= 1e-12
    mean = float(np.max(np.abs(res.ray_means)))
    assert mean <= 1e-9
    iso = 0.0
    for r in dec.rays:
        lr = st.l[np.ix_(r.nodes, r.nodes)]
        ds = r.s[None, :] - r.s[:, None]
        upper = np.triu(np.ones_like(lr, dtype=bool))
        iso = max(iso, float(np.max(np.abs(lr - ds)[upper])))
        iso = max(iso, float(np.max(np.abs(dec.u[r.nodes] - dec.u[r.representative] - r.s))))
    assert iso <= 1e-12
    detail(record_property, f"balance {balance:.1e}, node {node_err:.1e}, mean {mean:.1e}, isometry {iso:.1e}")


@pytest.mark.acceptance("C9", "CD needle on the sine model density and its spike")
def test_c9_cd_needle(record_property):
    N = 3.0
    s = np.linspace(0.0, math.pi, 202)[1:-1]
    h = np.sin(s) ** (N - 1)
    k = np.full(s.size, N - 1)
    rep = check_cd_needle(h, s, k, N)
    margin = min(rep.min_margin, rep.comparison_min_margin)
    assert margin >= -1e-4
    spiked = h.copy()
    spiked[100] *= 0.5
    bad = check_cd_needle(spiked, s, k, N)
    assert not bad.verdict
    detail(record_property, f"model margin {margin:.1e}, spike margin {bad.min_margin:.1e}")


@pytest.mark.acceptance("C10", "threshold formulas")
def test_c10_thresholds(record_property):
    assert abs(schneider(1.0, 1.0) - math.exp(math.pi)) <= 1e-10
    want = math.sinh(1.0) / math.sinh(3.0) * 2.5
    assert abs(hawking_threshold(-1.0, 2.0, 2.0, 1.0, 3.0) - want) <= 1e-10
    beta, eta, L = 1.0, 0.1, 5.0
    p = Potential.from_function(lambda r: (0.25 + beta ** 2) / (eta + L - r) ** 2, L)
    (r2,) = sin_kappa_zeros(p, 1)
    err = abs(r2 - (eta + L) * (1 - math.exp(-math.pi / beta)))
    assert err <= 1e-6
    detail(record_property, f"zero error {err:.1e}")


@pytest.mark.acceptance("C11", "warped-product sample violates every Schneider hypothesis")
def test_c11_warped(record_property):
    N = 2.0
    st = generate({"model": "warped-sqrt", "n_samples": 300, "seed": 11})
    assert np.array_equal(st.k, (N - 1) / (4.0 * st.coords[:, 0] ** 2))
    o = int(np.argmin(st.coords[:, 0]))
    d = st.l[o]
    radii = np.unique(d[d > 0])
    # the hypothesis only changes when R crosses a value of l(o, ·); above the
    # largest one the shell is empty and the hypothesis holds vacuously
    checked = 0
    for beta in (0.1, 0.5, 1.0):
        for R in np.r_[radii[0] / 2, radii[:-1]]:
            assert not schneider_hypothesis(st, o, float(R), beta, N)
            checked += 1
    detail(record_property, f"{checked} (beta, R) pairs up to l = {radii[-1]:.3f}")


def axiom_models():
    return {
        "minkowski-2": generate({"model": "minkowski", "dim": 2, "n_samples": 300, "seed": 1}),
        "minkowski-3": generate({"model": "minkowski", "dim": 3, "n_samples": 200, "seed": 2}),
        "minkowski-lattice": generate({"model": "minkowski", "shape": [15, 15], "box": [[0, 2], [0, 1]]}),
        "warped-sqrt": generate({"model": "warped-sqrt", "n_samples": 200, "seed": 3}),
        "custom": generate({"model": "custom", "n_samples": 120, "seed": 4}),
    }


@pytest.mark.acceptance("C12", "axiom suite on every generated model")
def test_c12_axioms(record_property):
    rng = np.random.default_rng(1212)
    models = axiom_models()
    for name, st in models.items():
        rep = verify_axioms(st)
        assert rep.ok, (name, rep.violations[:3])
    chained = 0
    for st in models.values():
        trip = rng.integers(0, st.n, (200, 3))
        # ordered by time so that many triples form causal chains
        x, y, z = np.take_along_axis(trip, np.argsort(st.coords[trip, 0], axis=1), axis=1).T
        through = st.l[x, y] + st.l[y, z]  # -inf absorbs
        direct = st.l[x, z]
        finite = np.isfinite(through)
        chained += int(finite.sum())
        assert np.all(direct[finite] >= through[finite] - 1e-12 * (1 + np.abs(direct[finite])))
    detail(record_property, f"{len(models)} models clean, 1000 triples ({chained} with a causal chain)")
