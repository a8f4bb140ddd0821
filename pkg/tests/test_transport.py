from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from causal_ot.errors import DegenerateProblem, InfeasibleMarginals
from causal_ot.measures import Measure, Plan
from causal_ot.simplex import solve_transportation
from causal_ot.spacetime import custom_dag, minkowski
from causal_ot.transport import (causal_feasibility, check_reverse_triangle_lp, kantorovich_dual_l1, l2_cost,
                                 lp_cost, lp_geodesic, solve_lp)

from conftest import grid, index_of
from oracles import lp_optimum, permutation_optimum


def two_point():
    return minkowski([[0, 0], [2, 1], [1, 3]])  # 0 ≪ 1, 0 and 2 spacelike


@pytest.mark.parametrize("p", [1.0, 0.5, 0.25])
def test_dirac_to_dirac(p):
    st = two_point()
    assert lp_cost(Measure.dirac(3, 0), Measure.dirac(3, 1), p, st) == pytest.approx(math.sqrt(3), rel=1e-14)


def test_dirac_spacelike_is_neg_inf():
    st = two_point()
    assert lp_cost(Measure.dirac(3, 0), Measure.dirac(3, 2), 1.0, st) == -math.inf


def test_rejects_bad_exponent():
    st = two_point()
    with pytest.raises(ValueError):
        lp_cost(Measure.dirac(3, 0), Measure.dirac(3, 1), 1.5, st)


def test_rejects_mismatched_measure():
    with pytest.raises(InfeasibleMarginals):
        lp_cost(Measure.dirac(2, 0), Measure.dirac(3, 1), 1.0, two_point())


def test_measure_validation():
    with pytest.raises(InfeasibleMarginals):
        Measure(np.array([0.5, 0.6]))
    with pytest.raises(InfeasibleMarginals):
        Measure(np.array([1.5, -0.5]))


def test_two_by_two_matches_permutation_oracle():
    st = minkowski([[0, 0], [0, 0.3], [2, 0.1], [2.5, 0.6]])
    mu, nu = Measure.uniform(4, [0, 1]), Measure.uniform(4, [2, 3])
    cost = np.maximum(st.l[np.ix_([0, 1], [2, 3])], 0) ** 0.5
    want = permutation_optimum(cost, st.l[np.ix_([0, 1], [2, 3])] >= 0) ** 2
    assert lp_cost(mu, nu, 0.5, st) == pytest.approx(want, rel=1e-12)


def test_feasibility():
    st = two_point()
    assert causal_feasibility(Measure.dirac(3, 0), Measure.dirac(3, 1), st)
    assert not causal_feasibility(Measure.dirac(3, 0), Measure.dirac(3, 2), st)


def test_feasibility_perfect_matching_only():
    l = np.full((4, 4), -np.inf)
    np.fill_diagonal(l, 0.0)
    l[0, 2] = l[1, 3] = 1.0
    st = custom_dag([[0.0], [0.1], [1.0], [1.1]], l)
    assert causal_feasibility(Measure.uniform(4, [0, 1]), Measure.uniform(4, [2, 3]), st)
    assert not causal_feasibility(Measure(np.array([0.7, 0.3, 0, 0])), Measure.uniform(4, [2, 3]), st)


def test_geodesic_dirac_midpoint():
    st = grid((3, 3), [(0, 2), (-1, 1)])
    x, y, z = index_of(st, 0, 0), index_of(st, 2, 0), index_of(st, 1, 0)
    plan, path = lp_geodesic(Measure.dirac(st.n, x), Measure.dirac(st.n, y), 1.0, 2, st)
    assert path[1].support.tolist() == [z]


def test_geodesic_two_atoms_midpoints(grid_11):
    st = grid_11
    a, b = index_of(st, 0, 0.2), index_of(st, 0, 0.8)
    c, d = index_of(st, 1.6, 0.2), index_of(st, 1.6, 0.8)
    plan, path = lp_geodesic(Measure.uniform(st.n, [a, b]), Measure.uniform(st.n, [c, d]), 0.5, 2, st)
    mids = sorted([index_of(st, 0.8, 0.2), index_of(st, 0.8, 0.8)])
    assert path[1].support.tolist() == mids
    assert np.allclose(path[1].weights[mids], 0.5)


def test_geodesy_law(grid_11):
    st = grid_11
    src = [index_of(st, 0, x) for x in (0.2, 0.4)]
    dst = [index_of(st, 2.0, x) for x in (0.2, 0.4)]
    mu, nu = Measure.uniform(st.n, src), Measure.uniform(st.n, dst)
    for p in (1.0, 0.5):
        total = lp_cost(mu, nu, p, st)
        plan, path = lp_geodesic(mu, nu, p, 10, st)
        for s, t in [(0, 5), (2, 7), (3, 10), (0, 10)]:
            got = lp_cost(path[s], path[t], p, st)
            assert got == pytest.approx((plan.times[t] - plan.times[s]) * total, rel=1e-9)


def test_geodesic_zero_cost_rejected():
    st = two_point()
    with pytest.raises(DegenerateProblem):
        lp_geodesic(Measure.dirac(3, 0), Measure.dirac(3, 0), 1.0, 2, st)


def test_l2_cost_single_chain():
    st = minkowski([[0, 0], [3, 0]])
    assert l2_cost(Plan.from_chains(st, [0, 1], [[0, 1]], [1.0])) == pytest.approx(3.0)


def test_l2_cost_two_chains():
    plan = Plan(np.array([0.0, 1.0]), np.array([[0, 1], [2, 3]]), np.array([0.5, 0.5]), np.array([1.0, 2.0]))
    assert l2_cost(plan) == pytest.approx(math.sqrt(2.5), abs=1e-15)


def test_l2_cost_dominates_lp(grid_11):
    st = grid_11
    mu = Measure.uniform(st.n, [index_of(st, 0, x) for x in (0.2, 0.3, 0.5)])
    nu = Measure.uniform(st.n, [index_of(st, 2.0, x) for x in (0.1, 0.3, 0.7)])
    for p in (1.0, 0.5):
        plan, _ = lp_geodesic(mu, nu, p, 2, st, tol=0.2)
        assert l2_cost(plan) >= lp_cost(mu, nu, p, st) - 1e-12


def test_dual_dirac():
    st = two_point()
    dual = kantorovich_dual_l1(Measure.dirac(3, 0), Measure.dirac(3, 1), [0, 1], st)
    assert dual.at(1) - dual.at(0) == pytest.approx(st.l[0, 1], abs=1e-15)


def test_dual_three_by_three_against_scipy():
    rng = np.random.default_rng(11)
    src = np.c_[np.zeros(3), rng.uniform(0, 1, 3)]
    dst = np.c_[np.full(3, 3.0), rng.uniform(0, 1, 3)]
    st = minkowski(np.vstack([src, dst]))
    a = rng.dirichlet(np.ones(3))
    b = rng.dirichlet(np.ones(3))
    mu, nu = Measure(np.r_[a, np.zeros(3)]), Measure(np.r_[np.zeros(3), b])
    dual = kantorovich_dual_l1(mu, nu, range(6), st)
    block = st.l[:3, 3:]
    want = lp_optimum(a, b, np.maximum(block, 0), block >= 0)
    assert dual.value == pytest.approx(want, abs=1e-9)
    assert dual.primal == pytest.approx(want, abs=1e-9)
    u = dual.as_array(6)
    for i, j, w in dual.coupling.pairs():
        assert u[j] - u[i] == pytest.approx(st.l[i, j], abs=1e-9)


def test_simplex_against_scipy():
    rng = np.random.default_rng(2)
    for _ in range(30):
        m, n = rng.integers(1, 7, 2)
        a = rng.dirichlet(np.ones(m))
        b = rng.dirichlet(np.ones(n))
        cost = rng.random((m, n))
        allowed = np.ones((m, n), dtype=bool)
        sol = solve_transportation(a, b, cost, allowed)
        assert sol.objective == pytest.approx(lp_optimum(a, b, cost, allowed), abs=1e-10)
        assert np.allclose(sol.flow.sum(1), a) and np.allclose(sol.flow.sum(0), b)


def test_reverse_triangle_on_one_geodesic():
    st = minkowski([[0, 0], [1, 0.2], [2, 0.4]])
    d = [Measure.dirac(3, i) for i in range(3)]
    rep = check_reverse_triangle_lp(d[0], d[1], d[2], 0.5, st)
    assert rep.margin == pytest.approx(0.0, abs=1e-14) and rep.verdict


def test_reverse_triangle_same_measure():
    st = minkowski([[0, 0], [2, 0]])
    mu, sig = Measure.dirac(2, 0), Measure.dirac(2, 1)
    rep = check_reverse_triangle_lp(mu, mu, sig, 1.0, st)
    assert rep.values["mu_nu"] == 0.0
    assert rep.margin == pytest.approx(0.0, abs=1e-15)


def test_reverse_triangle_random_triples():
    rng = np.random.default_rng(6)
    st = minkowski(np.c_[rng.uniform(0, 3, 50), rng.uniform(0, 1, 50)])
    order = np.argsort(st.coords[:, 0])
    early, mid, late = order[:12], order[19:31], order[38:]
    for _ in range(20):
        mu = Measure.uniform(st.n, rng.choice(early, 3, replace=False))
        nu = Measure.uniform(st.n, rng.choice(mid, 3, replace=False))
        sg = Measure.uniform(st.n, rng.choice(late, 3, replace=False))
        for p in (1.0, 0.5):
            assert check_reverse_triangle_lp(mu, nu, sg, p, st).margin >= -1e-9


# --- properties --------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st_.integers(0, 10 ** 6), st_.integers(2, 5))
def test_restriction_property(seed, n):
    rng = np.random.default_rng(seed)
    st = minkowski(np.vstack([np.c_[np.zeros(n), rng.random(n)], np.c_[np.full(n, 2.0), rng.random(n)]]))
    mu, nu = Measure.uniform(2 * n, range(n)), Measure.uniform(2 * n, range(n, 2 * n))
    res = solve_lp(mu, nu, 0.5, st)
    cp = res.coupling
    keep = np.arange(0, cp.w.size, 2)
    w = cp.w[keep] / cp.w[keep].sum()
    a = np.bincount(cp.i[keep], w, minlength=2 * n)
    b = np.bincount(cp.j[keep], w, minlength=2 * n)
    sub = float(np.sum(w * st.l[cp.i[keep], cp.j[keep]] ** 0.5))
    assert solve_lp(Measure(a), Measure(b), 0.5, st).objective == pytest.approx(sub, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st_.integers(0, 10 ** 6))
def test_interpolants_stay_in_intermediate_set(seed):
    rng = np.random.default_rng(seed)
    st = grid((11, 11), [(0, 2), (0, 1)])
    src = rng.choice(np.flatnonzero(st.coords[:, 0] == 0), 3, replace=False)
    dst = rng.choice(np.flatnonzero(st.coords[:, 0] == 2), 3, replace=False)
    mu, nu = Measure.uniform(st.n, src), Measure.uniform(st.n, dst)
    tol = 0.3
    plan, path = lp_geodesic(mu, nu, 1.0, 2, st, tol=tol)
    for s, m in enumerate(path):
        t = plan.times[s]
        for z in m.support:
            atoms = np.flatnonzero(plan.chains[:, s] == z)
            assert atoms.size
            for a in atoms:
                i, j = plan.chains[a, 0], plan.chains[a, -1]
                assert i in src and j in dst
                assert abs(st.l[i, z] - t * st.l[i, j]) <= tol * st.l[i, j]
                assert abs(st.l[z, j] - (1 - t) * st.l[i, j]) <= tol * st.l[i, j]
