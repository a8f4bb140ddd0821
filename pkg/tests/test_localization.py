from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from causal_ot.errors import (ChronologyViolated, InsufficientReach, NoRaysThroughSet, NotSteep, ZeroFunction)
from causal_ot.localization import (Ray, build_rays, check_cd_needle, check_ray, classify_bad_points, coarea,
                                    decompose, disintegrate, distance_potential, level_masses, localize_mean_zero,
                                    segment_factor, segment_inequality, transport_relation)
from causal_ot.spacetime import custom_dag, minkowski

from conftest import grid, index_of, line, three_lines


# --- transport relation ---------------------------------------------------------


def test_relation_from_distance_potential_is_radial():
    st = grid((7, 13), [(0, 3), (-3, 3)])
    o = index_of(st, 0, 0)
    pot = distance_potential(st, [o])
    rel = transport_relation(pot.domain, pot.u, st)
    for x, y in rel.pairs():
        if x == y:
            continue
        a, b = st.coords[x], st.coords[y]
        if x == o:
            assert st.l[o, y] > 0
            continue
        # o, x, y collinear with x between o and y
        cross = a[0] * b[1] - a[1] * b[0]
        assert abs(cross) < 1e-9 and 0 < a[0] < b[0]


def test_relation_shift_invariant():
    st = grid((5, 5), [(0, 2), (-1, 1)])
    pot = distance_potential(st, [index_of(st, 0, 0)])
    a = transport_relation(pot.domain, pot.u, st)
    b = transport_relation(pot.domain, pot.u + 17.5, st)
    assert np.array_equal(a.rel, b.rel)


def test_relation_propagates_along_geodesic():
    st = line(6, 5.0)
    u = np.arange(6, dtype=float)
    rel = transport_relation(np.arange(6), u, st)
    for s in range(6):
        for t in range(s, 6):
            assert rel.related(s, t)


def test_relation_is_partial_order():
    st = grid((7, 9), [(0, 3), (-2, 2)])
    pot = distance_potential(st, [index_of(st, 0, 0), index_of(st, 0, 1)])
    rel = transport_relation(pot.domain, pot.u, st)
    R = rel.rel
    assert np.all(np.diag(R))
    assert not np.any(R & R.T & ~np.eye(R.shape[0], dtype=bool))
    two = (R.astype(int) @ R.astype(int)) > 0
    assert not np.any(two & ~R)
    assert rel.order_violations == 0


def test_relation_rejects_non_steep():
    st = line(3, 2.0)
    with pytest.raises(NotSteep):
        transport_relation([0, 1, 2], [0.0, 0.5, 2.0], st)


# --- bad points and rays ---------------------------------------------------------


def test_single_chain_has_no_branching():
    st = line(5, 4.0)
    rel = transport_relation(range(5), np.arange(5.0), st)
    bad = classify_bad_points(rel)
    assert bad.forward_branching.size == 0 and bad.backward_branching.size == 0
    assert bad.initial.tolist() == [0] and bad.final.tolist() == [4]


def test_forward_fork_is_branching():
    st = minkowski([[0, 0], [1, -0.5], [1, 0.5]])
    pot = distance_potential(st, [0])
    bad = classify_bad_points(transport_relation(pot.domain, pot.u, st))
    assert 0 in bad.forward_branching
    assert bad.backward_branching.size == 0


def test_distance_potential_has_no_backward_branching_in_flat_space():
    # the future timelike cut locus of a point in Minkowski space is empty
    st = grid((7, 13), [(0, 3), (-3, 3)])
    pot = distance_potential(st, [index_of(st, 0, 0)])
    bad = classify_bad_points(transport_relation(pot.domain, pot.u, st))
    assert bad.backward_branching.size == 0
    assert bad.forward_branching.tolist() == [index_of(st, 0, 0)]


def test_two_disjoint_chains_give_two_rays():
    l = np.full((6, 6), -np.inf)
    for chain in ((0, 1, 2), (3, 4, 5)):
        for a in range(3):
            for b in range(a, 3):
                l[chain[a], chain[b]] = float(b - a)
    st = custom_dag(np.arange(6.0)[:, None], l)
    u = np.array([0.0, 1, 2, 10, 11, 12])
    dec = decompose(st, range(6), u)
    assert [r.nodes.tolist() for r in dec.rays] == [[0, 1, 2], [3, 4, 5]]


def test_ray_order_isometry_and_levels():
    st, f = three_lines()
    dec = localize_mean_zero(f, st).decomposition
    for r in dec.rays:
        for a in range(r.nodes.size):
            for b in range(a, r.nodes.size):
                assert st.l[r.nodes[a], r.nodes[b]] == pytest.approx(r.s[b] - r.s[a], abs=1e-12)
        du = dec.u[r.nodes] - dec.u[r.representative]
        assert np.allclose(du, r.s, atol=1e-12)


def test_singletons_are_dropped():
    l = np.full((3, 3), -np.inf)
    np.fill_diagonal(l, 0.0)
    l[0, 1] = 1.0
    st = custom_dag(np.arange(3.0)[:, None], l)
    rel = transport_relation(range(3), np.array([0.0, 1.0, 5.0]), st)
    dec = build_rays(rel, classify_bad_points(rel), st)
    assert len(dec.rays) == 1 and dec.dropped.size == 0
    assert 2 not in dec.transport_set


# --- disintegration ----------------------------------------------------------------


def test_single_ray_carries_all_mass():
    st = line(5, 2.0, m=np.array([1.0, 2.0, 1.0, 3.0, 1.0]))
    dec = decompose(st, range(5), np.linspace(0, 2, 5))
    assert dec.q.tolist() == [1.0]
    left, right = dec.rays[0].cells()
    assert np.allclose(dec.h[0] * (left + right), st.m)


def test_uniform_ray_has_constant_density():
    st = line(6, 1.0)
    dec = decompose(st, range(6), np.linspace(0, 1, 6))
    assert np.allclose(dec.h[0], dec.h[0][0])


def test_two_equal_rays_split_mass():
    st, f = three_lines(c=(1.0, 1.0, 1.0))
    g = f.copy()
    g[18:] = 0
    dec = localize_mean_zero(g, st).decomposition
    assert len(dec.rays) == 2
    assert np.allclose(dec.q, [0.5, 0.5])


def test_mass_balance():
    rng = np.random.default_rng(8)
    st, f = three_lines(m=rng.uniform(0.5, 2.0, 27))
    dec = localize_mean_zero(f, st).decomposition
    total = sum(q * np.sum(h * sum(r.cells())) for q, h, r in zip(dec.q, dec.h, dec.rays))
    assert abs(total - dec.mass) <= 1e-12 * dec.mass
    assert dec.mass == pytest.approx(st.m[dec.transport_set].sum(), rel=1e-14)


# --- needle inequality ---------------------------------------------------------------


def test_constant_density_flat_is_equality():
    s = np.linspace(0, 2, 21)
    rep = check_cd_needle(np.ones(21), s, np.zeros(21), 3.0)
    assert rep.verdict and abs(rep.min_margin) <= 1e-12


def test_sine_model_density():
    N = 3.0
    s = np.linspace(0, math.pi, 62)[1:-1]
    rep = check_cd_needle(np.sin(s) ** (N - 1), s, np.full(s.size, N - 1), N)
    assert rep.min_margin >= -1e-6 and rep.verdict


def test_spike_violates():
    s = np.linspace(0, 1, 11)
    h = np.ones(11)
    h[5] = 0.05
    rep = check_cd_needle(h, s, np.zeros(11), 2.0)
    assert not rep.verdict and rep.worst_triple[1] == 5


def test_too_few_nodes():
    rep = check_cd_needle([1.0, 1.0], [0.0, 1.0], [0.0, 0.0], 2.0)
    assert rep.verdict and rep.flags == ["too-few-nodes"]


def test_needle_rejects_small_N():
    with pytest.raises(ValueError):
        check_cd_needle([1, 1, 1], [0, 1, 2], [0, 0, 0], 1.0)


def test_rays_of_flat_instance_pass():
    st, f = three_lines()
    dec = localize_mean_zero(f, st).decomposition
    for a in range(len(dec.rays)):
        assert check_ray(st, dec, a, 2.0).verdict


# --- mean-zero localization ---------------------------------------------------------------


def test_single_source_sink():
    st = line(5, 2.0)
    f = np.array([1.0, 0, 0, 0, -1.0])
    res = localize_mean_zero(f, st)
    assert len(res.decomposition.rays) == 1
    assert res.decomposition.rays[0].nodes.tolist() == [0, 1, 2, 3, 4]
    assert res.ray_means.tolist() == [0.0]


def test_three_rays_balanced():
    st, f = three_lines()
    res = localize_mean_zero(f, st)
    assert len(res.decomposition.rays) == 3
    assert np.all(np.abs(res.ray_means) <= 1e-12)
    assert res.residual_mass == 0.0


def test_stray_event_reported_as_residual():
    st = minkowski([[0, 0], [1, 0], [2, 0], [1, 5]])
    eps = 1e-12
    f = np.array([1.0 + eps, 0.0, -1.0, -eps])
    res = localize_mean_zero(f, st, tol=1e-9)
    assert res.residual_mass == pytest.approx(eps)
    assert 3 not in res.decomposition.transport_set


def test_stray_event_with_mass_rejected():
    st = minkowski([[0, 0], [1, 0], [2, 0], [1, 5]])
    with pytest.raises(ChronologyViolated):
        localize_mean_zero(np.array([1.5, 0.0, -1.0, -0.5]), st)


def test_localize_rejects_bad_input():
    st = line(3)
    with pytest.raises(ZeroFunction):
        localize_mean_zero(np.zeros(3), st)
    with pytest.raises(ValueError):
        localize_mean_zero(np.array([1.0, 0.0, -0.5]), st)


# --- coarea and segment inequality -------------------------------------------------------


def test_coarea_full_ray_and_transport_set():
    rng = np.random.default_rng(4)
    st, f = three_lines(m=rng.uniform(0.5, 2.0, 27))
    dec = localize_mean_zero(f, st).decomposition
    r = dec.rays[1]
    assert coarea(st, dec, r.nodes) == pytest.approx(st.m[r.nodes].sum(), rel=1e-13)
    assert coarea(st, dec, dec.transport_set) == pytest.approx(dec.mass, rel=1e-13)


def test_coarea_slab_two_rays():
    # two rays of 5 events, spacing 0.5, counting measure; a slab of u-levels [0.5, 1.5]
    l = np.full((10, 10), -np.inf)
    for base in (0, 5):
        for a in range(5):
            for b in range(a, 5):
                l[base + a, base + b] = 0.5 * (b - a)
    st = custom_dag(np.r_[np.arange(5), np.arange(5)][:, None] * 0.5, l)
    u = np.r_[np.arange(5), np.arange(5)] * 0.5
    dec = decompose(st, range(10), u)
    slab = [1, 2, 3, 6, 7, 8]
    # each of the six nodes contributes q·h·cell = m = 1
    assert coarea(st, dec, slab) == pytest.approx(6.0, abs=1e-14)
    assert coarea(st, dec, slab, dt=0.01) == pytest.approx(6.0, abs=0.02)
    assert level_masses(dec, slab, [1.0]).tolist() == pytest.approx([2.0 * dec.q[0] * dec.h[0][2]])


def test_segment_factor():
    # sinh(3)/sinh(1) = 8.52439...
    assert segment_factor(-1.0, 2.0, 2.0, 1.0) == pytest.approx(math.sinh(3) / math.sinh(1), rel=1e-14)
    with pytest.raises(ValueError):
        segment_factor(0.0, 2.0, 2.0, 1.0)


def test_segment_constant_psi():
    st = line(41, 4.0)
    dec = decompose(st, range(41), np.linspace(0, 4, 41))
    rep = segment_inequality(st, dec, [0], np.ones(41), T=2.0, delta=1.0, K=-1.0, N=2.0)
    assert rep.lhs == pytest.approx(2.0, abs=1e-12)
    assert rep.verdict


def test_segment_single_ray_quadrature():
    st = line(41, 4.0)
    dec = decompose(st, range(41), np.linspace(0, 4, 41))
    psi = np.cos(np.linspace(0, 4, 41)) ** 2
    rep = segment_inequality(st, dec, [0], psi, T=2.0, delta=1.0, K=-1.0, N=2.0)
    # constant density on one ray: the tube integral over the footpoint mass is the ray integral
    assert rep.rhs == pytest.approx(rep.factor * rep.lhs, rel=1e-12)


def test_segment_requires_reach_and_rays():
    st = line(11, 1.0)
    dec = decompose(st, range(11), np.linspace(0, 1, 11))
    with pytest.raises(InsufficientReach):
        segment_inequality(st, dec, [0], np.ones(11), T=1.0, delta=0.5, K=-1.0, N=2.0)
    with pytest.raises(NoRaysThroughSet):
        segment_inequality(st, dec, [5], np.ones(11), T=0.2, delta=0.2, K=-1.0, N=2.0)


# --- properties ------------------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st_.integers(0, 10 ** 6))
def test_random_rays_are_isometric_and_balanced(seed):
    rng = np.random.default_rng(seed)
    st, f = three_lines(m=rng.uniform(0.2, 3.0, 27), c=tuple(rng.uniform(0.1, 2.0, 3)))
    res = localize_mean_zero(f, st)
    dec = res.decomposition
    for a, r in enumerate(dec.rays):
        assert abs(res.ray_means[a]) <= 1e-9 * st.m[r.nodes].sum()
        assert np.allclose(st.l[r.nodes[0], r.nodes], r.s, atol=1e-12)
    total = sum(q * np.sum(h * sum(r.cells())) for q, h, r in zip(dec.q, dec.h, dec.rays))
    assert abs(total - dec.mass) <= 1e-12 * dec.mass


@settings(max_examples=25, deadline=None)
@given(st_.floats(0.005, 0.2))
def test_coarea_quadrature_error_bound(dt):
    rng = np.random.default_rng(2)
    st, f = three_lines(m=rng.uniform(0.5, 2.0, 27))
    dec = localize_mean_zero(f, st).decomposition
    A = dec.transport_set
    exact = coarea(st, dec, A)
    # bound: dt × total variation of the level masses over the cell edges
    edges = np.unique(np.concatenate([[dec.u[r.representative] + r.s - a, dec.u[r.representative] + r.s + b]
                                      for r in dec.rays for a, b in [r.cells()]]))
    mids = 0.5 * (edges[:-1] + edges[1:])
    lm = np.r_[0.0, level_masses(dec, A, mids), 0.0]
    tv = np.abs(np.diff(lm)).sum()
    assert abs(coarea(st, dec, A, dt=dt) - exact) <= dt * tv + 1e-12


def test_ray_cells_cover_the_ray():
    r = Ray(np.arange(4), np.array([0.0, 0.5, 1.5, 2.0]))
    left, right = r.cells()
    assert left.tolist() == [0.25, 0.25, 0.5, 0.25]
    assert right.tolist() == [0.25, 0.5, 0.25, 0.25]
