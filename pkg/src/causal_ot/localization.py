"""Needle decomposition of a finite spacetime along a 1-steep potential.

Pipeline: ``transport_relation`` → ``classify_bad_points`` → ``build_rays`` →
``disintegrate``. ``decompose`` runs all four. Endpoints of rays (initial and
final points) stay inside their rays, so a ray is a closed finite chain.
Needle inequalities are checked at interior node triples only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import networkx as nx
import numpy as np

from ._json import number
from .distortion import INFINITY_THRESHOLD, solve_batch
from .errors import (ChronologyViolated, InsufficientReach, NoRaysThroughSet, NotSteep,
                     NotTotallyOrdered, ZeroFunction, ZeroMassTransportSet)
from .measures import Measure
from .spacetime import DiscreteSpacetime, causal_set
from .transport import DualPotential, kantorovich_dual_l1

RELATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SteepPotential:
    domain: np.ndarray
    u: np.ndarray


@dataclass(eq=False)
class TransportRelation:
    """x ≼ y on the domain E, stored as a boolean matrix over positions in E."""

    domain: np.ndarray
    u: np.ndarray
    rel: np.ndarray
    order_violations: int = 0

    def pairs(self) -> list[tuple[int, int]]:
        a, b = np.nonzero(self.rel)
        return [(int(self.domain[x]), int(self.domain[y])) for x, y in zip(a, b)]

    def related(self, x: int, y: int) -> bool:
        px, py = np.searchsorted(self.domain, [x, y])
        return bool(self.rel[px, py])


@dataclass
class BadPoints:
    transport_set: np.ndarray  # points with a nontrivial related partner
    forward_branching: np.ndarray
    backward_branching: np.ndarray
    initial: np.ndarray
    final: np.ndarray


@dataclass
class Ray:
    nodes: np.ndarray  # event indices in increasing order
    s: np.ndarray  # parameter, cumulative l from the first node

    @property
    def representative(self) -> int:
        return int(self.nodes[0])

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right half-cell lengths around each node (midpoint rule).

        End nodes get a full cell, mirrored across the endpoint, so a uniform
        measure on an evenly spaced ray has a constant density.
        """
        half = np.diff(self.s) / 2.0
        left = np.r_[half[:1], half]
        right = np.r_[half, half[-1:]]
        return left, right


@dataclass
class RayDecomposition:
    domain: np.ndarray
    u: np.ndarray  # length n, NaN outside the domain
    rays: list
    bad: BadPoints
    dropped: np.ndarray  # singleton classes, which carry no ray
    q: np.ndarray | None = None
    h: list | None = None
    mass: float | None = None  # m[T]

    @property
    def quotient(self) -> np.ndarray:
        return np.array([r.representative for r in self.rays], dtype=int)

    @property
    def transport_set(self) -> np.ndarray:
        if not self.rays:
            return np.zeros(0, dtype=int)
        return np.sort(np.concatenate([r.nodes for r in self.rays]))

    def ray_of(self) -> dict:
        return {int(x): a for a, r in enumerate(self.rays) for x in r.nodes}

    def to_dict(self) -> dict:
        out = []
        for a, r in enumerate(self.rays):
            item = {"representative": r.representative, "nodes": [int(x) for x in r.nodes],
                    "s": [float(x) for x in r.s]}
            if self.q is not None:
                item["q"] = float(self.q[a])
                item["h"] = [float(x) for x in self.h[a]]
            out.append(item)
        return {"rays": out,
                "forward_branching": [int(x) for x in self.bad.forward_branching],
                "backward_branching": [int(x) for x in self.bad.backward_branching],
                "initial": [int(x) for x in self.bad.initial],
                "final": [int(x) for x in self.bad.final]}


def _as_domain_values(E, u, n):
    E = np.asarray(E, dtype=int)
    order = np.argsort(E, kind="stable")
    E = E[order]
    u = np.asarray(u, dtype=float)
    if u.size == n and E.size != n:
        vals = u[E]
    else:
        if u.size != E.size:
            raise ValueError("u must have one value per domain point (or per event)")
        vals = u[order]
    return E, vals


def transport_relation(E: Sequence[int], u, st: DiscreteSpacetime, tol: float = RELATION_TOL) -> TransportRelation:
    """x ≼ y iff x = y or u(y) − u(x) = l(x, y) > 0 (within ``tol``)."""
    E, vals = _as_domain_values(E, u, st.n)
    E = st.check_indices(E) if E.size else E
    lE = st.l[np.ix_(E, E)]
    du = vals[None, :] - vals[:, None]
    scale = tol * max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    causal = lE >= 0
    bad = causal & (du < lE - scale)
    if bad.any():
        a, b = np.argwhere(bad)[0]
        raise NotSteep(f"u({E[b]}) − u({E[a]}) = {du[a, b]:.3g} < l = {lE[a, b]:.3g}", (int(E[a]), int(E[b])))
    rel = (lE > 0) & (np.abs(du - lE) <= scale)
    np.fill_diagonal(rel, True)
    strict = rel & ~np.eye(E.size, dtype=bool)
    two = (strict.astype(float) @ strict.astype(float)) > 0
    violations = int(np.sum(two & ~rel)) + int(np.sum(strict & strict.T))
    return TransportRelation(E, vals, rel, violations)


def _branching(strict: np.ndarray, comparable: np.ndarray) -> np.ndarray:
    X = strict.astype(float)
    inc = (~comparable).astype(float)
    return np.einsum("ij,jk,ik->i", X, inc, X) > 0


def classify_bad_points(rel: TransportRelation) -> BadPoints:
    n = rel.domain.size
    strict = rel.rel & ~np.eye(n, dtype=bool)
    comparable = rel.rel | rel.rel.T
    has_succ = strict.any(axis=1)
    has_pred = strict.any(axis=0)
    tbp = has_succ | has_pred
    fwd = _branching(strict, comparable) & tbp
    bwd = _branching(strict.T, comparable) & tbp
    D = rel.domain
    return BadPoints(D[tbp], D[fwd], D[bwd], D[tbp & ~has_pred], D[tbp & ~has_succ])


def build_rays(rel: TransportRelation, bad: BadPoints, st: DiscreteSpacetime) -> RayDecomposition:
    """Split the non-branching transport set into totally ordered chains."""
    D = rel.domain
    keep = np.isin(D, bad.transport_set) & ~np.isin(D, bad.forward_branching) & ~np.isin(D, bad.backward_branching)
    pos = np.flatnonzero(keep)
    strict = rel.rel & ~np.eye(D.size, dtype=bool)
    g = nx.Graph()
    g.add_nodes_from(pos.tolist())
    sub = strict[np.ix_(pos, pos)]
    a, b = np.nonzero(sub)
    g.add_edges_from(zip(pos[a].tolist(), pos[b].tolist()))
    rays, dropped = [], []
    for comp in nx.connected_components(g):
        comp = np.array(sorted(comp))
        if comp.size == 1:
            dropped.append(int(D[comp[0]]))
            continue
        block = rel.rel[np.ix_(comp, comp)]
        if not np.all(block | block.T):
            raise NotTotallyOrdered(f"class containing event {D[comp[0]]} is not totally ordered")
        order = np.lexsort((D[comp], rel.u[comp]))
        nodes = D[comp[order]]
        steps = st.l[nodes[:-1], nodes[1:]]
        rays.append(Ray(nodes, np.r_[0.0, np.cumsum(steps)]))
    rays.sort(key=lambda r: r.representative)
    u_full = np.full(st.n, np.nan)
    u_full[D] = rel.u
    return RayDecomposition(D, u_full, rays, bad, np.array(sorted(dropped), dtype=int))


def disintegrate(st: DiscreteSpacetime, dec: RayDecomposition) -> RayDecomposition:
    """Ray weights q_α = m[ray]/m[T] and densities h_α with m⌞T = Σ q_α h_α ds."""
    masses = np.array([st.m[r.nodes].sum() for r in dec.rays])
    total = float(masses.sum())
    if not total > 0:
        raise ZeroMassTransportSet("the transport set carries no mass")
    q = masses / total
    hs = []
    for r, qa in zip(dec.rays, q):
        left, right = r.cells()
        with np.errstate(divide="ignore", invalid="ignore"):
            hs.append(np.where(qa > 0, st.m[r.nodes] / (qa * (left + right)), 0.0))
    return replace(dec, q=q, h=hs, mass=total)


def decompose(st: DiscreteSpacetime, E, u, tol: float = RELATION_TOL) -> RayDecomposition:
    rel = transport_relation(E, u, st, tol)
    bad = classify_bad_points(rel)
    return disintegrate(st, build_rays(rel, bad, st))


def distance_potential(st: DiscreteSpacetime, V: Sequence[int]) -> SteepPotential:
    """u(x) = max_{v ∈ V} l(v, x) on the causal future of V."""
    V = st.check_indices(V)
    E = np.array(causal_set(st, V, "future").members, dtype=int)
    return SteepPotential(E, np.max(st.l[np.ix_(V, E)], axis=0))


# --- needle inequalities -----------------------------------------------------


@dataclass
class NeedleReport:
    min_margin: float
    worst_triple: tuple | None
    comparison_min_margin: float
    worst_comparison: tuple | None
    n_triples: int
    tolerance: float
    flags: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return min(self.min_margin, self.comparison_min_margin) >= -self.tolerance

    def to_dict(self) -> dict:
        return {"min_margin": number(self.min_margin), "comparison_min_margin": number(self.comparison_min_margin),
                "worst_triple": self.worst_triple, "worst_comparison": self.worst_comparison,
                "n_triples": self.n_triples, "tolerance": self.tolerance, "verdict": self.verdict,
                "flags": list(self.flags)}


def _sin_tables(s: np.ndarray, k: np.ndarray, starts: np.ndarray, thetas: np.ndarray, sign: int, steps: int):
    """sin_κ for potentials κ(r) = k(start + sign·r) on [0, θ] (k linear in s)."""
    u = np.linspace(0.0, 1.0, 2 * steps + 1)
    pts = starts[:, None] + sign * thetas[:, None] * u[None, :]
    vals = np.interp(pts.ravel(), s, k).reshape(pts.shape)
    f, fp = solve_batch(vals, thetas, steps)
    return f, fp


def _hermite(f, fp, theta, steps, r, rows=None):
    """Cubic Hermite interpolation of sin_κ at r in [0, θ] from RK4 nodes.

    With ``rows`` the tables are 2D and entry c of r is read from row rows[c].
    """
    h = theta / steps
    x = np.clip(r / h, 0.0, steps)
    j = np.minimum(np.floor(x).astype(int), steps - 1)
    tt = x - j
    h00 = 2 * tt ** 3 - 3 * tt ** 2 + 1
    h10 = tt ** 3 - 2 * tt ** 2 + tt
    h01 = -2 * tt ** 3 + 3 * tt ** 2
    h11 = tt ** 3 - tt ** 2
    if rows is None:
        return h00 * f[j] + h10 * h * fp[j] + h01 * f[j + 1] + h11 * h * fp[j + 1]
    return (h00 * f[rows, j] + h10 * h * fp[rows, j]
            + h01 * f[rows, j + 1] + h11 * h * fp[rows, j + 1])


def _degenerate(f: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return np.min(f[:, 1:], axis=1) < INFINITY_THRESHOLD * theta


def check_cd_needle(h: Sequence[float], s: Sequence[float], k: Sequence[float], N: float,
                    tol: float = 1e-6, steps: int = 512, chunk: int = 1024) -> NeedleReport:
    """CD(k, N) along one ray: distorted concavity of h^(1/(N−1)) at node triples.

    Also checks the ratio comparison against the ray endpoints a < t0 < t1 < b:
    [sin_{κ⁻}(b−t1)/sin_{κ⁻}(b−t0)]^(N−1) ≤ h(t1)/h(t0) ≤ [sin_{κ⁺}(t1−a)/sin_{κ⁺}(t0−a)]^(N−1),
    with κ = k/(N−1) restricted to [t0, b] (backward) and [a, t1] (forward).
    Comparison margins are relative to max(1, h(t1)/h(t0)).
    """
    if not N > 1:
        raise ValueError("N must exceed 1")
    h = np.asarray(h, dtype=float)
    s = np.asarray(s, dtype=float)
    kap = np.asarray(k, dtype=float) / (N - 1.0)
    n = s.size
    if n < 3:  # no interior node, nothing to compare
        return NeedleReport(math.inf, None, math.inf, None, 0, tol, ["too-few-nodes"])
    g = h ** (1.0 / (N - 1.0))
    flags: list = []

    i0s, i1s = np.triu_indices(n, k=2)
    best, worst = math.inf, None
    for lo in range(0, i0s.size, chunk):
        a = i0s[lo:lo + chunk]
        b = i1s[lo:lo + chunk]
        theta = s[b] - s[a]
        fF, fpF = _sin_tables(s, kap, s[a], theta, +1, steps)
        fB, fpB = _sin_tables(s, kap, s[b], theta, -1, steps)
        cnt = b - a - 1
        rows = np.repeat(np.arange(a.size), cnt)
        offs = np.arange(rows.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        js = a[rows] + 1 + offs
        th = theta[rows]
        sf = _hermite(fF, fpF, th, steps, s[js] - s[a[rows]], rows) / fF[rows, -1]
        sb = _hermite(fB, fpB, th, steps, s[b[rows]] - s[js], rows) / fB[rows, -1]
        margins = g[js] - (sb * g[a[rows]] + sf * g[b[rows]])
        deg = (_degenerate(fF, theta) | _degenerate(fB, theta))[rows]
        if deg.any():
            charged = (g[a[rows]] > 0) | (g[b[rows]] > 0)
            margins = np.where(deg & charged, -math.inf, np.where(deg, g[js], margins))
            for c in np.unique(rows[deg & charged]):
                flags.append(f"infinite-coefficient:{int(a[c])}-{int(b[c])}")
        m = int(np.argmin(margins))
        if margins[m] < best:
            best, worst = float(margins[m]), (int(a[rows[m]]), int(js[m]), int(b[rows[m]]))

    comp_best, comp_worst = math.inf, None
    interior = np.arange(1, n - 1)
    if interior.size >= 2:
        # forward solves on [a, t1] for each t1, backward solves on [t0, b] for each t0
        thF = s[interior] - s[0]
        fF, fpF = _sin_tables(s, kap, np.full(interior.size, s[0]), thF, +1, steps)
        thB = s[-1] - s[interior]
        fB, fpB = _sin_tables(s, kap, np.full(interior.size, s[-1]), thB, -1, steps)
        e = N - 1.0
        c0, c1 = np.triu_indices(interior.size, k=1)
        t0, t1 = interior[c0], interior[c1]
        degF = _degenerate(fF, thF)[c1]
        degB = _degenerate(fB, thB)[c0]
        for t in np.unique(interior[c1[degF]]):
            flags.append(f"degenerate-upper-bound:{int(t)}")
        with np.errstate(divide="ignore", invalid="ignore"):
            upper = (fF[c1, -1] / _hermite(fF, fpF, thF[c1], steps, s[t0] - s[0], c1)) ** e
            lower = (_hermite(fB, fpB, thB[c0], steps, s[-1] - s[t1], c0) / fB[c0, -1]) ** e
            ratio = h[t1] / h[t0]
        upper = np.where(degF, math.inf, upper)
        lower = np.where(degB, 0.0, lower)
        margins = np.minimum(upper - ratio, ratio - lower) / np.maximum(1.0, np.abs(ratio))
        if margins.size:
            m = int(np.argmin(margins))
            comp_best, comp_worst = float(margins[m]), (int(t0[m]), int(t1[m]))
    return NeedleReport(best, worst, comp_best, comp_worst, int(np.sum(i1s - i0s - 1)),
                        tol, sorted(set(flags)))


def check_ray(st: DiscreteSpacetime, dec: RayDecomposition, alpha: int, N: float, k=None, **kw) -> NeedleReport:
    k = st.k if k is None else np.asarray(k, dtype=float)
    r = dec.rays[alpha]
    return check_cd_needle(dec.h[alpha], r.s, k[r.nodes], N, **kw)


# --- mean-zero localization --------------------------------------------------


@dataclass
class LocalizationResult:
    decomposition: RayDecomposition
    ray_means: np.ndarray
    residual_mass: float  # Σ |f| m outside the transport set
    dual: DualPotential


def localize_mean_zero(f: Sequence[float], st: DiscreteSpacetime, tol: float = 1e-9,
                       relation_tol: float = RELATION_TOL) -> LocalizationResult:
    f = np.asarray(f, dtype=float)
    if f.shape != (st.n,):
        raise ValueError("f needs one value per event")
    fm = f * st.m
    scale = float(np.abs(fm).sum())
    if scale == 0:
        raise ZeroFunction("f vanishes m-almost everywhere")
    if abs(fm.sum()) > tol * scale:
        raise ValueError(f"f does not have mean zero (Σ f m = {fm.sum():.3g})")
    # Events of supp f that break chronology with the opposite support are set
    # aside when their total |f| m is within tolerance. They count as residual.
    src, snk = np.flatnonzero(fm > 0), np.flatnonzero(fm < 0)
    a, b = np.nonzero(~(st.l[np.ix_(src, snk)] > 0))
    # of each offending pair, the event carrying less |f| m is the stray one
    stray = np.unique(np.where(np.abs(fm[src[a]]) <= np.abs(fm[snk[b]]), src[a], snk[b]))
    if stray.size:
        if np.abs(fm[stray]).sum() > tol * scale:
            raise ChronologyViolated("some source event does not chronologically precede some sink event")
        fm = fm.copy()
        fm[stray] = 0.0
        if not np.all(st.l[np.ix_(np.flatnonzero(fm > 0), np.flatnonzero(fm < 0))] > 0):
            raise ChronologyViolated("some source event does not chronologically precede some sink event")
    pos = np.maximum(fm, 0.0)
    neg = np.maximum(-fm, 0.0)
    mu0 = Measure(pos / pos.sum())
    mu1 = Measure(neg / neg.sum())
    s0, s1 = mu0.support, mu1.support
    E = np.union1d(causal_set(st, (s0, s1), "diamond").members, np.r_[s0, s1]).astype(int)
    dual = kantorovich_dual_l1(mu0, mu1, E, st)
    dec = decompose(st, E, dual.values, relation_tol)
    means = np.array([fm[r.nodes].sum() / st.m[r.nodes].sum() for r in dec.rays])
    T = dec.transport_set
    outside = np.ones(st.n, dtype=bool)
    outside[T] = False
    full = f * st.m
    return LocalizationResult(dec, means, float(np.abs(full[outside]).sum()), dual)


# --- coarea and segment inequality -------------------------------------------


def _node_cells(dec: RayDecomposition):
    """Per node: (event, ray, level lo, level hi, q·h) over all rays."""
    rows = []
    for a, r in enumerate(dec.rays):
        left, right = r.cells()
        base = dec.u[r.representative]
        lvl = base + r.s
        for i, x in enumerate(r.nodes):
            rows.append((int(x), a, lvl[i] - left[i], lvl[i] + right[i], dec.q[a] * dec.h[a][i]))
    return rows


def level_masses(dec: RayDecomposition, A: Sequence[int], levels: Sequence[float]) -> np.ndarray:
    """𝔥_t[A] = Σ_α q_α h_α(t) [ray α meets A at u-level t] at the given levels."""
    inA = set(int(x) for x in A)
    levels = np.asarray(levels, dtype=float)
    out = np.zeros(levels.size)
    for x, _, lo, hi, qh in _node_cells(dec):
        if x in inA:
            out += np.where((levels >= lo) & (levels < hi), qh, 0.0)
    return out


def coarea(st: DiscreteSpacetime, dec: RayDecomposition, A: Sequence[int], dt: float | None = None) -> float:
    """∫ 𝔥_t[A] dt over u-levels.

    By default the levels are split at every cell boundary, so the integrand is
    piecewise constant and the quadrature is exact. With ``dt`` a uniform
    midpoint grid is used instead; its error is at most dt × total variation
    of the level masses.
    """
    if dec.q is None:
        raise ValueError("decomposition has no densities; run disintegrate first")
    cells = _node_cells(dec)
    if not cells:
        return 0.0
    lo = min(c[2] for c in cells)
    hi = max(c[3] for c in cells)
    if dt is None:
        edges = np.unique(np.array([c[2] for c in cells] + [c[3] for c in cells]))
    else:
        edges = np.append(np.arange(lo, hi, dt), hi)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return float(np.sum(level_masses(dec, A, mids) * np.diff(edges)))


@dataclass
class SegmentReport:
    lhs: float
    rhs: float
    factor: float
    footpoint_mass: float
    curvature_bound_holds: bool
    tolerance: float

    @property
    def verdict(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance


def segment_factor(K: float, N: float, T: float, delta: float) -> float:
    """[sinh(a(T+δ)) / sinh(aδ)]^(N−1) with a = sqrt(−K/(N−1))."""
    if not K < 0:
        raise ValueError("K must be negative")
    a = math.sqrt(-K / (N - 1.0))
    return (math.sinh(a * (T + delta)) / math.sinh(a * delta)) ** (N - 1.0)


def _clipped(r: Ray, T: float) -> np.ndarray:
    left, right = r.cells()
    lo = np.maximum(r.s - left, 0.0)
    hi = np.minimum(r.s + right, T)
    return np.maximum(hi - lo, 0.0)


def rays_through(dec: RayDecomposition, A: Sequence[int]) -> list[int]:
    A = set(int(x) for x in A)
    out = [a for a, r in enumerate(dec.rays) if r.representative in A]
    if not out:
        raise NoRaysThroughSet("no ray starts in the given set")
    return out


def segment_inequality(st: DiscreteSpacetime, dec: RayDecomposition, A: Sequence[int], psi: Sequence[float],
                       T: float, delta: float, K: float, N: float, k=None, tol: float = 1e-9) -> SegmentReport:
    """min over footpoints of ∫₀^T ψ along the ray ≤ factor · 𝔥₀[A]⁻¹ ∫_{A^{0,T}} ψ dm."""
    if dec.q is None:
        raise ValueError("decomposition has no densities; run disintegrate first")
    psi = np.asarray(psi, dtype=float)
    k = st.k if k is None else np.asarray(k, dtype=float)
    factor = segment_factor(K, N, T, delta)
    alphas = rays_through(dec, A)
    F, integral, foot, kmin = [], 0.0, 0.0, math.inf
    for a in alphas:
        r = dec.rays[a]
        if r.length < T + delta - 1e-12:
            raise InsufficientReach(f"ray from event {r.representative} has reach {r.length:.6g} < T + δ")
        w = _clipped(r, T)
        F.append(float(np.sum(psi[r.nodes] * w)))
        integral += float(dec.q[a] * np.sum(psi[r.nodes] * dec.h[a] * w))
        foot += float(dec.q[a] * dec.h[a][0])
        kmin = min(kmin, float(np.min(k[r.nodes[r.s <= T + delta + 1e-12]])))
    return SegmentReport(min(F), factor * integral / foot, factor, foot, kmin >= K, tol)
