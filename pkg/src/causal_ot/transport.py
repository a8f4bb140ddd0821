"""Causal optimal transport with cost l_+^p, displacement geodesics, ℓ₁ duality."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import (DegenerateProblem, InfeasibleMarginals, NoChronologicalOptimum,
                     NoDiscreteGeodesic)
from .measures import Coupling, Measure, Plan
from .simplex import solve_transportation
from .spacetime import DiscreteSpacetime

NEG_INF = -math.inf
DUST = 1e-15  # couplings entries at or below this are rounding noise
FEASIBILITY_TOL = 1e-9


@dataclass
class TransportResult:
    value: float  # ℓ_p(μ, ν), or -inf when no causal coupling exists
    objective: float  # Σ π l_+^p
    coupling: Coupling | None
    rows: np.ndarray  # support of μ
    cols: np.ndarray  # support of ν
    row_duals: np.ndarray | None
    col_duals: np.ndarray | None


@dataclass
class DualPotential:
    domain: np.ndarray
    values: np.ndarray
    value: float  # ∫u dν − ∫u dμ
    primal: float
    coupling: Coupling

    def at(self, i: int) -> float:
        pos = np.searchsorted(self.domain, i)
        if pos >= self.domain.size or self.domain[pos] != i:
            raise KeyError(i)
        return float(self.values[pos])

    def as_array(self, n: int) -> np.ndarray:
        out = np.full(n, np.nan)
        out[self.domain] = self.values
        return out


@dataclass
class MarginReport:
    margin: float
    verdict: bool
    tolerance: float
    values: dict


def _check_measures(mu: Measure, nu: Measure, st: DiscreteSpacetime):
    if mu.n != st.n or nu.n != st.n:
        raise InfeasibleMarginals("measure length does not match the number of events")


def causal_feasibility(mu: Measure, nu: Measure, st: DiscreteSpacetime) -> bool:
    """Whether some coupling of μ and ν charges only causal pairs (max-flow test)."""
    _check_measures(mu, nu, st)
    rows, cols = mu.support, nu.support
    g = nx.DiGraph()
    for i in rows:
        g.add_edge("s", ("x", int(i)), capacity=float(mu.weights[i]))
    for j in cols:
        g.add_edge(("y", int(j)), "t", capacity=float(nu.weights[j]))
    causal = st.l[np.ix_(rows, cols)] >= 0
    for a, b in zip(*np.nonzero(causal)):
        g.add_edge(("x", int(rows[a])), ("y", int(cols[b])))  # no capacity attribute = unbounded
    if "s" not in g or "t" not in g:
        return False
    try:
        flow = nx.maximum_flow_value(g, "s", "t")
    except nx.NetworkXError:
        return False
    return flow >= 1.0 - FEASIBILITY_TOL


def solve_lp(mu: Measure, nu: Measure, p: float, st: DiscreteSpacetime) -> TransportResult:
    """Maximize Σ π l_+^p over causal couplings of μ and ν."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    _check_measures(mu, nu, st)
    rows, cols = mu.support, nu.support
    if not causal_feasibility(mu, nu, st):
        return TransportResult(NEG_INF, NEG_INF, None, rows, cols, None, None)
    block = st.l[np.ix_(rows, cols)]
    allowed = block >= 0
    cost = np.where(allowed, np.maximum(block, 0.0), 0.0) ** p
    sol = solve_transportation(mu.weights[rows], nu.weights[cols], cost, allowed)
    keep = (sol.flow > DUST) & allowed
    a, b = np.nonzero(keep)
    coupling = Coupling(rows[a], cols[b], sol.flow[a, b], st.n)
    value = sol.objective ** (1.0 / p) if sol.objective > 0 else 0.0
    return TransportResult(value, sol.objective, coupling, rows, cols, sol.u, sol.v)


def lp_cost(mu: Measure, nu: Measure, p: float, st: DiscreteSpacetime) -> float:
    return solve_lp(mu, nu, p, st).value


def _geodesic_chain(st: DiscreteSpacetime, i: int, j: int, times: np.ndarray, tol: float) -> list[int]:
    lij = st.l[i, j]
    chain = [i]
    for s in range(1, times.size - 1):
        t = times[s]
        cand = np.flatnonzero((np.abs(st.l[i] - t * lij) <= tol * lij)
                              & (np.abs(st.l[:, j] - (1.0 - t) * lij) <= tol * lij))
        prev = chain[-1]
        step = st.l[prev, cand]
        cand, step = cand[step >= 0], step[step >= 0]
        if cand.size == 0:
            raise NoDiscreteGeodesic(f"no event at t={t:g} between {i} and {j}", (int(i), int(j)))
        dev = np.abs(step - (t - times[s - 1]) * lij)
        chain.append(int(cand[np.argmin(dev)]))  # argmin keeps the smallest index on ties
    chain.append(j)
    return chain


def lp_geodesic(mu0: Measure, mu1: Measure, p: float, steps: int, st: DiscreteSpacetime,
                tol: float = 1e-6) -> tuple[Plan, list[Measure]]:
    """Lift an optimal coupling to a plan of discrete geodesics at stamps s/steps.

    ``tol`` is the relative chain saturation tolerance (times l of the pair).
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    res = solve_lp(mu0, mu1, p, st)
    if not res.value > 0:
        raise DegenerateProblem(f"transport cost {res.value} is not positive")
    cp = res.coupling
    if np.any(st.l[cp.i, cp.j] <= 0):
        raise NoChronologicalOptimum("the optimal coupling charges non-chronological pairs")
    times = np.linspace(0.0, 1.0, steps + 1)
    chains = [_geodesic_chain(st, i, j, times, tol) for i, j in zip(cp.i, cp.j)]
    plan = Plan.from_chains(st, times, chains, cp.w)
    return plan, [plan.marginal(s, st.n) for s in range(times.size)]


def l2_cost(plan: Plan) -> float:
    return float(math.sqrt(np.sum(plan.weights * plan.lengths ** 2)))


def _longest_from_root(W: np.ndarray, scale: float) -> np.ndarray:
    """Longest paths from a virtual root joined to every vertex by a 0-weight edge.

    ``W[a, b]`` is the weight of edge a → b or -inf. The graph must have no
    positive cycle; rounding-level cycles are absorbed by the ``scale`` slack.
    """
    u = np.zeros(W.shape[0])
    for _ in range(W.shape[0] + 1):
        new = np.maximum(u, np.max(u[:, None] + W, axis=0))
        if np.all(new <= u + 1e-12 * scale):
            break
        u = new
    return u


def _central_potential(res: TransportResult, st: DiscreteSpacetime) -> tuple[np.ndarray, np.ndarray]:
    """Optimal ℓ₁ potential on supp μ ∪ supp ν, centred among all optimal ones.

    Optimal potentials are the solutions of u(y) − u(x) ≥ l(x, y) on causal
    pairs with equality on the coupling's support. That system of difference
    constraints has a least and a greatest solution pinned at 0, and the
    midpoint leaves slack on every pair where either of them does. A simplex
    vertex instead saturates extra pairs, which would add spurious relations
    to the needle decomposition.
    """
    V = np.concatenate([res.rows, res.cols])
    r, c = res.rows.size, res.cols.size
    block = st.l[np.ix_(res.rows, res.cols)]
    W = np.full((r + c, r + c), NEG_INF)
    W[:r, r:] = np.where(block >= 0, block, NEG_INF)
    cp = res.coupling
    a = np.searchsorted(res.rows, cp.i)
    b = np.searchsorted(res.cols, cp.j)
    W[r + b, a] = -st.l[cp.i, cp.j]
    scale = max(1.0, float(np.max(block[block >= 0])) if np.any(block >= 0) else 1.0)
    lo = _longest_from_root(W, scale)
    hi = -_longest_from_root(W.T, scale)
    return V, 0.5 * (lo + hi)


def kantorovich_dual_l1(mu: Measure, nu: Measure, E: Sequence[int], st: DiscreteSpacetime) -> DualPotential:
    """Reverse-l-Lipschitz potential u on E attaining ℓ₁(μ,ν) = ∫u dν − ∫u dμ.

    u starts from the centred optimal potential on supp μ ∪ supp ν. It is
    extended to E as the mean of the smallest extension from supp μ,
    max_z [b(z) + l(z, y)], and the largest extension from supp ν,
    min_z [c(z) − l(y, z)]. Both are reverse-l-Lipschitz, so their mean is too.
    Events off every optimal geodesic then saturate no pair with either
    support, and the transport set stays as small as possible. b and c are
    constants far below and above every other value off the supports, which
    keeps u finite outside the causal diamond. Neither support changes value.
    """
    res = solve_lp(mu, nu, 1.0, st)
    if not res.value > 0:
        raise DegenerateProblem(f"ℓ1 cost {res.value} is not positive")
    E = st.check_indices(E)
    if not (np.isin(res.rows, E).all() and np.isin(res.cols, E).all()):
        raise ValueError("E must contain the supports of both measures")
    lE = st.l[np.ix_(E, E)]
    finite = lE[np.isfinite(lE)]
    diam = float(finite.max()) if finite.size else 0.0
    _, central = _central_potential(res, st)
    seed, top = central[:res.rows.size], central[res.rows.size:]
    floor = float(central.min()) - diam - 1.0
    ceil = float(central.max()) + diam + 1.0
    base = np.full(E.size, floor)
    base[np.searchsorted(E, res.rows)] = seed
    cap = np.full(E.size, ceil)
    cap[np.searchsorted(E, res.cols)] = top
    lo = np.max(base[:, None] + lE, axis=0)
    hi = np.min(cap[None, :] - lE, axis=1)
    u = 0.5 * (lo + hi)
    full = np.zeros(st.n)
    full[E] = u
    value = float(nu.weights @ full - mu.weights @ full)
    return DualPotential(E, u, value, res.objective, res.coupling)


def check_reverse_triangle_lp(mu: Measure, nu: Measure, sigma: Measure, p: float, st: DiscreteSpacetime,
                              tol: float = 1e-9) -> MarginReport:
    """Margin ℓ_p(μ,σ) − ℓ_p(μ,ν) − ℓ_p(ν,σ), with -inf absorbing in the sum."""
    a = lp_cost(mu, nu, p, st)
    b = lp_cost(nu, sigma, p, st)
    c = lp_cost(mu, sigma, p, st)
    through = NEG_INF if (a == NEG_INF or b == NEG_INF) else a + b
    if through == NEG_INF:
        margin = math.inf
    elif c == NEG_INF:
        margin = NEG_INF
    else:
        margin = c - through
    return MarginReport(margin, margin >= -tol, tol, {"mu_nu": a, "nu_sigma": b, "mu_sigma": c})
