"""Entropy, the functional U_N, and curvature-dimension checks along plans.

All checks verify the inequality for the plan they are given. A failure means
that plan violates it. It does not refute the condition for the underlying
space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._json import number
from .distortion import DEFAULT_STEPS, Potential, _uniform_potential, potential_along_plan, sigma
from .errors import DensityUndefined, NotInChronologicalFuture
from .measures import Measure, Plan
from .spacetime import DiscreteSpacetime
from .transport import _geodesic_chain

DEFAULT_TOL = 1e-6
NOTE = "verified for the constructed plan"


@dataclass
class TCDReport:
    kind: str
    stamps: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    tolerance: float
    flags: list = field(default_factory=list)
    note: str = NOTE

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else math.inf

    @property
    def verdict(self) -> bool:
        return self.min_margin >= -self.tolerance

    def to_dict(self) -> dict:
        def clean(a):
            return [clean(x) for x in a] if np.ndim(a) else number(a)

        return {
            "kind": self.kind,
            "stamps": clean(self.stamps),
            "lhs": clean(self.lhs),
            "rhs": clean(self.rhs),
            "margins": clean(self.margins),
            "min_margin": number(self.min_margin),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "flags": list(self.flags),
            "note": self.note,
        }


def _entropy(weights: np.ndarray, m: np.ndarray) -> float:
    charged = weights > 0
    if np.any(m[charged] <= 0):
        return math.inf
    w = weights[charged]
    return float(np.sum(w * np.log(w / m[charged])))


def entropy(mu: Measure, st: DiscreteSpacetime) -> float:
    """Σ μ_i log(μ_i / m_i); +inf when μ charges an m-null event."""
    return _entropy(mu.weights, st.m)


def _u(ent: float, N: float) -> float:
    return 0.0 if ent == math.inf else math.exp(-ent / N)


def u_n(mu: Measure, st: DiscreteSpacetime, N: float) -> float:
    if not N > 0:
        raise ValueError("N must be positive")
    return _u(entropy(mu, st), N)


def _stamp_indices(plan_times: np.ndarray, stamps) -> np.ndarray:
    if stamps is None:
        return np.arange(plan_times.size)
    out = []
    for t in np.atleast_1d(stamps):
        hit = np.flatnonzero(np.abs(plan_times - float(t)) <= 1e-12)
        if hit.size == 0:
            raise ValueError(f"stamp {t} is not on the plan's time grid")
        out.append(int(hit[0]))
    return np.array(out, dtype=int)


def _weighted(coef: float, u: float, flags: list, label: str) -> float:
    if math.isinf(coef):
        if u == 0:
            return 0.0
        flags.append(f"infinite-coefficient:{label}")
        return math.inf
    return coef * u


def _require_regular_endpoints(plan: Plan, st: DiscreteSpacetime):
    for s in (0, plan.times.size - 1):
        charged = plan.slice(s, st.n) > 0
        if np.any(st.m[charged] <= 0):
            raise DensityUndefined("plan endpoint charges an m-null event")


def _check_N(N: float):
    if not N > 1:
        raise ValueError("N must exceed 1")


def check_tcde(plan: Plan, st: DiscreteSpacetime, k=None, N: float = 2.0, stamps=None,
               tol: float = DEFAULT_TOL, steps: int = DEFAULT_STEPS) -> TCDReport:
    """U_N(μ_t) ≥ σ_{k⁻/N}^(1−t)(c) U_N(μ_0) + σ_{k⁺/N}^(t)(c) U_N(μ_1) at each stamp."""
    _check_N(N)
    _require_regular_endpoints(plan, st)
    k = st.k if k is None else np.asarray(k, dtype=float)
    kp = potential_along_plan(plan, k, "forward").scaled(1.0 / N)
    km = kp.reversed()
    idx = _stamp_indices(plan.times, stamps)
    last = plan.times.size - 1
    u0 = _u(_entropy(plan.slice(0, st.n), st.m), N)
    u1 = _u(_entropy(plan.slice(last, st.n), st.m), N)
    flags: list = []
    lhs, rhs = [], []
    for s in idx:
        t = float(plan.times[s])
        ut = _u(_entropy(plan.slice(s, st.n), st.m), N)
        r = (_weighted(sigma(km, 1.0 - t, steps), u0, flags, f"t={t:g}")
             + _weighted(sigma(kp, t, steps), u1, flags, f"t={t:g}"))
        lhs.append(ut)
        rhs.append(r)
    lhs, rhs = np.array(lhs), np.array(rhs)
    return TCDReport("tcde", plan.times[idx], lhs, rhs, lhs - rhs, tol, sorted(set(flags)))


def check_pathwise(plan: Plan, st: DiscreteSpacetime, k=None, N: float = 2.0, stamps=None,
                   tol: float = DEFAULT_TOL, steps: int = DEFAULT_STEPS) -> TCDReport:
    """ρ_t(γ_t)^(−1/N) ≥ σ_{k_γ⁻/N}^(1−t) ρ_0(γ_0)^(−1/N) + σ_{k_γ⁺/N}^(t) ρ_1(γ_1)^(−1/N) per atom."""
    _check_N(N)
    k = st.k if k is None else np.asarray(k, dtype=float)
    idx = _stamp_indices(plan.times, stamps)
    last = plan.times.size - 1
    dens = {}
    for s in set(idx.tolist()) | {0, last}:
        w = plan.slice(s, st.n)
        charged = w > 0
        if np.any(st.m[charged] <= 0):
            raise DensityUndefined(f"interpolant at t={plan.times[s]:g} charges an m-null event")
        rho = np.zeros(st.n)
        rho[charged] = w[charged] / st.m[charged]
        dens[s] = rho
    cache: dict = {}
    flags: list = []
    A = plan.n_atoms
    lhs = np.zeros((A, idx.size))
    rhs = np.zeros((A, idx.size))
    for a in range(A):
        chain = plan.chains[a]
        L = float(plan.lengths[a])
        key = (L, k[chain].tobytes())
        if key not in cache:
            p = _uniform_potential(L, plan.times * L, k[chain], 1e-9, None).scaled(1.0 / N)
            cache[key] = (p, p.reversed())
        kp, km = cache[key]
        r0 = dens[0][chain[0]] ** (-1.0 / N)
        r1 = dens[last][chain[-1]] ** (-1.0 / N)
        for c, s in enumerate(idx):
            t = float(plan.times[s])
            lhs[a, c] = dens[s][chain[s]] ** (-1.0 / N)
            rhs[a, c] = (_weighted(sigma(km, 1.0 - t, steps), r0, flags, f"atom={a},t={t:g}")
                         + _weighted(sigma(kp, t, steps), r1, flags, f"atom={a},t={t:g}"))
    return TCDReport("pathwise", plan.times[idx], lhs, rhs, lhs - rhs, tol, sorted(set(flags)))


def green(s, t):
    """Green's function min{s(1−t), t(1−s)} of −d²/ds² on [0, 1]."""
    s = np.asarray(s, dtype=float)
    return np.minimum(s * (1.0 - t), t * (1.0 - s))


def check_tcd_infty(plan: Plan, st: DiscreteSpacetime, k=None, stamps=None,
                    tol: float = DEFAULT_TOL) -> TCDReport:
    """Ent(μ_t) ≤ (1−t)Ent(μ_0) + t Ent(μ_1) − ∫∫ g(s,t) k(γ_s)|γ̇|² dπ ds.

    The s-integral uses the trapezoid rule on the plan's stamps. It is exact
    whenever k along the atoms is affine between stamps, because g(·, t) has
    its kink at a stamp.
    """
    _require_regular_endpoints(plan, st)
    k = st.k if k is None else np.asarray(k, dtype=float)
    idx = _stamp_indices(plan.times, stamps)
    last = plan.times.size - 1
    times = plan.times
    e0 = _entropy(plan.slice(0, st.n), st.m)
    e1 = _entropy(plan.slice(last, st.n), st.m)
    weighted_k = (plan.weights * plan.lengths ** 2) @ k[plan.chains]  # Σ w |γ̇|² k(γ_s) per stamp
    lhs, rhs = [], []
    flags = []
    for s in idx:
        t = float(times[s])
        integral = float(np.trapezoid(green(times, t) * weighted_k, times))
        et = _entropy(plan.slice(s, st.n), st.m)
        if math.isinf(et):
            flags.append(f"infinite-entropy:t={t:g}")
        lhs.append(et)
        rhs.append((1.0 - t) * e0 + t * e1 - integral)
    lhs, rhs = np.array(lhs), np.array(rhs)
    with np.errstate(invalid="ignore"):
        margins = np.where(np.isinf(lhs) & np.isinf(rhs), 0.0, rhs - lhs)
    return TCDReport("tcd-infty", times[idx], lhs, rhs, margins, tol, flags)


def tmcp_plan(mu0: Measure, x1: int, st: DiscreteSpacetime, steps: int = 10, tol: float = 1e-6) -> Plan:
    """Plan lifting μ0 ⊗ δ_{x1} to discrete geodesics at stamps s/steps."""
    x1 = st.check_index(x1)
    src = mu0.support
    if np.any(st.l[src, x1] <= 0):
        raise NotInChronologicalFuture(f"event {x1} is not in the chronological future of supp μ0")
    times = np.linspace(0.0, 1.0, steps + 1)
    chains = [_geodesic_chain(st, int(x), x1, times, tol) for x in src]
    return Plan.from_chains(st, times, chains, mu0.weights[src])


def check_tmcp(mu0: Measure, x1: int, st: DiscreteSpacetime, k=None, N: float = 2.0, steps: int = 10,
               direction: str = "future", stamps=None, tol: float = DEFAULT_TOL,
               geodesic_tol: float = 1e-6, ode_steps: int = DEFAULT_STEPS) -> TCDReport:
    """U_N(μ_t) ≥ σ_{k_π⁻/N}^(1−t)(c_π) U_N(μ_0) along the contraction of μ0 to x1.

    ``direction='past'`` runs the same check on the causal reversal.
    """
    _check_N(N)
    if direction not in ("future", "past"):
        raise ValueError("direction must be 'future' or 'past'")
    if direction == "past":
        st = st.reversed()
    charged = mu0.weights > 0
    if np.any(st.m[charged] <= 0):
        raise DensityUndefined("μ0 charges an m-null event")
    k = st.k if k is None else np.asarray(k, dtype=float)
    plan = tmcp_plan(mu0, x1, st, steps, geodesic_tol)
    km = potential_along_plan(plan, k, "backward").scaled(1.0 / N)
    u0 = _u(_entropy(plan.slice(0, st.n), st.m), N)
    idx = _stamp_indices(plan.times, stamps)
    flags: list = []
    lhs, rhs = [], []
    for s in idx:
        t = float(plan.times[s])
        lhs.append(_u(_entropy(plan.slice(s, st.n), st.m), N))
        rhs.append(_weighted(sigma(km, 1.0 - t, ode_steps), u0, flags, f"t={t:g}"))
    lhs, rhs = np.array(lhs), np.array(rhs)
    return TCDReport(f"tmcp-{direction}", plan.times[idx], lhs, rhs, lhs - rhs, tol, sorted(set(flags)))
