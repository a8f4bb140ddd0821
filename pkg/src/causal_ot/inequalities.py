"""Geometric inequalities and incompleteness thresholds on discrete spacetimes.

Each check evaluates both sides for the given sample. A failed verdict is a
discrete witness against the curvature hypothesis on that sample. It is not a
statement about any continuum space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._json import jsonable, number
from .distortion import (DEFAULT_STEPS, INFINITY_THRESHOLD, Potential, _uniform_potential, generalized_sin,
                         sigma, sin_profile, solve_batch, tau)
from .errors import (EmptyGeodesicFamily, NotStarShaped, VacuousCriterion)
from .localization import RayDecomposition, _clipped, rays_through
from .spacetime import DiscreteSpacetime

GEODESIC_TOL = 1e-9  # relative saturation tolerance for reconstructed geodesics
MAX_WITNESSES = 20


@dataclass
class InequalityReport:
    name: str
    inputs: dict
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    details: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return self.margin >= -self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "inputs": jsonable(self.inputs), "lhs": number(self.lhs),
                "rhs": number(self.rhs), "margin": number(self.margin), "tolerance": self.tolerance,
                "verdict": self.verdict, "details": jsonable(self.details), "flags": list(self.flags)}


def _margin(lhs: float, rhs: float) -> float:
    """lhs − rhs for an inequality lhs ≥ rhs, with an infinite rhs losing."""
    if math.isinf(rhs) and rhs > 0:
        return math.inf if math.isinf(lhs) and lhs > 0 else -math.inf
    return lhs - rhs


def _check_N(N: float):
    if not N > 1:
        raise ValueError("N must exceed 1")


# --- geodesics between pairs ---------------------------------------------------


def _saturating_chain(st: DiscreteSpacetime, i: int, j: int, tol: float) -> np.ndarray:
    """A discrete geodesic from i to j through every saturating event it can keep.

    Candidates z satisfy l(i,z) + l(z,j) = l(i,j) within tol·l(i,j). They are
    visited in order of l(i,z) (ties by index) and kept while each step still
    saturates the reverse triangle inequality.
    """
    lij = st.l[i, j]
    a, b = st.l[i], st.l[:, j]
    cand = np.flatnonzero((a >= 0) & (b >= 0) & (np.abs(a + b - lij) <= tol * lij))
    cand = cand[np.lexsort((cand, a[cand]))]
    steps = st.l[cand[:-1], cand[1:]]
    if np.all(np.abs(steps - np.diff(a[cand])) <= tol * lij):
        return cand
    chain = [int(cand[0])]
    for z in cand[1:]:
        step = st.l[chain[-1], z]
        if step >= 0 and abs(a[chain[-1]] + step - a[z]) <= tol * lij:
            chain.append(int(z))
    return np.array(chain)


def _profile(st: DiscreteSpacetime, k: np.ndarray, i: int, j: int, tol: float) -> Potential:
    theta = float(st.l[i, j])
    chain = _saturating_chain(st, i, j, tol)
    return _uniform_potential(theta, st.l[i, chain], k[chain], tol, None)


# --- Brunn–Minkowski ---------------------------------------------------------


def intermediate_set(st: DiscreteSpacetime, pairs: np.ndarray, t: float, tol: float = GEODESIC_TOL,
                     chunk: int = 2048) -> np.ndarray:
    """Union over chronological pairs (x, y) of events z with l(x,z) = t·l and l(z,y) = (1−t)·l."""
    hit = np.zeros(st.n, dtype=bool)
    for lo in range(0, len(pairs), chunk):
        x, y = pairs[lo:lo + chunk, 0], pairs[lo:lo + chunk, 1]
        lxy = st.l[x, y][:, None]
        ok = ((np.abs(st.l[x] - t * lxy) <= tol * lxy)
              & (np.abs(st.l[:, y].T - (1.0 - t) * lxy) <= tol * lxy))
        hit |= ok.any(axis=0)
    return np.flatnonzero(hit)


def brunn_minkowski(st: DiscreteSpacetime, A0: Sequence[int], A1: Sequence[int], t: float, k=None,
                    N: float = 2.0, sharp: bool = False, tol: float = 1e-9,
                    geodesic_tol: float = GEODESIC_TOL, steps: int = DEFAULT_STEPS) -> InequalityReport:
    """m[A_t]^(1/N) ≥ inf c⁻ m[A0]^(1/N) + inf c⁺ m[A1]^(1/N).

    The coefficients are σ_{k_γ^∓/N} or, with ``sharp``, τ_{k_γ^∓,N}. Infima
    run over one reconstructed geodesic per chronological pair of A0 × A1.
    """
    _check_N(N)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    A0, A1 = st.check_indices(A0), st.check_indices(A1)
    m0, m1 = float(st.m[A0].sum()), float(st.m[A1].sum())
    if not (m0 > 0 and m1 > 0):
        raise ValueError("both sets need positive m-measure")
    k = st.k if k is None else np.asarray(k, dtype=float)
    block = st.l[np.ix_(A0, A1)]
    a, b = np.nonzero(block > 0)
    if a.size == 0:
        raise EmptyGeodesicFamily("no chronological pair joins the two sets")
    pairs = np.stack([A0[a], A1[b]], axis=1)
    flags = []
    if a.size < block.size:
        flags.append(f"non-chronological-pairs:{block.size - a.size}")
    constant = bool(np.ptp(k) == 0)
    if constant:  # the coefficient depends on l(x, y) alone
        profiles = [Potential.constant(float(k[0]), th) for th in np.unique(st.l[pairs[:, 0], pairs[:, 1]])]
    else:
        profiles = [_profile(st, k, int(x), int(y), geodesic_tol) for x, y in pairs]
    cache: dict = {}
    inf_minus, inf_plus = math.inf, math.inf
    for p in profiles:
        p = p.rescaled()  # σ_κ(θ) = σ_{κθ²}(1), so equal rescaled profiles share one solve
        key = p.values.tobytes()
        if key in cache:
            continue
        pm = p.reversed()
        if sharp:
            cache[key] = (tau(pm, 1.0 - t, N, steps), tau(p, t, N, steps))
        else:
            cache[key] = (sigma(pm.scaled(1.0 / N), 1.0 - t, steps), sigma(p.scaled(1.0 / N), t, steps))
        inf_minus, inf_plus = min(inf_minus, cache[key][0]), min(inf_plus, cache[key][1])
    At = intermediate_set(st, pairs, t, geodesic_tol)
    mt = float(st.m[At].sum())
    lhs = mt ** (1.0 / N)
    rhs = _weighted_sum(inf_minus, m0 ** (1.0 / N)) + _weighted_sum(inf_plus, m1 ** (1.0 / N))
    if math.isinf(rhs):
        flags.append("infinite-coefficient")
    details = {"m_At": mt, "m_A0": m0, "m_A1": m1, "At_size": int(At.size), "family_size": int(len(pairs)),
               "coefficient_minus": inf_minus, "coefficient_plus": inf_plus, "sharp": sharp}
    inputs = {"A0": A0, "A1": A1, "t": t, "N": N, "sharp": sharp}
    return InequalityReport("brunn-minkowski-sharp" if sharp else "brunn-minkowski", inputs, lhs, rhs,
                            _margin(lhs, rhs), tol, details, flags)


def _weighted_sum(coef: float, mass_root: float) -> float:
    if math.isinf(coef):
        return 0.0 if mass_root == 0 else math.inf
    return coef * mass_root


# --- Bonnet–Myers ------------------------------------------------------------


def bonnet_myers_diameter(st: DiscreteSpacetime, k=None, N: float = 2.0, steps: int = 512,
                          geodesic_tol: float = GEODESIC_TOL, chunk: int = 512) -> InequalityReport:
    """l-diameter of supp m against geodesics whose σ_{k/(N−1)} coefficient is Infinite.

    Any chronological pair in supp m whose reconstructed geodesic drives
    sin_{k_γ/(N−1)} to zero on (0, θ] is a witness. Pairs settled by
    comparison with the extreme values of k skip the ODE solve. lhs is the
    largest l over pairs without a witness, rhs the l-diameter. The margin is
    0 without witnesses and −inf otherwise.
    """
    _check_N(N)
    k = st.k if k is None else np.asarray(k, dtype=float)
    supp = np.flatnonzero(st.m > 0)
    block = st.l[np.ix_(supp, supp)]
    finite = block[np.isfinite(block)]
    diam = float(finite.max()) if finite.size else 0.0
    a, b = np.nonzero(block > 0)
    x, y = supp[a], supp[b]
    theta = st.l[x, y]
    kap = k / (N - 1.0)
    kmin, kmax = float(kap[supp].min()), float(kap[supp].max())
    # Sturm comparison: no zero below π/√κmax, a zero by π/√κmin.
    safe_len = math.pi / math.sqrt(kmax) if kmax > 0 else math.inf
    doomed_len = math.pi / math.sqrt(kmin) if kmin > 0 else math.inf
    witness = theta >= doomed_len * (1.0 - 1e-12)
    open_ = ~witness & (theta >= safe_len)
    idx = np.flatnonzero(open_)
    grid = 2 * steps + 1
    for lo in range(0, idx.size, chunk):
        sel = idx[lo:lo + chunk]
        vals = np.empty((sel.size, grid))
        for c, e in enumerate(sel):
            chain = _saturating_chain(st, int(x[e]), int(y[e]), geodesic_tol)
            stamps = st.l[x[e], chain]
            vals[c] = np.interp(np.linspace(0.0, theta[e], grid), stamps, kap[chain])
        f, _ = solve_batch(vals, theta[sel], steps)
        witness[sel] = np.min(f[:, 1:], axis=1) < INFINITY_THRESHOLD * theta[sel]
    effective = float(theta[~witness].max()) if np.any(~witness) else 0.0
    order = np.argsort(-theta[witness], kind="stable")[:MAX_WITNESSES]
    wit = [(int(p), int(q), float(L)) for p, q, L in
           zip(x[witness][order], y[witness][order], theta[witness][order])]
    n_wit = int(witness.sum())
    details = {"diameter": diam, "effective_diameter": effective, "n_pairs": int(theta.size),
               "n_solved": int(idx.size), "n_witnesses": n_wit, "witnesses": wit,
               "zero_bound": doomed_len if math.isfinite(doomed_len) else None}
    flags = [f"infinite-coefficient:{p}-{q}" for p, q, _ in wit]
    return InequalityReport("bonnet-myers", {"N": N}, effective, diam, -math.inf if n_wit else 0.0,
                            0.0, details, flags)


# --- Schneider ---------------------------------------------------------------


def schneider(R: float, beta: float, direction: str = "future") -> float:
    """Diameter bound R·e^(π/β); the same in both time directions."""
    if not (R > 0 and beta > 0):
        raise ValueError("R and β must be positive")
    if direction not in ("future", "past"):
        raise ValueError("direction must be 'future' or 'past'")
    return R * math.exp(math.pi / beta)


def _distances_from(st: DiscreteSpacetime, o: int, direction: str) -> np.ndarray:
    if direction not in ("future", "past"):
        raise ValueError("direction must be 'future' or 'past'")
    o = st.check_index(o)
    return st.l[o] if direction == "future" else st.l[:, o]


def schneider_hypothesis(st: DiscreteSpacetime, o: int, R: float, beta: float, N: float, k=None,
                         direction: str = "future") -> bool:
    """k ≥ (N−1)(1/4 + β²) d^−2 wherever d = l(o,·) (or l(·,o)) exceeds R."""
    _check_N(N)
    if not (R > 0 and beta > 0):
        raise ValueError("R and β must be positive")
    k = st.k if k is None else np.asarray(k, dtype=float)
    d = _distances_from(st, o, direction)
    shell = d > R
    need = (N - 1.0) * (0.25 + beta ** 2) / d[shell] ** 2
    return bool(np.all(k[shell] >= need))


def schneider_check(st: DiscreteSpacetime, o: int, R: float, beta: float, N: float, k=None,
                    direction: str = "future", tol: float = 1e-9) -> InequalityReport:
    """Diameter of I^±(o) against R·e^(π/β). The margin is bound − diameter."""
    bound = schneider(R, beta, direction)
    d = _distances_from(st, o, direction)
    cone = np.flatnonzero(d > 0)
    block = st.l[np.ix_(cone, cone)]
    finite = block[np.isfinite(block)]
    diam = float(finite.max()) if finite.size else 0.0
    holds = schneider_hypothesis(st, o, R, beta, N, k, direction)
    details = {"hypothesis": holds, "bound": bound, "diameter": diam, "cone_size": int(cone.size)}
    flags = [] if holds else ["hypothesis-fails"]
    margin = bound - diam
    if not holds:
        margin = max(margin, 0.0)  # the bound is only asserted under the hypothesis
    inputs = {"o": int(o), "R": R, "beta": beta, "N": N, "direction": direction}
    return InequalityReport("schneider", inputs, diam, bound, margin, tol, details, flags)


def sin_kappa_zeros(p: Potential, count: int = 1, steps: int = DEFAULT_STEPS, xtol: float = 1e-10) -> list[float]:
    """Zeros of sin_κ on (0, θ], by a sign scan of the nodes and bisection."""
    nodes, f = sin_profile(p, steps)
    out: list[float] = []
    for j in range(1, nodes.size):
        if len(out) >= count:
            break
        if f[j] == 0.0:
            out.append(float(nodes[j]))
        elif f[j - 1] != 0.0 and f[j - 1] * f[j] < 0:
            lo, hi = float(nodes[j - 1]), float(nodes[j])
            flo = float(f[j - 1])
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                fm = generalized_sin(p, mid, steps)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
    return out


# --- Bishop–Gromov -----------------------------------------------------------


@dataclass
class VolumeProfile:
    radii: np.ndarray  # bin edges
    v: np.ndarray  # m of {l(x,·) ≤ r} ∩ E at each edge
    s: np.ndarray  # shell mass per unit width on [r, r + w); NaN at the last edge
    model_integral: np.ndarray  # ∫₀^r sin^(N−1) of the envelope potential

    def rows(self) -> list[tuple[float, float, float, float]]:
        return [(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(self.radii, self.v, self.s, self.model_integral)]


def check_star_shaped(st: DiscreteSpacetime, x: int, E: Sequence[int], tol: float = GEODESIC_TOL,
                      chunk: int = 512) -> None:
    """Raise NotStarShaped unless E ⊂ I⁺(x) ∪ {x} and geodesics from x into E stay in E."""
    x = st.check_index(x)
    E = st.check_indices(E)
    inE = np.zeros(st.n, dtype=bool)
    inE[E] = True
    for y in E:
        if y != x and not st.l[x, y] > 0:
            raise NotStarShaped(f"event {y} is not in the chronological future of {x}", (int(x), int(y)))
    targets = E[E != x]
    lx = st.l[x]
    for lo in range(0, targets.size, chunk):
        ys = targets[lo:lo + chunk]
        lxy = lx[ys][:, None]
        lzy = st.l[:, ys].T
        on = (lx[None, :] >= 0) & (lzy >= 0) & (np.abs(lx[None, :] + lzy - lxy) <= tol * lxy)
        bad = on & ~inE[None, :]
        if bad.any():
            r, z = np.argwhere(bad)[0]
            raise NotStarShaped(f"geodesic from {x} to {ys[r]} passes through {z} outside E",
                                (int(x), int(z), int(ys[r])))


def _envelope(d: np.ndarray, kv: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Minimum of k over each l-bin; empty bins take the smaller neighbouring minimum."""
    nb = edges.size - 1
    which = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, nb - 1)
    env = np.full(nb, np.inf)
    np.minimum.at(env, which, kv)
    filled = np.isfinite(env)
    if not filled.any():
        return np.zeros(nb)
    pos = np.flatnonzero(filled)
    for b in np.flatnonzero(~filled):
        left = pos[pos < b]
        right = pos[pos > b]
        cands = [env[left[-1]]] if left.size else []
        cands += [env[right[0]]] if right.size else []
        env[b] = min(cands)
    return env


def _envelope_sine(env: np.ndarray, edges: np.ndarray, N: float, steps: int):
    """Nodes, sin_κ and ∫₀ sin_κ^(N−1) for κ = envelope/(N−1) on [0, last edge].

    sin_κ is clamped to 0 after its first zero.
    """
    length = float(edges[-1])
    grid = np.linspace(0.0, length, 2 * steps + 1)
    which = np.clip(np.searchsorted(edges, grid, side="right") - 1, 0, env.size - 1)
    nodes, f = sin_profile(Potential(length, env[which] / (N - 1.0)), steps)
    nonpos = np.flatnonzero(f[1:] <= 0)
    if nonpos.size:
        f[nonpos[0] + 1:] = 0.0
    g = f ** (N - 1.0)
    cum = np.r_[0.0, np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(nodes))]
    return nodes, f, cum


def volume_profile(st: DiscreteSpacetime, x: int, E: Sequence[int], k=None, N: float = 2.0,
                   bin_width: float | None = None, steps: int = DEFAULT_STEPS) -> VolumeProfile:
    _check_N(N)
    x = st.check_index(x)
    E = st.check_indices(E)
    k = st.k if k is None else np.asarray(k, dtype=float)
    d = np.where(E == x, 0.0, st.l[x, E])
    Rx = float(d.max())
    if not Rx > 0:
        raise ValueError("E has no event in the chronological future of x")
    if bin_width is None:
        bin_width = Rx / max(8, int(math.ceil(math.sqrt(E.size))))
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    nb = max(1, int(math.ceil(Rx / bin_width - 1e-12)))
    edges = np.arange(nb + 1) * bin_width
    mE = st.m[E]
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(mE[order])
    counts = np.searchsorted(d[order], edges * (1 + 1e-12) + 1e-300, side="right")
    v = np.where(counts > 0, cum[np.maximum(counts - 1, 0)], 0.0)
    which = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, nb - 1)
    shell = np.bincount(which, mE, minlength=nb) / bin_width
    s = np.r_[shell, np.nan]
    nodes, _, cum = _envelope_sine(_envelope(d, k[E], edges), edges, N, steps)
    return VolumeProfile(edges, v, s, np.interp(edges, nodes, cum))


def bishop_gromov(st: DiscreteSpacetime, x: int, E: Sequence[int], r: float, R: float, k=None,
                  N: float = 2.0, bin_width: float | None = None, tol: float = 1e-9,
                  steps: int = DEFAULT_STEPS, geodesic_tol: float = GEODESIC_TOL) -> tuple[InequalityReport, VolumeProfile]:
    """v(r)/v(R) ≥ ∫₀^r sin^(N−1) / ∫₀^R sin^(N−1) for the envelope potential k̲_x/(N−1).

    v counts m over the closed ball l(x,·) ≤ r inside E. The shell ratio
    s(r)/s(R) against sin^(N−1)(r)/sin^(N−1)(R) is reported in ``details``.
    """
    _check_N(N)
    check_star_shaped(st, x, E, geodesic_tol)
    E = st.check_indices(E)
    x = int(x)
    d = np.where(E == x, 0.0, st.l[x, E])
    Rx = float(d.max())
    if not 0 < r < R <= Rx * (1 + 1e-12):
        raise ValueError(f"radii must satisfy 0 < r < R ≤ {Rx:g}")
    prof = volume_profile(st, x, E, k, N, bin_width, steps)
    mE = st.m[E]
    v_r = float(mE[d <= r * (1 + 1e-12)].sum())
    v_R = float(mE[d <= R * (1 + 1e-12)].sum())
    if not v_R > 0:
        raise ValueError("the ball of radius R carries no mass")
    edges = prof.radii
    kE = (st.k if k is None else np.asarray(k, dtype=float))[E]
    nodes, f, cum = _envelope_sine(_envelope(d, kE, edges), edges, N, steps)
    I_r, I_R = np.interp([r, R], nodes, cum)
    lhs = v_r / v_R
    flags = []
    if I_R > 0:
        rhs = float(I_r / I_R)
    else:
        rhs = 1.0
        flags.append("degenerate-model-integral")
    w = float(edges[1] - edges[0])
    br = min(int(r // w), edges.size - 2)
    bR = min(int(R // w), edges.size - 2)
    s_ratio = prof.s[br] / prof.s[bR] if prof.s[bR] > 0 else math.inf
    sin_r, sin_R = np.interp([r, R], nodes, f) ** (N - 1.0)
    s_model = float(sin_r / sin_R) if sin_R > 0 else math.inf
    details = {"v_r": v_r, "v_R": v_R, "model_r": float(I_r), "model_R": float(I_R), "R_x": Rx,
               "bin_width": w, "shell_ratio": s_ratio, "shell_model_ratio": s_model,
               "shell_margin": _margin(s_ratio, s_model)}
    inputs = {"x": x, "r": r, "R": R, "N": N}
    return InequalityReport("bishop-gromov", inputs, lhs, rhs, _margin(lhs, rhs), tol, details, flags), prof


# --- Hawking-type threshold --------------------------------------------------


def _hawking_constant(K: float, N: float, T: float, delta: float) -> float:
    """[sinh(aδ)/sinh(a(T+δ))]^(N−1), a = sqrt(−K/(N−1)); K = 0 gives the limit (δ/(T+δ))^(N−1)."""
    if K >= 0:
        return (delta / (T + delta)) ** (N - 1.0)
    a = math.sqrt(-K / (N - 1.0))
    # sinh ratio via exponentials stays finite for large a(T + δ)
    ratio = math.exp(-a * T) * (-math.expm1(-2 * a * delta)) / (-math.expm1(-2 * a * (T + delta)))
    return ratio ** (N - 1.0)


def hawking_threshold(K: float, N: float, T: float, delta: float, beta: float) -> float:
    """[sinh(aδ)/sinh(a(T+δ))]^(N−1) (β − (N−1)/T) with a = sqrt(−K/(N−1))."""
    _check_N(N)
    if not K < 0:
        raise ValueError("K must be negative")
    if not (T > 0 and delta > 0 and beta > 0):
        raise ValueError("T, δ and β must be positive")
    gap = beta - (N - 1.0) / T
    if gap <= 0:
        raise VacuousCriterion(f"β = {beta:g} ≤ (N−1)/T = {(N - 1.0) / T:g}; the criterion is vacuous")
    return _hawking_constant(K, N, T, delta) * gap


def hawking_check(st: DiscreteSpacetime, dec: RayDecomposition, V: Sequence[int], k=None, T: float = 1.0,
                  delta: float = 1.0, beta: float = 1.0, N: float = 2.0, K: float | None = None,
                  tol: float = 1e-9) -> InequalityReport:
    """Integral curvature criterion along the rays that start in V.

    lhs = 𝔥₀[V]⁻¹ ∫_{V^{0,T}} k₋ dm, computed ray by ray over parameters in
    [0, T]; rhs is the threshold with K = min k over those rays (unless given).
    When K ≥ 0 the constant takes its K → 0 limit. The report checks the
    implication "lhs < rhs ⟹ some ray from V has reach < T + δ". Its margin
    is max(lhs − rhs, T + δ − shortest reach).
    """
    _check_N(N)
    if not (T > 0 and delta > 0 and beta > 0):
        raise ValueError("T, δ and β must be positive")
    gap = beta - (N - 1.0) / T
    if gap <= 0:
        raise VacuousCriterion(f"β = {beta:g} ≤ (N−1)/T = {(N - 1.0) / T:g}; the criterion is vacuous")
    if dec.q is None:
        raise ValueError("decomposition has no densities; run disintegrate first")
    k = st.k if k is None else np.asarray(k, dtype=float)
    alphas = rays_through(dec, V)
    kneg = np.maximum(-k, 0.0)
    foot, integral = 0.0, 0.0
    kmin = math.inf
    reaches = []
    for a in alphas:
        r = dec.rays[a]
        w = _clipped(r, T)
        integral += float(dec.q[a] * np.sum(kneg[r.nodes] * dec.h[a] * w))
        foot += float(dec.q[a] * dec.h[a][0])
        kmin = min(kmin, float(np.min(k[r.nodes])))
        reaches.append(r.length)
    if not foot > 0:
        raise ValueError("the rays through V carry no footpoint mass")
    K_used = min(kmin, 0.0) if K is None else float(K)
    if K is not None and kmin < K:
        raise ValueError(f"k drops to {kmin:g} below the stated bound K = {K:g}")
    rhs = _hawking_constant(K_used, N, T, delta) * gap
    lhs = integral / foot
    shortest = float(min(reaches))
    hypothesis = lhs < rhs
    conclusion = shortest < T + delta
    margin = max(lhs - rhs, T + delta - shortest)
    details = {"hypothesis": hypothesis, "conclusion": conclusion, "footpoint_mass": foot,
               "k_minus_integral": integral, "K": K_used, "shortest_reach": shortest,
               "n_rays": len(alphas), "reaches": reaches}
    inputs = {"V": V, "T": T, "delta": delta, "beta": beta, "N": N}
    return InequalityReport("hawking", inputs, lhs, rhs, margin, tol, details)
