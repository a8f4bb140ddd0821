"""Generalized sine functions and distortion coefficients.

sin_κ solves f'' + κ f = 0, f(0) = 0, f'(0) = 1 on [0, θ]. It is integrated
with classical RK4 at a fixed step θ/steps. Because the equation is linear,
each RK4 step is a 2×2 transfer matrix, and the solution at every node is a
prefix product of those matrices. Single solves form the products with a
logarithmic scan. Large batches of potentials step through the nodes together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NotAGeodesic, ZeroCostPlan

DEFAULT_STEPS = 4096
INFINITY_THRESHOLD = 1e-12  # relative to θ


@dataclass(frozen=True, eq=False)
class Potential:
    """Curvature profile κ on [0, length].

    ``values`` holds samples on a uniform grid over [0, length]; a single value
    means κ is constant. Between grid nodes κ is linearly interpolated.
    """

    length: float
    values: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("potential values must be a nonempty 1D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        if self.length < 0 or not math.isfinite(self.length):
            raise ValueError("potential length must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, length: float) -> "Potential":
        return cls(length, np.array([float(value)]))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], length: float,
                      grid: int = 2 * DEFAULT_STEPS + 1) -> "Potential":
        # 2*steps+1 nodes put every RK4 stage point on a grid node.
        r = np.linspace(0.0, length, grid)
        return cls(length, np.asarray(f(r), dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.values.size == 1

    @property
    def grid(self) -> np.ndarray:
        if self.is_constant:
            return np.array([0.0, self.length])
        return np.linspace(0.0, self.length, self.values.size)

    def at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.is_constant:
            return np.full(r.shape, self.values[0])
        if self.length == 0:
            return np.full(r.shape, self.values[0])
        return np.interp(r, self.grid, self.values)

    def scaled(self, c: float) -> "Potential":
        return Potential(self.length, self.values * c)

    def reversed(self) -> "Potential":
        return Potential(self.length, self.values[::-1])

    def rescaled(self) -> "Potential":
        """The unit-length potential κ(·θ)θ² with the same distortion values."""
        return Potential(1.0, self.values * self.length ** 2)

    def __le__(self, other: "Potential") -> bool:
        r = np.union1d(self.grid, other.grid)
        return bool(np.all(self.at(r) <= other.at(r)))


# --- RK4 transfer matrices ---------------------------------------------------


def _step_matrices(k0, km, k1, h):
    """Entries (a, b, c, d) of the RK4 transfer matrix for f'' = -κ f.

    k0, km, k1 are κ at the start, midpoint and end of the step. The entries
    are the RK4 stages multiplied out.
    """
    h2 = h * h
    a = 1.0 - h2 * (k0 / 6.0 + km / 3.0) + h2 * h2 * k0 * km / 24.0
    b = h - h2 * h * km / 6.0
    c = h2 * h * km * (k0 + k1) / 12.0 - h * (k0 + k1 + 4.0 * km) / 6.0
    d = 1.0 - h2 * (k1 / 6.0 + km / 3.0) + h2 * h2 * k1 * km / 24.0
    return a, b, c, d


def _prefix_products(M: np.ndarray) -> np.ndarray:
    """P[..., k] = M[..., k] @ ... @ M[..., 0] via a Hillis-Steele scan."""
    P = M.copy()
    S = P.shape[-3]
    d = 1
    while d < S:
        nxt = P.copy()
        nxt[..., d:, :, :] = P[..., d:, :, :] @ P[..., :-d, :, :]
        P = nxt
        d *= 2
    return P


def _stage_kappas(grid_values: np.ndarray, lengths: np.ndarray, steps: int):
    """κ at RK4 stage points for a batch of potentials sharing a grid size.

    ``grid_values`` has shape (P, G); returns three arrays of shape (P, steps).
    """
    P, G = grid_values.shape
    u = np.linspace(0.0, 1.0, 2 * steps + 1)
    if G == 1:
        st = np.repeat(grid_values, 2 * steps + 1, axis=1)
    elif G == 2 * steps + 1:
        st = grid_values
    else:
        pos = u * (G - 1)
        lo = np.minimum(np.floor(pos).astype(int), G - 2)
        frac = pos - lo
        st = grid_values[:, lo] * (1.0 - frac) + grid_values[:, lo + 1] * frac
    return st[:, 0:-1:2], st[:, 1::2], st[:, 2::2]


def solve_batch(grid_values: np.ndarray, lengths: np.ndarray, steps: int = DEFAULT_STEPS):
    """Integrate sin_κ for several potentials at once.

    Returns (f, fp) of shape (P, steps + 1): the solution and its derivative at
    the nodes j·θ/steps. Small batches use a prefix scan over the transfer
    matrices; large batches step through the nodes directly.
    """
    grid_values = np.atleast_2d(np.asarray(grid_values, dtype=float))
    lengths = np.asarray(lengths, dtype=float).reshape(-1)
    k0, km, k1 = _stage_kappas(grid_values, lengths, steps)
    h = (lengths / steps)[:, None]
    a, b, c, d = _step_matrices(k0, km, k1, h)
    P = grid_values.shape[0]
    f = np.empty((P, steps + 1))
    fp = np.empty((P, steps + 1))
    f[:, 0], fp[:, 0] = 0.0, 1.0
    if P * 8 < steps:
        M = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
        Pm = _prefix_products(M)
        f[:, 1:] = Pm[..., 0, 1]
        fp[:, 1:] = Pm[..., 1, 1]
        return f, fp
    a, b, c, d = (np.ascontiguousarray(np.broadcast_to(x, k0.shape).T) for x in (a, b, c, d))
    y, yp = f[:, 0].copy(), fp[:, 0].copy()
    for j in range(steps):
        y, yp = a[j] * y + b[j] * yp, c[j] * y + d[j] * yp
        f[:, j + 1] = y
        fp[:, j + 1] = yp
    return f, fp


def _solution(p: Potential, steps: int):
    key = ("sol", steps)
    if key not in p._cache:
        if p.length == 0:
            p._cache[key] = (np.zeros(steps + 1), np.ones(steps + 1))
        else:
            f, fp = solve_batch(p.values[None, :], np.array([p.length]), steps)
            p._cache[key] = (f[0], fp[0])
    return p._cache[key]


def _eval(p: Potential, s: float, steps: int) -> float:
    f, fp = _solution(p, steps)
    if p.length == 0:
        return 0.0
    h = p.length / steps
    j = min(int(math.floor(s / h)), steps)
    delta = s - j * h
    if delta <= 0 or j == steps:
        return float(f[j])
    s0 = j * h
    k0, km, k1 = p.at(np.array([s0, s0 + 0.5 * delta, s0 + delta]))
    a, b, _, _ = _step_matrices(k0, km, k1, delta)
    return float(a * f[j] + b * fp[j])


def generalized_sin(p: Potential, s: float, steps: int = DEFAULT_STEPS) -> float:
    """sin_κ(s) for s in [0, θ]."""
    if not -1e-12 * max(1.0, p.length) <= s <= p.length * (1 + 1e-12) + 1e-300:
        raise ValueError(f"s = {s} outside [0, {p.length}]")
    s = min(max(s, 0.0), p.length)
    return _eval(p, s, steps)


def sin_profile(p: Potential, steps: int = DEFAULT_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and values of sin_κ on the integration grid."""
    f, _ = _solution(p, steps)
    return np.linspace(0.0, p.length, steps + 1), f.copy()


def is_degenerate(p: Potential, steps: int = DEFAULT_STEPS) -> bool:
    """True when sin_κ fails to stay positive on (0, θ]."""
    if p.length == 0:
        return False
    f, _ = _solution(p, steps)
    return bool(np.min(f[1:]) < INFINITY_THRESHOLD * p.length)


def sigma(p: Potential, t: float, steps: int = DEFAULT_STEPS) -> float:
    """Distortion coefficient σ_κ^(t)(θ); ``math.inf`` stands for Infinite."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if p.length == 0:
        return float(t)
    if is_degenerate(p, steps):
        return math.inf
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    f, _ = _solution(p, steps)
    return _eval(p, t * p.length, steps) / float(f[-1])


def sigma_error_estimate(p: Potential, t: float, steps: int = DEFAULT_STEPS) -> float:
    """Richardson estimate |σ_S − σ_2S| / 15 of the integration error."""
    a, b = sigma(p, t, steps), sigma(p, t, 2 * steps)
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b) / 15.0


def tau(p: Potential, t: float, N: float, steps: int = DEFAULT_STEPS) -> float:
    """Averaged coefficient t^(1/N) σ_{κ/(N−1)}^(t)(θ)^(1−1/N)."""
    if not N > 1:
        raise ValueError("N must exceed 1")
    s = sigma(p.scaled(1.0 / (N - 1.0)), t, steps)
    if math.isinf(s):
        return math.inf
    return t ** (1.0 / N) * s ** (1.0 - 1.0 / N)


# --- lsc approximation -------------------------------------------------------


def lsc_approximation(k: Sequence[float], d: np.ndarray, n: float) -> np.ndarray:
    """k_n(x) = min_y [min(k(y), n) + n d(x, y)] over a finite set."""
    k = np.asarray(k, dtype=float)
    d = np.asarray(d, dtype=float)
    return np.min(np.minimum(k, n)[None, :] + n * d, axis=1)


def default_lsc_n(k: Sequence[float], d: np.ndarray) -> int:
    """2·max|k| / min spacing, rounded up; at this n the approximation is stationary."""
    k = np.asarray(k, dtype=float)
    d = np.asarray(d, dtype=float)
    off = d[~np.eye(d.shape[0], dtype=bool)]
    off = off[off > 0]
    top = float(np.max(np.abs(k))) if k.size else 0.0
    if off.size == 0 or top == 0:
        return max(1, int(math.ceil(top)))
    return max(1, int(math.ceil(2.0 * top / float(np.min(off)))), int(math.ceil(top)))


def lsc_sweep(k: Sequence[float], d: np.ndarray, ns: Sequence[float]) -> list[np.ndarray]:
    return [lsc_approximation(k, d, n) for n in ns]


def coordinate_metric(coords: np.ndarray) -> np.ndarray:
    c = np.asarray(coords, dtype=float)
    return np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))


# --- potentials along geodesics and plans ------------------------------------


def _uniform_potential(theta: float, stamps: np.ndarray, values: np.ndarray, tol: float,
                       grid: int | None) -> Potential:
    uniform = np.linspace(0.0, theta, stamps.size)
    if np.all(np.abs(stamps - uniform) <= tol * max(theta, 1e-300)):
        return Potential(theta, values)
    size = grid or max(2 * stamps.size - 1, 129)
    return Potential(theta, np.interp(np.linspace(0.0, theta, size), stamps, values))


def potential_along_geodesic(st, chain: Sequence[int], direction: str = "forward", k=None,
                             tol: float = 1e-6, grid: int | None = None) -> Potential:
    """k sampled along a discrete geodesic, parametrized by l from the start.

    ``direction='backward'`` gives the reversed profile s ↦ k⁺(θ − s).
    """
    chain = [st.check_index(c) for c in chain]
    if len(chain) < 2:
        raise NotAGeodesic("a geodesic needs at least two events")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    k = st.k if k is None else np.asarray(k, dtype=float)
    first, last = chain[0], chain[-1]
    theta = st.l[first, last]
    if not theta > 0:
        raise NotAGeodesic(f"endpoints {first}, {last} are not chronological")
    idx = np.array(chain)
    stamps = st.l[first, idx]
    slack = np.abs(stamps + st.l[idx, last] - theta)
    steps = st.l[idx[:-1], idx[1:]]
    if (not np.all(np.isfinite(stamps)) or np.any(slack > tol * theta)
            or np.any(np.abs(steps - np.diff(stamps)) > tol * theta) or np.any(np.diff(stamps) < -tol * theta)):
        raise NotAGeodesic("chain does not saturate the reverse triangle inequality")
    p = _uniform_potential(theta, stamps, k[idx], tol, grid)
    return p if direction == "forward" else p.reversed()


def potential_along_plan(plan, k, direction: str = "forward", grid: int | None = None) -> Potential:
    """Cost-weighted average of k along the atoms of a plan.

    θ is the L² cost c_π and the value at t·c_π is c_π^-2 Σ w k(γ_t) l(γ_0, γ_1)².
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    k = np.asarray(k, dtype=float)
    w = plan.weights * plan.lengths ** 2
    c2 = float(np.sum(w))
    if not c2 > 0:
        raise ZeroCostPlan("plan has zero L2 cost")
    c = math.sqrt(c2)
    values = (w[:, None] * k[plan.chains]).sum(axis=0) / c2
    p = _uniform_potential(c, np.asarray(plan.times) * c, values, 1e-9, grid)
    return p if direction == "forward" else p.reversed()
