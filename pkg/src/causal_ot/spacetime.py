"""Finite spacetimes: events, signed time separation, causal queries, models.

The separation table ``l`` is dense float64 with ``-inf`` marking causally
unrelated pairs. Chronological pairs have ``l > 0``, causal pairs ``l >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange, InputError, NonChronologicalPair

NEG_INF = -np.inf
MAX_EVENTS = 5000

CAUSAL_KINDS = ("future", "past", "diamond", "chron-future", "chron-past", "chron-diamond")


@dataclass(frozen=True)
class Event:
    id: int
    coords: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class DiscreteSpacetime:
    """Finite event set with separation table, reference measure and curvature field.

    ``coords`` has shape (n, d) with time first. ``l[i, j]`` is the signed time
    separation from event i to event j.
    """

    coords: np.ndarray
    l: np.ndarray
    m: np.ndarray
    k: np.ndarray
    model_tag: str = "custom-dag"

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        n = coords.shape[0]
        if n == 0:
            raise InputError("a spacetime needs at least one event")
        if n > MAX_EVENTS:
            raise InputError(f"{n} events exceeds the cap of {MAX_EVENTS}")
        l = np.array(self.l, dtype=float)
        if l.shape != (n, n):
            raise InputError(f"separation table has shape {l.shape}, expected {(n, n)}")
        m = np.broadcast_to(np.asarray(self.m, dtype=float), (n,)).copy()
        k = np.broadcast_to(np.asarray(self.k, dtype=float), (n,)).copy()
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InputError("reference measure must be finite and nonnegative")
        if not np.all(np.isfinite(k)):
            raise InputError("curvature values must be finite")
        for arr in (coords, l, m, k):
            arr.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def events(self) -> list[Event]:
        return [Event(i, tuple(map(float, c))) for i, c in enumerate(self.coords)]

    def check_index(self, i) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"event index {i} outside [0, {self.n})")
        return i

    def check_indices(self, idx: Iterable[int]) -> np.ndarray:
        arr = np.unique(np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=int))
        if arr.size and (arr[0] < 0 or arr[-1] >= self.n):
            raise IndexOutOfRange(f"index set leaves [0, {self.n})")
        return arr

    def replace(self, **changes) -> "DiscreteSpacetime":
        fields = dict(coords=self.coords, l=self.l, m=self.m, k=self.k, model_tag=self.model_tag)
        fields.update(changes)
        return DiscreteSpacetime(**fields)

    def reversed(self) -> "DiscreteSpacetime":
        """Causal reversal: l'(x, y) = l(y, x)."""
        return self.replace(l=self.l.T, model_tag=self.model_tag + "-reversed")


@dataclass(frozen=True)
class CausalQueryResult:
    kind: str
    members: tuple[int, ...]

    def __contains__(self, i) -> bool:
        return int(i) in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class AxiomReport:
    diagonal: list[int] = field(default_factory=list)
    antisymmetry: list[tuple[int, int]] = field(default_factory=list)
    reverse_triangle: list[tuple[int, int, int]] = field(default_factory=list)
    finiteness: list[tuple[int, int]] = field(default_factory=list)

    @property
    def violations(self) -> list:
        return (
            [("diagonal", i) for i in self.diagonal]
            + [("antisymmetry", p) for p in self.antisymmetry]
            + [("reverse-triangle", t) for t in self.reverse_triangle]
            + [("finiteness", p) for p in self.finiteness]
        )

    @property
    def ok(self) -> bool:
        return not self.violations


# --- queries ---------------------------------------------------------------


def time_separation(st: DiscreteSpacetime, i: int, j: int) -> float:
    return float(st.l[st.check_index(i), st.check_index(j)])


def _topological_order(l: np.ndarray) -> np.ndarray:
    # |J^-(x)| strictly increases along causal pairs of distinct events.
    counts = (l >= 0).sum(axis=0)
    return np.lexsort((np.arange(l.shape[0]), counts))


def _edge_weights(st: DiscreteSpacetime, nodes: np.ndarray, link_radius: float | None) -> np.ndarray:
    w = st.l[np.ix_(nodes, nodes)].copy()
    w[w < 0] = NEG_INF
    np.fill_diagonal(w, NEG_INF)
    if link_radius is not None:
        c = st.coords[nodes]
        dist = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
        w[dist > link_radius] = NEG_INF
    return w


def longest_chain(st: DiscreteSpacetime, i: int, j: int, link_radius: float | None = None,
                  tol: float = 1e-12) -> tuple[float, tuple[int, ...]]:
    """Longest causal chain from i to j and its value.

    Edges are causal pairs; with ``link_radius`` only pairs whose coordinate
    distance is at most that radius are edges. Among chains of maximal value
    (within ``tol``) the lexicographically smallest index sequence is returned.
    Returns ``(-inf, ())`` when no chain exists.
    """
    i, j = st.check_index(i), st.check_index(j)
    if i == j:
        return 0.0, (i,)
    mask = (st.l[i] >= 0) & (st.l[:, j] >= 0)
    if not mask[i] or not mask[j]:
        return NEG_INF, ()
    nodes = np.flatnonzero(mask)
    w = _edge_weights(st, nodes, link_radius)
    order = _topological_order(st.l[np.ix_(nodes, nodes)])
    pos_j = int(np.searchsorted(nodes, j))
    pos_i = int(np.searchsorted(nodes, i))
    to_j = np.full(nodes.size, NEG_INF)
    to_j[pos_j] = 0.0
    for a in order[::-1]:
        if a == pos_j:
            continue
        to_j[a] = np.max(w[a] + to_j)
    value = float(to_j[pos_i])
    if value == NEG_INF:
        return NEG_INF, ()
    path = [pos_i]
    a = pos_i
    while a != pos_j:
        cand = w[a] + to_j
        best = to_j[a]
        ok = np.flatnonzero(cand >= best - tol * max(1.0, abs(best)))
        a = int(ok[0])  # nodes are sorted, so the first hit has the smallest index
        path.append(a)
    return value, tuple(int(nodes[p]) for p in path)


def chain_separation(st: DiscreteSpacetime, i: int, j: int, link_radius: float | None = None) -> float:
    """Maximal l-length of a causal chain from i to j (-inf if none)."""
    return longest_chain(st, i, j, link_radius)[0]


def causal_set(st: DiscreteSpacetime, anchor, kind: str) -> CausalQueryResult:
    """Causal or chronological future/past of an event or set, or a diamond.

    For diamonds ``anchor`` is a pair ``(x, y)`` where each side may itself be
    an index or a set; the result is J+(x) ∩ J-(y) (or I+ ∩ I- for chron-diamond).
    """
    if kind not in CAUSAL_KINDS:
        raise ValueError(f"unknown causal kind {kind!r}")
    strict = kind.startswith("chron")

    def related(rows: np.ndarray, future: bool) -> np.ndarray:
        block = st.l[rows, :] if future else st.l[:, rows].T
        hit = block > 0 if strict else block >= 0
        return hit.any(axis=0)

    def as_set(a) -> np.ndarray:
        if np.ndim(a) == 0:
            return np.array([st.check_index(a)])
        return st.check_indices(a)

    if kind.endswith("diamond"):
        x, y = anchor
        mask = related(as_set(x), True) & related(as_set(y), False)
    else:
        mask = related(as_set(anchor), kind.endswith("future"))
    return CausalQueryResult(kind, tuple(int(v) for v in np.flatnonzero(mask)))


def intermediate_points(st: DiscreteSpacetime, i: int, j: int, t: float, tol: float = 0.0) -> np.ndarray:
    """Events z with l(i,z) ≈ t·l(i,j) and l(z,j) ≈ (1-t)·l(i,j)."""
    i, j = st.check_index(i), st.check_index(j)
    lij = st.l[i, j]
    if not lij > 0:
        raise NonChronologicalPair(f"l({i},{j}) = {lij} is not positive")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    a = np.abs(st.l[i] - t * lij) <= tol
    b = np.abs(st.l[:, j] - (1.0 - t) * lij) <= tol
    return np.flatnonzero(a & b)


def verify_axioms(st: DiscreteSpacetime, tol: float = 1e-12, limit: int = 1000) -> AxiomReport:
    """Check diagonal, antisymmetry, reverse triangle and finiteness of l.

    At most ``limit`` violations of each kind are listed. The reverse triangle
    is checked on all triples with a relative slack of ``tol``.
    """
    l = st.l
    rep = AxiomReport()
    rep.diagonal = [int(i) for i in np.flatnonzero(np.diag(l) != 0)][:limit]
    bad = np.isnan(l) | (l == np.inf)
    rep.finiteness = [(int(a), int(b)) for a, b in zip(*np.nonzero(bad))][:limit]
    causal = l >= 0
    both = causal & causal.T
    np.fill_diagonal(both, False)
    rep.antisymmetry = [(int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(both)))][:limit]
    lc = np.where(bad, NEG_INF, l)
    for mid in range(st.n):
        left = lc[:, mid]
        right = lc[mid, :]
        if not (np.any(left > NEG_INF) and np.any(right > NEG_INF)):
            continue
        rows = np.flatnonzero(left > NEG_INF)
        cols = np.flatnonzero(right > NEG_INF)
        through = left[rows, None] + right[None, cols]
        direct = lc[np.ix_(rows, cols)]
        viol = through - direct > tol * (1.0 + np.abs(np.where(np.isfinite(direct), direct, 0.0)))
        for a, b in zip(*np.nonzero(viol)):
            rep.reverse_triangle.append((int(rows[a]), mid, int(cols[b])))
            if len(rep.reverse_triangle) >= limit:
                return rep
    return rep


# --- models ----------------------------------------------------------------


def minkowski_separation(coords: np.ndarray) -> np.ndarray:
    """Analytic Minkowski proper time between all pairs of events."""
    c = np.asarray(coords, dtype=float)
    dt = c[None, :, 0] - c[:, None, 0]
    dx2 = ((c[None, :, 1:] - c[:, None, 1:]) ** 2).sum(-1)
    q = dt * dt - dx2
    # on the light cone q is rounding noise that sqrt would blow up to ~1e-8
    q[np.abs(q) <= 8 * np.finfo(float).eps * (dt * dt + dx2)] = 0.0
    causal = (dt >= 0) & (q >= 0)
    l = np.full(dt.shape, NEG_INF)
    l[causal] = np.sqrt(q[causal])
    np.fill_diagonal(l, 0.0)
    return l


def minkowski(coords, m=None, k=0.0) -> DiscreteSpacetime:
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n, d = coords.shape
    if len(np.unique(coords, axis=0)) != n:
        raise InputError("events must have distinct coordinates")
    m = np.ones(n) if m is None else m
    return DiscreteSpacetime(coords, minkowski_separation(coords), m, k, f"minkowski({d})")


def grid_coords(shape: Sequence[int], box: Sequence[Sequence[float]]) -> np.ndarray:
    axes = [np.linspace(lo, hi, s) for s, (lo, hi) in zip(shape, box)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def longest_path_table(weights: np.ndarray, order: np.ndarray) -> np.ndarray:
    """All-pairs longest paths in a DAG.

    ``weights[a, b]`` is the edge weight or -inf; ``order`` is a topological
    order of the vertices. The diagonal of the result is 0.
    """
    n = weights.shape[0]
    L = np.full((n, n), NEG_INF)
    for b in order:
        preds = np.flatnonzero(weights[:, b] > NEG_INF)
        if preds.size:
            L[:, b] = np.max(L[:, preds] + weights[preds, b][None, :], axis=1)
        L[b, b] = 0.0
    return L


def warped_link_weights(coords: np.ndarray, link_radius: float) -> np.ndarray:
    """Local proper times for the metric dr² − r·|dx|² between nearby events.

    The warping factor is evaluated at the midpoint radius. Only pairs within
    ``link_radius`` (coordinate distance) with increasing r become edges.
    """
    c = np.asarray(coords, dtype=float)
    dr = c[None, :, 0] - c[:, None, 0]
    rbar = 0.5 * (c[None, :, 0] + c[:, None, 0])
    dx2 = ((c[None, :, 1:] - c[:, None, 1:]) ** 2).sum(-1)
    q = dr * dr - rbar * dx2
    dist = np.sqrt(dr * dr + dx2)
    edge = (dr > 0) & (q >= 0) & (dist <= link_radius)
    w = np.full(dr.shape, NEG_INF)
    w[edge] = np.sqrt(q[edge])
    return w


def warped_sqrt(coords, link_radius: float, m=None, N: float | None = None) -> DiscreteSpacetime:
    """Warped product with warping function sqrt(r), separation from link chains.

    The curvature column is the timelike Ricci lower bound (N−1)/(4r²) with
    N the spacetime dimension unless given.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n, d = coords.shape
    if np.any(coords[:, 0] <= 0):
        raise InputError("warped model needs r > 0 for every event")
    N = float(d) if N is None else float(N)
    w = warped_link_weights(coords, link_radius)
    order = np.lexsort((np.arange(n), coords[:, 0]))
    l = longest_path_table(w, order)
    k = (N - 1.0) / (4.0 * coords[:, 0] ** 2)
    m = np.ones(n) if m is None else m
    return DiscreteSpacetime(coords, l, m, k, f"warped(sqrt, {d})")


def random_dag(coords, edge_prob: float, rng: np.random.Generator, m=None, k=0.0) -> DiscreteSpacetime:
    """Random causal DAG ordered by the time coordinate; l is the longest-path table."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n = coords.shape[0]
    t = coords[:, 0]
    dt = t[None, :] - t[:, None]
    edge = (dt > 0) & (rng.random((n, n)) < edge_prob)
    w = np.full((n, n), NEG_INF)
    w[edge] = dt[edge] * rng.random(int(edge.sum()))
    order = np.lexsort((np.arange(n), t))
    l = longest_path_table(w, order)
    m = np.ones(n) if m is None else m
    return DiscreteSpacetime(coords, l, m, k, "custom-dag")


def custom_dag(coords, l, m=None, k=0.0) -> DiscreteSpacetime:
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    m = np.ones(coords.shape[0]) if m is None else m
    return DiscreteSpacetime(coords, l, m, k, "custom-dag")


DEFAULT_BOX = {"minkowski": (0.0, 1.0), "warped-sqrt": (0.5, 3.0), "custom": (0.0, 1.0)}


def link_radius(config: dict, box, n: int) -> float:
    """Configured link radius, or three mean spacings of n events in the box."""
    if "link_radius" in config:
        return float(config["link_radius"])
    volume = float(np.prod([hi - lo for lo, hi in box]))
    return 3.0 * (volume / n) ** (1.0 / len(box))


def generate(config: dict) -> DiscreteSpacetime:
    """Build a model spacetime from a generation config.

    Recognised keys: model, dim, n_samples, seed, box, and optionally shape
    (lattice instead of random samples), link_radius (warped), edge_prob
    (custom), k (constant curvature for minkowski/custom), N (warped).
    """
    model = config.get("model")
    if model not in DEFAULT_BOX:
        raise InputError(f"unknown model {model!r}")
    dim = int(config.get("dim", 2))
    if dim < 1:
        raise InputError("dim must be at least 1")
    box = config.get("box")
    if box is None:
        box = [DEFAULT_BOX[model]] + [(0.0, 1.0)] * (dim - 1)
    box = [tuple(map(float, b)) for b in box]
    if len(box) != dim or any(hi <= lo for lo, hi in box):
        raise InputError("box needs one increasing [lo, hi] pair per coordinate")
    rng = np.random.default_rng(config.get("seed", 0))
    if "shape" in config:
        shape = [int(s) for s in config["shape"]]
        if len(shape) != dim or min(shape) < 1:
            raise InputError("shape needs one positive count per coordinate")
        coords = grid_coords(shape, box)
    else:
        n = int(config.get("n_samples", 0))
        if n <= 0:
            raise InputError("n_samples must be positive")
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        coords = lo + (hi - lo) * rng.random((n, dim))
    n = coords.shape[0]
    if model == "minkowski":
        return minkowski(coords, k=float(config.get("k", 0.0)))
    if model == "warped-sqrt":
        return warped_sqrt(coords, link_radius(config, box, n), N=config.get("N"))
    return random_dag(coords, float(config.get("edge_prob", 0.3)), rng, k=float(config.get("k", 0.0)))
