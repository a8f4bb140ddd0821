"""Network simplex for the dense transportation problem (maximization).

Maximize Σ C_ij x_ij subject to row sums a and column sums b, x ≥ 0, with
x_ij = 0 forced on disallowed cells. A basis is a spanning tree of the
bipartite row/column graph with m + n − 1 cells. Disallowed cells carry a
big-M penalty cost, so they leave the basis whenever the allowed cells admit a
feasible flow. Pricing uses the largest reduced cost. After a run of
degenerate pivots it falls back to Bland's smallest-index rule, which
prevents cycling.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

DEGENERATE_SWITCH = 50


@dataclass
class TransportSolution:
    flow: np.ndarray  # (m, n)
    u: np.ndarray  # row duals
    v: np.ndarray  # column duals
    objective: float
    penalty_mass: float  # mass left on disallowed cells
    pivots: int


def _northwest_corner(a, b):
    m, n = a.size, b.size
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    x = np.zeros((m, n))
    cells = []
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        x[i, j] = q
        cells.append((i, j))
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return x, cells


def _potentials(C, adj, m, n):
    u = np.zeros(m)
    v = np.zeros(n)
    seen = np.zeros(m + n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if seen[nb]:
                continue
            seen[nb] = True
            if node < m:
                v[nb - m] = C[node, nb - m] - u[node]
            else:
                u[nb] = C[nb, node - m] - v[node - m]
            queue.append(nb)
    return u, v


def _tree_path(adj, start, goal):
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path[::-1]


def solve_transportation(a, b, cost, allowed=None, max_pivots: int | None = None) -> TransportSolution:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    if allowed is None:
        allowed = np.ones((m, n), dtype=bool)
    if not allowed.any():
        allowed_cost = np.zeros(1)
    else:
        allowed_cost = cost[allowed]
    cmin, cmax = float(allowed_cost.min()), float(allowed_cost.max())
    penalty = cmin - (m + n + 1) * (cmax - cmin + 1.0)
    C = np.where(allowed, cost, penalty)
    scale = max(1.0, float(np.max(np.abs(C))))
    eps = 1e-11 * scale

    x, cells = _northwest_corner(a, b)
    basic = np.zeros((m, n), dtype=bool)
    adj = [set() for _ in range(m + n)]
    for i, j in cells:
        basic[i, j] = True
        adj[i].add(m + j)
        adj[m + j].add(i)

    max_pivots = max_pivots or 50 * (m + n) * max(m, n) + 1000
    degenerate = 0
    pivots = 0
    while True:
        u, v = _potentials(C, adj, m, n)
        R = C - u[:, None] - v[None, :]
        R[basic] = 0.0
        if degenerate < DEGENERATE_SWITCH:
            flat = int(np.argmax(R))
            if R.flat[flat] <= eps:
                break
        else:
            hits = np.flatnonzero(R.ravel() > eps)
            if hits.size == 0:
                break
            flat = int(hits[0])
        ei, ej = divmod(flat, n)
        path = _tree_path(adj, ei, m + ej)
        # Cells along the path alternate −, +, −, ... ending with −.
        minus, plus = [], []
        for s in range(len(path) - 1):
            p, q = path[s], path[s + 1]
            cell = (p, q - m) if p < m else (q, p - m)
            (minus if s % 2 == 0 else plus).append(cell)
        theta = min(x[c] for c in minus)
        leave = min((c for c in minus if x[c] <= theta), key=lambda c: c[0] * n + c[1])
        for c in minus:
            x[c] -= theta
        for c in plus:
            x[c] += theta
        x[ei, ej] = theta
        x[leave] = 0.0
        basic[leave] = False
        adj[leave[0]].discard(m + leave[1])
        adj[m + leave[1]].discard(leave[0])
        basic[ei, ej] = True
        adj[ei].add(m + ej)
        adj[m + ej].add(ei)
        degenerate = degenerate + 1 if theta <= 1e-15 else 0
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("network simplex exceeded its pivot budget")
    np.maximum(x, 0.0, out=x)
    penalty_mass = float(x[~allowed].sum())
    objective = float(np.sum(np.where(allowed, x * cost, 0.0)))
    return TransportSolution(x, u, v, objective, penalty_mass, pivots)
