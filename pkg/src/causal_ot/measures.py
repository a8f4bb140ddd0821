"""Probability measures, couplings and dynamical plans on a finite event set."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleMarginals

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability weights over the n events of a spacetime."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 1 or w.size == 0:
            raise InfeasibleMarginals("measure weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InfeasibleMarginals("measure weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InfeasibleMarginals(f"measure weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @classmethod
    def uniform(cls, n: int, support: Iterable[int]) -> "Measure":
        idx = np.unique(np.fromiter(support, dtype=int))
        w = np.zeros(n)
        w[idx] = 1.0 / idx.size
        return cls(w)

    @classmethod
    def dirac(cls, n: int, i: int) -> "Measure":
        w = np.zeros(n)
        w[int(i)] = 1.0
        return cls(w)

    @classmethod
    def from_density(cls, density: Sequence[float], m: Sequence[float]) -> "Measure":
        w = np.asarray(density, dtype=float) * np.asarray(m, dtype=float)
        total = w.sum()
        if not total > 0:
            raise InfeasibleMarginals("density has zero mass")
        return cls(w / total)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse transport plan: mass ``w[a]`` moves from ``i[a]`` to ``j[a]``."""

    i: np.ndarray
    j: np.ndarray
    w: np.ndarray
    n: int

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.i, self.j), self.w)
        return out

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.bincount(self.i, self.w, minlength=self.n)
        b = np.bincount(self.j, self.w, minlength=self.n)
        return a, b

    def pairs(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.i, self.j, self.w)]


@dataclass(frozen=True, eq=False)
class Plan:
    """Weighted discrete geodesics sampled at common affine time stamps.

    ``chains[a, s]`` is the event visited by atom ``a`` at ``times[s]``;
    ``lengths[a]`` is l between the chain endpoints.
    """

    times: np.ndarray
    chains: np.ndarray
    weights: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        chains = np.atleast_2d(np.asarray(self.chains, dtype=int))
        weights = np.asarray(self.weights, dtype=float)
        lengths = np.asarray(self.lengths, dtype=float)
        if chains.shape != (weights.size, times.size) or lengths.shape != weights.shape:
            raise ValueError("plan arrays have inconsistent shapes")
        if times.size < 2 or times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise ValueError("plan times must increase from 0 to 1")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("plan weights must be a probability vector")
        for arr in (times, chains, weights, lengths):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "chains", chains)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def from_chains(cls, st, times, chains, weights) -> "Plan":
        chains = np.atleast_2d(np.asarray(chains, dtype=int))
        weights = np.asarray(weights, dtype=float)
        lengths = st.l[chains[:, 0], chains[:, -1]]
        return cls(np.asarray(times, dtype=float), chains, weights / weights.sum(), lengths)

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    def slice(self, s: int, n: int) -> np.ndarray:
        """Weights of the pushforward of the plan at stamp index ``s``."""
        return np.bincount(self.chains[:, s], self.weights, minlength=n)

    def marginal(self, s: int, n: int) -> Measure:
        w = self.slice(s, n)
        return Measure(w / w.sum())

    def stamp_index(self, t: float, tol: float = 1e-12) -> int:
        hit = np.flatnonzero(np.abs(self.times - t) <= tol)
        if hit.size == 0:
            raise ValueError(f"t = {t} is not a stamp of this plan")
        return int(hit[0])

    def sub_plan(self, atoms: Sequence[int]) -> "Plan":
        atoms = np.asarray(atoms, dtype=int)
        w = self.weights[atoms]
        return Plan(self.times, self.chains[atoms], w / w.sum(), self.lengths[atoms])

    def to_dict(self) -> dict:
        return {
            "times": [float(t) for t in self.times],
            "atoms": [{"chain": [int(c) for c in ch], "weight": float(w)}
                      for ch, w in zip(self.chains, self.weights)],
        }
