"""Single-time PL Morse theory: vertex classification and the lower-star ECC.

A valuation is a per-vertex array of finite reals. Equal values are ordered
by vertex id, so every valuation induces a strict total order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homology import BettiVector, reduced_betti
from .kernels import all_betti
from .mesh import SimplicialComplex, lower_link

Valuation = np.ndarray  # shape (vertex_count,), finite


def _check_values(c: SimplicialComplex, values) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    if f.shape != (c.vertex_count,):
        raise ValueError(f"valuation has shape {f.shape}, expected ({c.vertex_count},)")
    if not np.all(np.isfinite(f)):
        raise ValueError("valuation contains non-finite values")
    return f


@dataclass(frozen=True)
class VertexClass:
    """Regular, Critical(index, multiplicity) or DegenerateCritical, from a Betti vector."""

    betti: tuple

    @classmethod
    def of(cls, betti) -> "VertexClass":
        return cls(tuple(int(b) for b in betti))

    @property
    def is_regular(self) -> bool:
        return not any(self.betti)

    @property
    def is_critical(self) -> bool:
        return any(self.betti)

    @property
    def index(self) -> int | None:
        nz = [i for i, b in enumerate(self.betti) if b]
        return nz[0] if len(nz) == 1 else None

    @property
    def multiplicity(self) -> int | None:
        i = self.index
        return None if i is None else self.betti[i]

    @property
    def is_degenerate(self) -> bool:
        """Critical but not a single unit entry."""
        return self.is_critical and self.multiplicity != 1

    @property
    def kind(self) -> str:
        if self.is_regular:
            return "Regular"
        if self.index is None:
            return "DegenerateCritical"
        return "Critical"

    def __str__(self):
        if self.is_regular:
            return "Regular"
        if self.index is None:
            return f"DegenerateCritical{list(self.betti)}"
        return f"Critical{{{self.index},{self.multiplicity}}}"


def homological_index(c: SimplicialComplex, values, v) -> BettiVector:
    """Reduced Betti vector of the lower link of ``v`` (entry i = dim H~_{i-1})."""
    f = _check_values(c, values)
    return reduced_betti(lower_link(c, v, f), c.d)


def classify_vertex(c: SimplicialComplex, values, v) -> VertexClass:
    return VertexClass.of(homological_index(c, values, v))


def index_vectors(c: SimplicialComplex, values) -> np.ndarray:
    """Homological index of every vertex, shape (V, d+1), through the kernel."""
    f = _check_values(c, values)
    t = c.link_table
    return all_betti(t, t.orientation(f), c)


def critical_points(c: SimplicialComplex, values) -> list:
    """(vertex, VertexClass) for every non-regular vertex, by vertex id."""
    betti = index_vectors(c, values)
    crit = np.nonzero(betti.any(axis=1))[0]
    return [(int(v), VertexClass.of(betti[v])) for v in crit]


def is_pl_morse(c: SimplicialComplex, values) -> bool:
    betti = index_vectors(c, values)
    crit = betti.any(axis=1)
    unit = (betti.sum(axis=1) == 1) & (betti.max(axis=1) == 1)
    return bool(np.all(~crit | unit))


def euler_weights(betti: np.ndarray) -> np.ndarray:
    """Alternating sums sum_i (-1)^i beta_i per row."""
    betti = np.asarray(betti, dtype=np.int64)
    signs = (-1) ** np.arange(betti.shape[-1])
    return betti @ signs


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous integer step function.

    ``values[0]`` holds on (-inf, breakpoints[0]); ``values[j]`` on
    [breakpoints[j-1], breakpoints[j]); the last value extends to +inf.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, s):
        idx = np.searchsorted(self.breakpoints, s, side="right")
        return self.values[idx]

    @classmethod
    def from_jumps(cls, positions, jumps) -> "StepFunction":
        positions = np.asarray(positions, dtype=float)
        jumps = np.asarray(jumps, dtype=np.int64)
        if not len(positions):
            return cls(np.empty(0), np.zeros(1, dtype=np.int64))
        bp, inv = np.unique(positions, return_inverse=True)
        acc = np.zeros(len(bp), dtype=np.int64)
        np.add.at(acc, inv, jumps)
        return cls(bp, np.concatenate([[0], np.cumsum(acc)]))


def ecc_lower_star(c: SimplicialComplex, values) -> StepFunction:
    """Euler characteristic of sublevel sets under the lower-star filtration.

    Computed directly from simplex counts: each simplex enters at the
    largest value among its vertices.
    """
    f = _check_values(c, values)
    pos, jumps = [], []
    for k in range(c.d + 1):
        s = c.simplices(k)
        if len(s):
            pos.append(f[s].max(axis=1))
            jumps.append(np.full(len(s), (-1) ** k))
    if not pos:
        return StepFunction.from_jumps([], [])
    return StepFunction.from_jumps(np.concatenate(pos), np.concatenate(jumps))
