"""Reduced Betti numbers of small complexes over a prime field.

Lower links on grid meshes carry at most a few dozen simplices, so ranks are
taken by dense Gaussian elimination.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .mesh import MeshError, SimplicialComplex, SubComplex

BettiVector = list  # reduced Betti numbers b~_0..b~_d
BoundaryMatrix = np.ndarray  # rows (k-1)-simplices, columns k-simplices, entries mod p


def _as_simplex_set(c) -> frozenset:
    if isinstance(c, SubComplex):
        return c.simplices
    if isinstance(c, SimplicialComplex):
        return c.as_subcomplex().simplices
    return frozenset(tuple(sorted(s)) for s in c)


def boundary_matrix(lower: list, upper: list, p: int = 2) -> BoundaryMatrix:
    """Matrix of the boundary map from ``upper`` k-simplices to ``lower`` (k-1)-simplices mod p."""
    row = {s: i for i, s in enumerate(lower)}
    m = np.zeros((len(lower), len(upper)), dtype=np.int64)
    for j, s in enumerate(upper):
        for i in range(len(s)):
            f = s[:i] + s[i + 1:]
            m[row[f], j] = (-1) ** i % p
    return m


def rank_mod_p(m: np.ndarray, p: int = 2) -> int:
    a = np.array(m, dtype=np.int64) % p
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if not len(nz):
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, p)) % p
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        if len(others):
            a[others] = (a[others] - np.outer(a[others, c], a[r])) % p
        r += 1
    return r


def reduced_betti(c, d: int, p: int = 2) -> BettiVector:
    """Homological index vector: entry i is dim of reduced H_{i-1}(c; F_p).

    Entry 0 is 1 exactly when ``c`` is empty. The result has length ``d + 1``.
    """
    simplices = _as_simplex_set(c)
    if any(f not in simplices for s in simplices for f in combinations(s, len(s) - 1) if f):
        raise MeshError("reduced_betti needs a face-closed complex")
    out = [0] * (d + 1)
    if not simplices:
        out[0] = 1
        return out
    by_dim = {}
    for s in simplices:
        by_dim.setdefault(len(s) - 1, []).append(s)
    top = max(by_dim)
    if top + 1 > d:
        raise MeshError(f"complex of dimension {top} does not fit ambient d={d}")
    chains = [sorted(by_dim.get(k, [])) for k in range(top + 1)]
    # augmentation: rank of the reduced boundary from 0-chains is 1
    ranks = [1] + [rank_mod_p(boundary_matrix(chains[k - 1], chains[k], p), p)
                   for k in range(1, top + 1)] + [0]
    for k in range(top + 1):
        out[k + 1] = len(chains[k]) - ranks[k] - ranks[k + 1]
    return out


def euler_characteristic(c) -> int:
    """Alternating count of simplices; 0 for the empty complex."""
    if isinstance(c, SimplicialComplex):
        return c.euler_characteristic()
    return sum((-1) ** (len(s) - 1) for s in _as_simplex_set(c))
