"""Hot kernels for lower-link homology and the crossing sweep.

The compiled extension ``plcerf._ckernels`` is used when it imports;
otherwise the pure-Python twin in ``plcerf._pykernels`` is selected. Set
``PLCERF_PURE_PYTHON=1`` to force the fallback.

Both backends read a :class:`LinkTable`, a flat CSR encoding of every vertex
link, and an edge orientation array ``u_below`` (one byte per edge, 1 when
the smaller endpoint id sits lower in the current vertex order). The lower
link of a vertex depends only on the orientation of its incident edges,
which is what lets a crossing be processed as a single edge flip.

For d <= 3 the fast Betti route uses: component count (union-find), the
Euler characteristic of the lower link, and the fact that a proper
subcomplex of a 2-sphere or of a disk has no top homology.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("PLCERF_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass


def backend(name: str | None = None):
    """Kernel module by name ('python' / 'cython'); the active one by default."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _csr(owner: np.ndarray, n: int, *cols):
    order = np.argsort(owner, kind="stable")
    ptr = np.concatenate([[0], np.cumsum(np.bincount(owner, minlength=n))]).astype(np.int64)
    return (ptr,) + tuple(np.ascontiguousarray(c[order], dtype=np.int64) for c in cols)


@dataclass
class LinkTable:
    d: int
    n_vertices: int
    edges: np.ndarray       # (E, 2), u < v
    nbr_ptr: np.ndarray     # neighbours of each vertex, sorted by id
    nbr: np.ndarray
    nbr_edge: np.ndarray
    nbr_is_u: np.ndarray    # 1 if the neighbour is the smaller endpoint of the edge
    le_ptr: np.ndarray      # link edges as local neighbour slots
    le_a: np.ndarray
    le_b: np.ndarray
    lt_ptr: np.ndarray      # link triangles (d = 3) as local neighbour slots
    lt_a: np.ndarray
    lt_b: np.ndarray
    lt_c: np.ndarray
    closed: np.ndarray      # 1 if the link is a sphere (interior vertex)
    fast: bool              # d <= 3 and every link is a sphere or disk

    @classmethod
    def build(cls, c, trusted: bool | None = None) -> "LinkTable":
        from .mesh import validate_manifold

        V, d = c.vertex_count, c.d
        edges = np.array(c.edges, dtype=np.int64)
        E = len(edges)
        own = np.concatenate([edges[:, 0], edges[:, 1]])
        other = np.concatenate([edges[:, 1], edges[:, 0]])
        eid = np.concatenate([np.arange(E), np.arange(E)])
        is_u = np.concatenate([np.zeros(E, np.int64), np.ones(E, np.int64)])
        # sort by (owner, neighbour) so local slots are ordered by neighbour id
        order = np.lexsort((other, own))
        own, other, eid, is_u = own[order], other[order], eid[order], is_u[order]
        nbr_ptr = np.concatenate([[0], np.cumsum(np.bincount(own, minlength=V))]).astype(np.int64)
        keys = own * V + other

        def slot(owner, w):
            return np.searchsorted(keys, owner * V + w) - nbr_ptr[owner]

        empty = np.empty(0, np.int64)
        le = (np.zeros(V + 1, np.int64), empty, empty)
        lt = (np.zeros(V + 1, np.int64), empty, empty, empty)
        if d >= 2:
            tri = c.simplices(2)
            owners, pa, pb = [], [], []
            for i in range(3):
                rest = [j for j in range(3) if j != i]
                o = tri[:, i]
                owners.append(o)
                pa.append(slot(o, tri[:, rest[0]]))
                pb.append(slot(o, tri[:, rest[1]]))
            le = _csr(np.concatenate(owners), V, np.concatenate(pa), np.concatenate(pb))
        if d == 3:
            tet = c.maximal_simplices
            owners, pa, pb, pc = [], [], [], []
            for i in range(4):
                rest = [j for j in range(4) if j != i]
                o = tet[:, i]
                owners.append(o)
                pa.append(slot(o, tet[:, rest[0]]))
                pb.append(slot(o, tet[:, rest[1]]))
                pc.append(slot(o, tet[:, rest[2]]))
            lt = _csr(np.concatenate(owners), V, *(np.concatenate(x) for x in (pa, pb, pc)))
        deg = np.diff(nbr_ptr)
        chi = deg - np.diff(le[0]) + np.diff(lt[0])
        sphere_chi = {1: 2, 2: 0, 3: 2}.get(d, -1)
        closed = (chi == sphere_chi).astype(np.uint8)
        if trusted is None:
            trusted = c.grid is not None
        fast = d <= 3 and (trusted or validate_manifold(c).valid)
        return cls(d, V, edges, nbr_ptr, other.astype(np.int64), eid.astype(np.int64),
                   is_u.astype(np.uint8), *le, *lt, closed, bool(fast))

    def orientation(self, values) -> np.ndarray:
        """Edge orientation for the (value, id) order of ``values``."""
        f = np.asarray(values, dtype=float)
        return (f[self.edges[:, 0]] <= f[self.edges[:, 1]]).astype(np.uint8)

    def lower_mask(self, v: int, u_below: np.ndarray) -> np.ndarray:
        s = slice(self.nbr_ptr[v], self.nbr_ptr[v + 1])
        return u_below[self.nbr_edge[s]] == self.nbr_is_u[s]

    def generic_betti(self, c, v: int, u_below: np.ndarray) -> np.ndarray:
        """Reduced-homology route through Gaussian elimination, any d."""
        from .homology import reduced_betti
        from .mesh import SubComplex, link

        lower = set(self.nbr[self.nbr_ptr[v]:self.nbr_ptr[v + 1]][self.lower_mask(v, u_below)].tolist())
        lk = link(c, v)
        sub = SubComplex(c, frozenset(s for s in lk.simplices if lower.issuperset(s)))
        return np.asarray(reduced_betti(sub, self.d), dtype=np.int8)


def all_betti(table: LinkTable, u_below: np.ndarray, complex_=None, impl=None) -> np.ndarray:
    """Homological index of every vertex under orientation ``u_below``."""
    if not table.fast:
        return np.stack([table.generic_betti(complex_, v, u_below)
                         for v in range(table.n_vertices)]) if table.n_vertices else \
            np.zeros((0, table.d + 1), np.int8)
    out = np.zeros((table.n_vertices, table.d + 1), dtype=np.int8)
    (impl or _impl).all_betti(table, np.ascontiguousarray(u_below, dtype=np.uint8), out)
    return out


def sweep(table: LinkTable, u_below: np.ndarray, betti: np.ndarray, ev_edge: np.ndarray,
          complex_=None, impl=None):
    """Process edge flips in order; returns (before, after) Betti arrays of shape (N, 2, d+1).

    ``u_below`` and ``betti`` are updated in place to the final state.
    """
    n = len(ev_edge)
    before = np.zeros((n, 2, table.d + 1), dtype=np.int8)
    after = np.zeros_like(before)
    ev_edge = np.ascontiguousarray(ev_edge, dtype=np.int64)
    if table.fast:
        (impl or _impl).sweep(table, u_below, betti, ev_edge, before, after)
        return before, after
    for i, e in enumerate(ev_edge):
        a, b = table.edges[e]
        before[i, 0], before[i, 1] = betti[a], betti[b]
        u_below[e] ^= 1
        betti[a] = table.generic_betti(complex_, a, u_below)
        betti[b] = table.generic_betti(complex_, b, u_below)
        after[i, 0], after[i, 1] = betti[a], betti[b]
    return before, after
