"""Simplicial complexes, Freudenthal grid triangulations and vertex links.

A complex is stored through its maximal simplices only; faces are
enumerated on demand. Vertex links are materialized per query since they
are O(1)-sized on grid meshes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np


class MeshError(ValueError):
    """Raised for malformed complexes, grid specs or vertex ids."""


Simplex = tuple  # strictly increasing tuple of vertex ids
VertexId = int


def faces(simplex: Sequence[int]) -> Iterable[tuple]:
    """All non-empty faces of ``simplex`` (including itself)."""
    s = tuple(sorted(simplex))
    for k in range(1, len(s) + 1):
        yield from combinations(s, k)


def closure(simplices: Iterable[Sequence[int]]) -> frozenset:
    out = set()
    for s in simplices:
        out.update(faces(s))
    return frozenset(out)


@dataclass(frozen=True)
class GridSpec:
    dims: tuple
    periodic: tuple = ()

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * len(dims)
        if len(periodic) != len(dims):
            raise MeshError("periodic flags must match the number of grid axes")
        if not 1 <= len(dims) <= 3:
            raise MeshError(f"grid must have 1 to 3 axes, got {len(dims)}")
        for n, p in zip(dims, periodic):
            if n < 2:
                raise MeshError(f"grid axis of size {n} < 2")
            if p and n < 3:
                raise MeshError("periodic axis needs at least 3 vertices")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "periodic", periodic)

    @property
    def vertex_count(self) -> int:
        return int(np.prod(self.dims))

    def index(self, coords) -> np.ndarray:
        """Vertex id of integer grid coordinates; axis 0 varies fastest."""
        coords = np.asarray(coords)
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        stride = 1
        for axis, n in enumerate(self.dims):
            idx += (coords[..., axis] % n) * stride
            stride *= n
        return idx

    def coords(self, vertices) -> np.ndarray:
        v = np.asarray(vertices, dtype=np.int64)
        out = np.empty(v.shape + (len(self.dims),), dtype=np.int64)
        for axis, n in enumerate(self.dims):
            out[..., axis] = v % n
            v = v // n
        return out

    def positions(self) -> np.ndarray:
        return self.coords(np.arange(self.vertex_count)).astype(float)

    def to_json(self) -> dict:
        return {"grid": list(self.dims), "periodic": list(self.periodic)}


@dataclass(frozen=True)
class SubComplex:
    """Face-closed set of simplices of a parent complex."""

    parent: "SimplicialComplex" = field(repr=False, compare=False)
    simplices: frozenset

    @property
    def vertices(self) -> list:
        return sorted(s[0] for s in self.simplices if len(s) == 1)

    @property
    def dim(self) -> int:
        return max((len(s) - 1 for s in self.simplices), default=-1)

    def of_dim(self, k: int) -> list:
        return sorted(s for s in self.simplices if len(s) == k + 1)

    def is_face_closed(self) -> bool:
        return all(f in self.simplices for s in self.simplices for f in faces(s))

    def __len__(self):
        return len(self.simplices)


class SimplicialComplex:
    """Pure ``d``-dimensional complex given by its maximal simplices.

    Immutable after construction; all queries are read-only.
    """

    def __init__(self, d: int, maximal_simplices, vertex_count: int | None = None,
                 grid: GridSpec | None = None):
        try:
            tops = np.asarray(maximal_simplices, dtype=np.int64)
        except (TypeError, ValueError):
            raise MeshError(f"maximal simplices must all have {d + 1} vertices") from None
        if tops.size == 0:
            tops = tops.reshape(0, d + 1)
        if tops.ndim != 2 or tops.shape[1] != d + 1:
            raise MeshError(f"maximal simplices must be an (M, {d + 1}) array")
        tops = np.sort(tops, axis=1)
        if tops.size and np.any(tops[:, 1:] == tops[:, :-1]):
            raise MeshError("simplex with repeated vertex")
        if vertex_count is None:
            vertex_count = int(tops.max()) + 1 if tops.size else 0
        if tops.size and (tops.min() < 0 or tops.max() >= vertex_count):
            raise MeshError("vertex id out of range")
        self.d = int(d)
        self.maximal_simplices = tops
        self.maximal_simplices.setflags(write=False)
        self.vertex_count = int(vertex_count)
        self.grid = grid
        # star adjacency in CSR form
        order = np.argsort(tops.ravel(), kind="stable")
        counts = np.bincount(tops.ravel(), minlength=self.vertex_count)
        self._star_ptr = np.concatenate([[0], np.cumsum(counts)])
        self._star_idx = order // (d + 1)

    def __repr__(self):
        return (f"SimplicialComplex(d={self.d}, vertices={self.vertex_count}, "
                f"maximal={len(self.maximal_simplices)})")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_json(cls, data) -> "SimplicialComplex":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        try:
            return cls(int(data["d"]), data["maximal_simplices"], int(data["vertex_count"]))
        except KeyError as exc:
            raise MeshError(f"complex JSON missing key {exc}") from None

    def to_json(self) -> dict:
        return {"d": self.d, "vertex_count": self.vertex_count,
                "maximal_simplices": self.maximal_simplices.tolist()}

    # -- queries -------------------------------------------------------------

    def _check_vertex(self, v) -> int:
        v = int(v)
        if not 0 <= v < self.vertex_count:
            raise MeshError(f"invalid vertex id {v}")
        return v

    def star(self, v) -> np.ndarray:
        """Maximal simplices incident to ``v``."""
        v = self._check_vertex(v)
        return self.maximal_simplices[self._star_idx[self._star_ptr[v]:self._star_ptr[v + 1]]]

    def simplices(self, k: int) -> np.ndarray:
        """All ``k``-simplices as a sorted (n, k+1) array."""
        if k > self.d or k < 0:
            return np.empty((0, k + 1), dtype=np.int64)
        cols = list(combinations(range(self.d + 1), k + 1))
        allf = np.concatenate([self.maximal_simplices[:, c] for c in cols]) if cols else None
        if allf is None or not len(allf):
            return np.empty((0, k + 1), dtype=np.int64)
        return np.unique(allf, axis=0)

    @cached_property
    def edges(self) -> np.ndarray:
        e = self.simplices(1)
        e.setflags(write=False)
        return e

    def f_vector(self) -> list:
        return [len(self.simplices(k)) for k in range(self.d + 1)]

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))

    def as_subcomplex(self) -> SubComplex:
        return SubComplex(self, closure(map(tuple, self.maximal_simplices.tolist())))

    @cached_property
    def link_table(self):
        from .kernels import LinkTable
        return LinkTable.build(self)


# -- grids --------------------------------------------------------------------

def _cells(spec: GridSpec) -> np.ndarray:
    ranges = [np.arange(n if p else n - 1) for n, p in zip(spec.dims, spec.periodic)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _kuhn(spec: GridSpec) -> np.ndarray:
    dim = len(spec.dims)
    base = _cells(spec)
    tops = []
    for perm in permutations(range(dim)):
        corner = np.zeros(dim, dtype=np.int64)
        verts = [spec.index(base)]
        for axis in perm:
            corner[axis] += 1
            verts.append(spec.index(base + corner))
        tops.append(np.stack(verts, axis=-1))
    return np.concatenate(tops)


def freudenthal_2d(spec: GridSpec) -> SimplicialComplex:
    """Triangulate a 2D grid, splitting each quad along its (+1, +1) diagonal."""
    if len(spec.dims) != 2:
        raise MeshError("freudenthal_2d needs a 2-axis grid")
    return SimplicialComplex(2, _kuhn(spec), spec.vertex_count, grid=spec)


def freudenthal_3d(spec: GridSpec) -> SimplicialComplex:
    """Kuhn subdivision of each grid cube into 6 tetrahedra sharing the main diagonal."""
    if len(spec.dims) != 3:
        raise MeshError("freudenthal_3d needs a 3-axis grid")
    return SimplicialComplex(3, _kuhn(spec), spec.vertex_count, grid=spec)


def grid_complex(spec: GridSpec) -> SimplicialComplex:
    if len(spec.dims) == 1:
        return SimplicialComplex(1, _kuhn(spec), spec.vertex_count, grid=spec)
    return freudenthal_2d(spec) if len(spec.dims) == 2 else freudenthal_3d(spec)


def cycle_complex(n: int) -> SimplicialComplex:
    """Triangulated circle on ``n >= 3`` vertices."""
    return grid_complex(GridSpec((n,), (True,)))


# -- links ----------------------------------------------------------------------

def link(c: SimplicialComplex, v) -> SubComplex:
    v = c._check_vertex(v)
    opp = [tuple(x for x in s if x != v) for s in c.star(v).tolist()]
    return SubComplex(c, closure(o for o in opp if o))


def vertex_order_key(values, v) -> tuple:
    return (values[v], v)


def lower_link(c: SimplicialComplex, v, values) -> SubComplex:
    """Part of ``link(v)`` spanned by vertices below ``v`` in the (value, id) order."""
    v = c._check_vertex(v)
    values = np.asarray(values)
    key = (values[v], v)
    lk = link(c, v)
    lower = {u for (u,) in (s for s in lk.simplices if len(s) == 1)
             if (values[u], u) < key}
    return SubComplex(c, frozenset(s for s in lk.simplices if lower.issuperset(s)))


# -- validation ---------------------------------------------------------------

@dataclass
class ValidationReport:
    valid: bool
    closed: bool
    boundary_vertices: list
    failures: dict  # vertex -> reason

    def to_json(self) -> dict:
        return {"valid": self.valid, "closed": self.closed,
                "boundary_vertices": len(self.boundary_vertices),
                "failures": {str(k): v for k, v in sorted(self.failures.items())}}


def _classify_link(lk: SubComplex, d: int) -> str:
    """'sphere', 'disk' or a failure reason for the link of a vertex in a d-complex."""
    from .homology import reduced_betti

    k = d - 1
    tops = lk.of_dim(k)
    if not tops or lk.dim != k:
        return "link is not pure of dimension d-1"
    if any(not any(set(s) <= set(t) for t in tops) for s in lk.simplices):
        return "link is not pure of dimension d-1"
    if k == 0:
        n = len(tops)
        return "sphere" if n == 2 else ("disk" if n == 1 else f"link has {n} points")
    ridge_count = {}
    for t in tops:
        for r in combinations(t, k):
            ridge_count[r] = ridge_count.get(r, 0) + 1
    if any(n > 2 for n in ridge_count.values()):
        return "link ridge shared by more than two facets"
    closed = all(n == 2 for n in ridge_count.values())
    betti = reduced_betti(lk, d)
    if closed:
        want = [0] * (d + 1)
        want[d] = 1
        return "sphere" if betti == want else f"closed link with betti {betti}"
    return "disk" if not any(betti) else f"bounded link with betti {betti}"


def validate_manifold(c: SimplicialComplex, allow_boundary: bool = True) -> ValidationReport:
    """Check that every vertex link is a (d-1)-sphere, or a disk on the boundary.

    Uses a pseudomanifold + reduced Betti test, which is exact for d <= 3.
    """
    failures = {}
    boundary = []
    for v in range(c.vertex_count):
        if c._star_ptr[v] == c._star_ptr[v + 1]:
            failures[v] = "isolated vertex"
            continue
        kind = _classify_link(link(c, v), c.d)
        if kind == "disk":
            boundary.append(v)
            if not allow_boundary:
                failures[v] = "boundary vertex in closed mode"
        elif kind != "sphere":
            failures[v] = kind
    return ValidationReport(not failures, not boundary, boundary, failures)
