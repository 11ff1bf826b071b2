"""One-parameter PL families: fields sampled over time and vertex-curve crossings."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .mesh import GridSpec, SimplicialComplex, grid_complex


class FieldFormatError(ValueError):
    """Malformed field file; the message carries a line or byte offset."""


class TimeVaryingField:
    """Per-vertex samples ``values[v, k]`` at increasing ``times[k]``.

    Between samples each vertex curve is the linear interpolant.
    """

    def __init__(self, complex_: SimplicialComplex, values, times=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != complex_.vertex_count:
            raise ValueError(f"values must have shape ({complex_.vertex_count}, T), got {values.shape}")
        if values.shape[1] < 2:
            raise ValueError("a family needs at least two time samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        T = values.shape[1]
        times = np.linspace(0.0, 1.0, T) if times is None else np.asarray(times, dtype=float)
        if times.shape != (T,) or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing with one entry per sample")
        self.complex = complex_
        self.values = values
        self.times = times

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    @property
    def span(self) -> tuple:
        return float(self.times[0]), float(self.times[-1])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.n_times - 2)
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return k, w

    def at(self, t: float) -> np.ndarray:
        """Valuation f_t over all vertices."""
        k, w = self._locate(t)
        return (1 - w) * self.values[:, k] + w * self.values[:, k + 1]

    def value(self, v, t) -> np.ndarray:
        """f_t(v) for matching arrays of vertices and times."""
        v = np.asarray(v)
        k, w = self._locate(t)
        return (1 - w) * self.values[v, k] + w * self.values[v, k + 1]

    def window(self, start: int, length: int) -> "TimeVaryingField":
        """Samples ``start .. start+length-1`` re-parameterized to [0, 1]."""
        if start < 0 or length < 2 or start + length > self.n_times:
            raise ValueError(f"window [{start}, {start + length}) exceeds {self.n_times} samples")
        return TimeVaryingField(self.complex, self.values[:, start:start + length])

    def reversed(self) -> "TimeVaryingField":
        a, b = self.span
        return TimeVaryingField(self.complex, self.values[:, ::-1], (a + b - self.times)[::-1])


class RawCrossing(NamedTuple):
    t: float
    u: int
    v: int
    adjacent: bool


@dataclass
class EventList:
    """Crossings stored column-wise; ``key`` then ``key2`` order coincident events."""

    t: np.ndarray
    key: np.ndarray
    key2: np.ndarray
    u: np.ndarray
    v: np.ndarray
    adjacent: np.ndarray
    edge: np.ndarray  # edge id, -1 for non-adjacent pairs

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[RawCrossing]:
        for t, u, v, a in zip(self.t.tolist(), self.u.tolist(), self.v.tolist(),
                              self.adjacent.tolist()):
            yield RawCrossing(t, u, v, a)

    def take(self, idx) -> "EventList":
        return EventList(self.t[idx], self.key[idx], self.key2[idx], self.u[idx], self.v[idx],
                         self.adjacent[idx], self.edge[idx])

    @classmethod
    def concat(cls, parts) -> "EventList":
        parts = list(parts)
        if not parts:
            e = np.empty(0)
            i = np.empty(0, np.int64)
            return cls(e, e, e, i, i, np.empty(0, bool), i)
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("t", "key", "key2", "u", "v", "adjacent", "edge")))


def _pair_events(field: TimeVaryingField, pairs: np.ndarray, edge_ids: np.ndarray,
                 adjacent: bool, chunk_cells: int = 4_000_000) -> EventList:
    """Tie-broken sign changes of f(u) - f(v) on every sample interval."""
    times = field.times
    T = field.n_times
    P = len(pairs)
    out = []
    step = max(1, chunk_cells // max(P, 1))
    u, v = pairs[:, 0], pairs[:, 1]
    for k0 in range(0, T - 1, step):
        k1 = min(T - 1, k0 + step)
        d = field.values[u, k0:k1 + 1] - field.values[v, k0:k1 + 1]
        below = d <= 0  # u < v, so ties put u below
        flips = below[:, 1:] != below[:, :-1]
        pi, ki = np.nonzero(flips)
        if not len(pi):
            continue
        d0 = d[pi, ki]
        d1 = d[pi, ki + 1]
        ka = k0 + ki
        dt = times[ka + 1] - times[ka]
        t = times[ka] + dt * (d0 / (d0 - d1))
        t = np.clip(t, times[ka], times[ka + 1])
        t[d0 == 0] = times[ka[d0 == 0]]
        t[d1 == 0] = times[ka[d1 == 0] + 1]
        slope = (d1 - d0) / dt
        # crossing time of f + eps * id + eps^2 * id^2: t + eps * key + eps^2 * key2
        uu, vv = u[pi].astype(float), v[pi].astype(float)
        key = (vv - uu) / slope
        key2 = (vv * vv - uu * uu) / slope
        out.append(EventList(t, key, key2, u[pi].astype(np.int64), v[pi].astype(np.int64),
                             np.full(len(pi), adjacent), edge_ids[pi].astype(np.int64)))
    return EventList.concat(out)


def detect_crossings(field: TimeVaryingField, scope: str = "link") -> EventList:
    """All crossings of vertex curves, sorted by (t, u, v).

    ``scope='link'`` examines edges of the complex only; ``scope='all'``
    examines every vertex pair (small instances only).
    """
    c = field.complex
    edges = c.edges
    if scope in ("link", "LinkAdjacentOnly"):
        ev = _pair_events(field, edges, np.arange(len(edges)), True)
    elif scope in ("all", "AllPairs"):
        V = c.vertex_count
        iu, iv = np.triu_indices(V, k=1)
        pairs = np.stack([iu, iv], axis=1)
        eid = np.full(len(pairs), -1, dtype=np.int64)
        pos = np.searchsorted(edges[:, 0] * V + edges[:, 1], iu * V + iv)
        pos = np.clip(pos, 0, max(len(edges) - 1, 0))
        hit = len(edges) > 0
        is_edge = (edges[pos, 0] == iu) & (edges[pos, 1] == iv) if hit else np.zeros(len(iu), bool)
        eid[is_edge] = pos[is_edge]
        adj = _pair_events(field, pairs[is_edge], eid[is_edge], True)
        non = _pair_events(field, pairs[~is_edge], eid[~is_edge], False)
        ev = EventList.concat([adj, non])
    else:
        raise ValueError(f"unknown crossing scope {scope!r}")
    return ev.take(np.lexsort((ev.v, ev.u, ev.t)))


def enforce_genericity(events: EventList) -> EventList:
    """Order events so coincident crossings become successive pairwise swaps.

    Events sharing a time are ordered as in the field perturbed by
    ``eps * id + eps^2 * id^2`` (whose first-order term is the id tie-break),
    then by (u, v). Every event is kept.
    """
    return events.take(np.lexsort((events.v, events.u, events.key2, events.key, events.t)))


# -- synthetic data ----------------------------------------------------------------

def generate_gaussians(spec: GridSpec, paths: Sequence, sigma: float, amplitudes=None,
                       T: int = 50, complex_: SimplicialComplex | None = None,
                       times=None) -> TimeVaryingField:
    """Sum of moving Gaussian bumps sampled at ``T`` uniform times in [0, 1].

    Each path is a callable ``t -> centre`` in grid coordinates, or a fixed centre.
    Distances wrap on periodic axes.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    amplitudes = np.ones(len(paths)) if amplitudes is None else np.asarray(amplitudes, float)
    if len(amplitudes) != len(paths):
        raise ValueError("one amplitude per path is required")
    c = complex_ or grid_complex(spec)
    pos = spec.positions()
    dims = np.asarray(spec.dims, dtype=float)
    periodic = np.asarray(spec.periodic)
    times = np.linspace(0.0, 1.0, T) if times is None else np.asarray(times, float)
    values = np.zeros((spec.vertex_count, len(times)))
    for path, a in zip(paths, amplitudes):
        for k, t in enumerate(times):
            centre = np.asarray(path(t) if callable(path) else path, dtype=float)
            diff = np.abs(pos - centre)
            diff = np.where(periodic, np.minimum(diff % dims, dims - diff % dims), diff)
            values[:, k] += a * np.exp(-(diff ** 2).sum(axis=1) / (2 * sigma ** 2))
    return TimeVaryingField(c, values, times)


def circular_path(centre, radius: float, turns: float, phase: float = 0.0,
                  direction: int = 1) -> Callable:
    """Centre moving on a circle, ``turns`` revolutions over t in [0, 1]."""
    cx, cy = centre

    def path(t):
        a = phase + direction * 2 * np.pi * turns * t
        return (cx + radius * np.cos(a), cy + radius * np.sin(a))

    return path


# -- I/O -----------------------------------------------------------------------------

def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_raw(field: TimeVaryingField, path) -> tuple:
    """Write ``<path>.raw`` (float32 LE, time-major) and ``<path>.json`` sidecar."""
    path = Path(path)
    grid = field.complex.grid
    if grid is None:
        raise ValueError("raw format needs a grid complex")
    raw = path.with_suffix(".raw")
    side = path.with_suffix(".json")
    times = field.times
    dt = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0):
        raise ValueError("raw sidecar needs uniform time steps")
    _atomic_write(raw, np.ascontiguousarray(field.values.T, dtype="<f4").tobytes())
    meta = {"grid": list(grid.dims), "periodic": list(grid.periodic),
            "timesteps": field.n_times, "t0": float(times[0]), "dt": dt}
    _atomic_write(side, (json.dumps(meta, indent=1) + "\n").encode())
    return raw, side


def read_raw(path, complex_: SimplicialComplex | None = None) -> TimeVaryingField:
    path = Path(path)
    raw = path if path.suffix == ".raw" else path.with_suffix(".raw")
    side = raw.with_suffix(".json")
    try:
        meta = json.loads(side.read_text())
    except FileNotFoundError:
        raise FieldFormatError(f"{side}: sidecar not found") from None
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"{side}:{exc.lineno}: {exc.msg}") from None
    try:
        spec = GridSpec(tuple(meta["grid"]), tuple(meta.get("periodic", ())))
        T = int(meta["timesteps"])
        t0 = float(meta.get("t0", 0.0))
        dt = float(meta.get("dt", 1.0 / max(T - 1, 1)))
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"{side}: bad sidecar ({exc})") from None
    V = spec.vertex_count
    data = np.fromfile(raw, dtype="<f4")
    if data.size != V * T:
        raise FieldFormatError(f"{raw}: expected {V * T} floats ({4 * V * T} bytes), "
                               f"found {data.size} (offset {4 * data.size})")
    bad = np.nonzero(~np.isfinite(data))[0]
    if len(bad):
        raise FieldFormatError(f"{raw}: non-finite value at byte offset {4 * bad[0]}")
    values = data.reshape(T, V).T.astype(float)
    c = complex_ or grid_complex(spec)
    return TimeVaryingField(c, values, t0 + dt * np.arange(T))


def read_csv(path, complex_: SimplicialComplex) -> TimeVaryingField:
    """CSV with header ``vertex,t0,t1,...``; one row per vertex."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "vertex" or len(header) < 3:
            raise FieldFormatError(f"{path}:1: header must be 'vertex,t0,t1,...'")
        T = len(header) - 1
        values = np.full((complex_.vertex_count, T), np.nan)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != T + 1:
                raise FieldFormatError(f"{path}:{lineno}: expected {T + 1} columns, got {len(row)}")
            try:
                v = int(row[0])
                vals = [float(x) for x in row[1:]]
            except ValueError:
                raise FieldFormatError(f"{path}:{lineno}: bad number") from None
            if not 0 <= v < complex_.vertex_count:
                raise FieldFormatError(f"{path}:{lineno}: vertex {v} out of range")
            values[v] = vals
    missing = np.nonzero(np.isnan(values).any(axis=1))[0]
    if len(missing):
        raise FieldFormatError(f"{path}: no row for vertex {missing[0]}")
    return TimeVaryingField(complex_, values)


def write_csv(field: TimeVaryingField, path):
    path = Path(path)
    lines = ["vertex," + ",".join(f"t{k}" for k in range(field.n_times))]
    for v, row in enumerate(field.values):
        lines.append(f"{v}," + ",".join(repr(float(x)) for x in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())
