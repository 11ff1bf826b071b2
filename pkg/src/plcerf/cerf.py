"""Cerf diagrams: sweep of vertex-curve crossings, crossing taxonomy and tracking.

The sweep state after ``n`` processed events is called state ``n``. An arc
opened by event ``i`` and closed by event ``j`` is live in states
``i+1 .. j`` (the initial arcs use ``i = -1``, arcs still open at the end
use ``j = N``). Time queries map to states through the event order, so
coincident events are resolved exactly as the sweep resolved them.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .family import EventList, RawCrossing, TimeVaryingField, detect_crossings, enforce_genericity
from .kernels import all_betti, sweep
from .plmorse import VertexClass, euler_weights


class NonGenericFamily(RuntimeError):
    """Strict mode: the family is not PL Morse between crossings."""


class UnclassifiableCrossing(NonGenericFamily):
    """A crossing whose before/after classes fit none of the seven kinds."""


class CrossingKind(enum.IntEnum):
    CriticalCritical = 0
    RegularRegular = 1
    CriticalRegular = 2
    CriticalRegularSwitch = 3
    IndexSwap = 4
    Birth = 5
    Death = 6


UNCLASSIFIED = -1


def _kind_name(code: int) -> str:
    return "Unclassifiable" if code == UNCLASSIFIED else CrossingKind(code).name


class CerfArc(NamedTuple):
    t1: float
    val1: float
    t2: float
    val2: float
    v: int
    beta: tuple


@dataclass(frozen=True)
class ClassifiedCrossing:
    event: RawCrossing
    kind: CrossingKind | None
    before: tuple  # (VertexClass of u, VertexClass of v)
    after: tuple
    betti_before: tuple  # (beta(u), beta(v)) as tuples
    betti_after: tuple


# -- taxonomy -------------------------------------------------------------------------

def classify_crossing(before, after) -> CrossingKind:
    """Kind of a crossing from the classes of (u, v) before and after it."""
    bu, bv = (VertexClass.of(getattr(x, "betti", x)) for x in before)
    au, av = (VertexClass.of(getattr(x, "betti", x)) for x in after)
    code = _classify_codes(*(np.asarray([x.betti]) for x in (bu, bv, au, av)))[0]
    if code == UNCLASSIFIED:
        raise UnclassifiableCrossing(f"({bu}, {bv}) -> ({au}, {av})")
    return CrossingKind(int(code))


def _classify_codes(bu, bv, au, av) -> np.ndarray:
    """Vectorized crossing kinds from (N, d+1) Betti arrays; -1 when unclassifiable."""
    def crit(b):
        return b.any(axis=1)

    def unit(b):
        return (b.sum(axis=1) == 1) & (b.max(axis=1) == 1)

    def same(a, b):
        return (a == b).all(axis=1)

    c = [crit(x) for x in (bu, bv, au, av)]
    degenerate = np.zeros(len(bu), bool)
    for x, cx in zip((bu, bv, au, av), c):
        degenerate |= cx & ~unit(x)
    cbu, cbv, cau, cav = c
    keep_u, keep_v = same(bu, au), same(bv, av)
    out = np.full(len(bu), UNCLASSIFIED, dtype=np.int64)
    rr = ~cbu & ~cbv
    cc = cbu & cbv
    mixed = cbu ^ cbv
    out[rr & ~cau & ~cav] = CrossingKind.RegularRegular
    out[cc & keep_u & keep_v] = CrossingKind.CriticalCritical
    out[mixed & keep_u & keep_v] = CrossingKind.CriticalRegular
    out[mixed & (cbu != cau) & (cbv != cav)] = CrossingKind.CriticalRegularSwitch
    swap = cc & cau & cav & same(bu, av) & same(bv, au) & ~same(bu, bv)
    out[swap] = CrossingKind.IndexSwap
    out[rr & cau & cav] = CrossingKind.Birth
    out[cc & ~cau & ~cav] = CrossingKind.Death
    out[degenerate] = UNCLASSIFIED
    return out


def verify_betti_update(x: ClassifiedCrossing, d: int | None = None) -> bool:
    """Alternating Betti change at v equals minus the change at u."""
    (bu, bv), (au, av) = x.betti_before, x.betti_after
    w = euler_weights(np.asarray([bu, bv, au, av]))
    return int(w[3] - w[1]) == -int(w[2] - w[0])


# -- diagram --------------------------------------------------------------------------

@dataclass
class CerfDiagram:
    field: TimeVaryingField
    events: EventList
    kinds: np.ndarray            # per event, CrossingKind code or -1
    betti_before: np.ndarray     # (N, 2, d+1): u, v
    betti_after: np.ndarray
    initial_betti: np.ndarray    # (V, d+1) at the first sample
    arc_t1: np.ndarray
    arc_t2: np.ndarray
    arc_v: np.ndarray
    arc_beta: np.ndarray         # (A, d+1)
    arc_open: np.ndarray         # opening event index, -1 at the start
    arc_close: np.ndarray        # closing event index, N at the end

    @property
    def d(self) -> int:
        return self.field.complex.d

    @property
    def n_arcs(self) -> int:
        return len(self.arc_t1)

    @property
    def arc_val1(self) -> np.ndarray:
        return self.field.value(self.arc_v, self.arc_t1)

    @property
    def arc_val2(self) -> np.ndarray:
        return self.field.value(self.arc_v, self.arc_t2)

    @property
    def arc_weight(self) -> np.ndarray:
        return euler_weights(self.arc_beta)

    @property
    def arc_index(self) -> np.ndarray:
        """Morse index of each arc, -1 for degenerate betas."""
        b = self.arc_beta
        unit = (b.sum(axis=1) == 1) & (b.max(axis=1) == 1)
        return np.where(unit, b.argmax(axis=1), -1)

    @property
    def arcs(self) -> list:
        v1, v2 = self.arc_val1, self.arc_val2
        return [CerfArc(float(a), float(b), float(c), float(e), int(v), tuple(int(x) for x in beta))
                for a, b, c, e, v, beta in zip(self.arc_t1, v1, self.arc_t2, v2,
                                                self.arc_v, self.arc_beta)]

    @property
    def crossings(self) -> list:
        out = []
        for i, ev in enumerate(self.events):
            bb = tuple(tuple(int(x) for x in b) for b in self.betti_before[i])
            ba = tuple(tuple(int(x) for x in b) for b in self.betti_after[i])
            code = int(self.kinds[i])
            out.append(ClassifiedCrossing(
                ev, None if code == UNCLASSIFIED else CrossingKind(code),
                tuple(VertexClass(b) for b in bb), tuple(VertexClass(b) for b in ba), bb, ba))
        return out

    def betti_update_holds(self) -> np.ndarray:
        """Per-event truth of the alternating-sum relation, exact integers."""
        wb = euler_weights(self.betti_before)
        wa = euler_weights(self.betti_after)
        return (wa[:, 1] - wb[:, 1]) == -(wa[:, 0] - wb[:, 0])

    def state_index(self, t) -> np.ndarray:
        """Number of events that precede time ``t`` in the perturbed order."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo = np.searchsorted(self.events.t, t, side="left")
        hi = np.searchsorted(self.events.t, t, side="right")
        n = lo.copy()
        for i in np.nonzero(hi > lo)[0].tolist():
            n[i] += int(np.count_nonzero(self.events.key[lo[i]:hi[i]] < 0))
        return n[0] if scalar else n

    def live_arcs(self, t) -> np.ndarray:
        n = int(self.state_index(t))
        return np.nonzero((self.arc_open < n) & (n <= self.arc_close))[0]

    def critical_at(self, t) -> dict:
        """vertex -> Betti tuple of arcs live at time ``t``."""
        return {int(self.arc_v[a]): tuple(int(x) for x in self.arc_beta[a])
                for a in self.live_arcs(t)}

    def unclassified(self) -> np.ndarray:
        return np.nonzero(self.kinds == UNCLASSIFIED)[0]

    def filter_index(self, index: int) -> np.ndarray:
        return np.nonzero(self.arc_index == index)[0]

    # -- exports ----------------------------------------------------------------

    def arcs_csv(self, index: int | None = None) -> str:
        sel = np.arange(self.n_arcs) if index is None else self.filter_index(index)
        head = "t1,val1,t2,val2,vertex," + ",".join(f"beta{i}" for i in range(self.d + 1))
        v1, v2 = self.arc_val1, self.arc_val2
        rows = [head]
        for a in sel.tolist():
            beta = ",".join(str(int(x)) for x in self.arc_beta[a])
            rows.append(f"{float(self.arc_t1[a])!r},{float(v1[a])!r},{float(self.arc_t2[a])!r},"
                        f"{float(v2[a])!r},{int(self.arc_v[a])},{beta}")
        return "\n".join(rows) + "\n"

    def crossings_csv(self) -> str:
        ev = self.events
        names = [_kind_name(int(k)) for k in range(-1, 7)]
        rows = ["t,u,v,kind"]
        rows.extend(f"{t!r},{u},{v},{names[k + 1]}" for t, u, v, k in
                    zip(ev.t.tolist(), ev.u.tolist(), ev.v.tolist(), self.kinds.tolist()))
        return "\n".join(rows) + "\n"

    def summary(self) -> dict:
        counts = {_kind_name(k): int(np.count_nonzero(self.kinds == k)) for k in range(-1, 7)}
        return {"events": len(self.events), "arcs": self.n_arcs, "kinds": counts}


def compute_cerf_diagram(field: TimeVaryingField, strict: bool = False,
                         impl=None) -> CerfDiagram:
    """Sweep link-adjacent crossings in order, recomputing both lower links at each.

    Lenient mode (default) keeps degenerate Betti vectors on arcs and marks
    the crossings touching them as unclassifiable; strict mode raises.
    """
    c = field.complex
    table = c.link_table
    events = enforce_genericity(detect_crossings(field, "link"))
    u_below = table.orientation(field.values[:, 0])
    betti = all_betti(table, u_below, c, impl)
    initial = betti.copy()
    before, after = sweep(table, u_below, betti, events.edge, c, impl)
    N = len(events)
    kinds = _classify_codes(before[:, 0], before[:, 1], after[:, 0], after[:, 1]) \
        if N else np.zeros(0, np.int64)

    # each vertex's beta history: initial state, then every change, in event order
    ev_idx = np.repeat(np.arange(N), 2)
    verts = np.stack([events.u, events.v], axis=1).ravel()
    new = after.reshape(2 * N, c.d + 1)
    changed = (before.reshape(2 * N, c.d + 1) != new).any(axis=1)
    V = c.vertex_count
    h_vert = np.concatenate([np.arange(V), verts[changed]])
    h_event = np.concatenate([np.full(V, -1), ev_idx[changed]])
    h_beta = np.concatenate([initial, new[changed]])
    h_time = np.concatenate([np.full(V, field.times[0]), events.t[ev_idx[changed]]])
    order = np.lexsort((h_event, h_vert))
    h_vert, h_event, h_beta, h_time = h_vert[order], h_event[order], h_beta[order], h_time[order]
    last = np.ones(len(h_vert), bool)
    last[:-1] = h_vert[1:] != h_vert[:-1]
    end_event = np.where(last, N, np.roll(h_event, -1))
    end_time = np.where(last, field.times[-1], np.roll(h_time, -1))
    keep = h_beta.any(axis=1)
    diagram = CerfDiagram(field, events, kinds, before, after, initial,
                          h_time[keep], end_time[keep], h_vert[keep], h_beta[keep],
                          h_event[keep], end_event[keep])
    if strict:
        bad = diagram.unclassified()
        if len(bad):
            i = int(bad[0])
            raise UnclassifiableCrossing(
                f"crossing of {int(events.u[i])} and {int(events.v[i])} at t={events.t[i]!r}: "
                f"{before[i].tolist()} -> {after[i].tolist()}")
        deg = np.nonzero(diagram.arc_index < 0)[0]
        if len(deg):
            a = int(deg[0])
            raise NonGenericFamily(f"degenerate critical vertex {int(diagram.arc_v[a])} with "
                                   f"beta {diagram.arc_beta[a].tolist()} on "
                                   f"[{diagram.arc_t1[a]!r}, {diagram.arc_t2[a]!r}]")
    return diagram


# -- tracking graph -----------------------------------------------------------------------

@dataclass
class TrackingGraph:
    diagram: CerfDiagram
    # (src, dst, kind, t, event); birth/death edges join the two arcs of the pair
    edges: list = field(default_factory=list)
    born: dict = field(default_factory=dict)   # arc -> event index of its Birth
    died: dict = field(default_factory=dict)   # arc -> event index of its Death

    @property
    def n_nodes(self) -> int:
        return self.diagram.n_arcs

    def successors(self, kinds=("move", "continuation")) -> dict:
        out = {}
        for s, t, k, *_ in self.edges:
            if k in kinds:
                out.setdefault(s, []).append(t)
        return out

    def to_json(self) -> dict:
        dg = self.diagram
        cols = zip(dg.arc_v.tolist(), dg.arc_t1.tolist(), dg.arc_t2.tolist(),
                   dg.arc_beta.tolist(), dg.arc_index.tolist())
        nodes = [{"id": a, "vertex": v, "t1": t1, "t2": t2, "beta": beta, "index": i,
                  "born": a in self.born, "died": a in self.died}
                 for a, (v, t1, t2, beta, i) in enumerate(cols)]
        edges = [{"src": s, "dst": t, "kind": k, "t": float(tt), "event": int(e)}
                 for s, t, k, tt, e in self.edges]
        return {"nodes": nodes, "edges": edges}


def tracking_graph(diagram: CerfDiagram) -> TrackingGraph:
    """Features are arcs; crossings add move, swap, birth, death and continuation edges."""
    opened, closed = {}, {}
    for a, (o, cl, v) in enumerate(zip(diagram.arc_open.tolist(), diagram.arc_close.tolist(),
                                       diagram.arc_v.tolist())):
        if o >= 0:
            opened[(o, v)] = a
        if cl < len(diagram.events):
            closed[(cl, v)] = a
    g = TrackingGraph(diagram)
    ev = diagram.events
    interesting = np.nonzero(diagram.kinds != CrossingKind.RegularRegular)[0]
    for i in interesting.tolist():
        k = int(diagram.kinds[i])
        u, v, t = int(ev.u[i]), int(ev.v[i]), float(ev.t[i])
        if k == CrossingKind.CriticalRegularSwitch:
            src = closed.get((i, u), closed.get((i, v)))
            dst = opened.get((i, v), opened.get((i, u)))
            g.edges.append((src, dst, "move", t, i))
        elif k == CrossingKind.IndexSwap:
            g.edges.append((closed[(i, u)], opened[(i, v)], "move", t, i))
            g.edges.append((closed[(i, v)], opened[(i, u)], "move", t, i))
        elif k == CrossingKind.Birth:
            a, b = opened[(i, u)], opened[(i, v)]
            g.born[a] = g.born[b] = i
            g.edges.append((a, b, "birth", t, i))
        elif k == CrossingKind.Death:
            a, b = closed[(i, u)], closed[(i, v)]
            g.died[a] = g.died[b] = i
            g.edges.append((a, b, "death", t, i))
        elif k == UNCLASSIFIED:
            for w in (u, v):
                if (i, w) in closed and (i, w) in opened:
                    g.edges.append((closed[(i, w)], opened[(i, w)], "continuation", t, i))
    return g


# -- tracks ---------------------------------------------------------------------------------

@dataclass
class Track:
    nodes: list                  # arc ids in time order
    birth: float
    death: float
    born_by: str                 # 'birth', 'start' or 'other'
    died_by: str                 # 'death', 'end' or 'other'
    points: list                 # (t, vertex, value)

    def position_at(self, t: float):
        """Vertex carrying the feature at time ``t`` (None outside the lifetime)."""
        best = None
        for tt, v, _ in self.points:
            if tt <= t:
                best = v
            else:
                break
        return best if self.birth <= t <= self.death else None

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


def _track_points(diagram: CerfDiagram, nodes: list) -> list:
    f = diagram.field
    pts = []
    for a in nodes:
        t1, t2, v = float(diagram.arc_t1[a]), float(diagram.arc_t2[a]), int(diagram.arc_v[a])
        inner = f.times[(f.times > t1) & (f.times < t2)]
        ts = np.concatenate([[t1], inner, [t2]])
        vals = f.value(np.full(len(ts), v), ts)
        pts.extend((float(t), v, float(x)) for t, x in zip(ts, vals))
    return pts


def index_tracks(g: TrackingGraph, index: int) -> list:
    """Chains of arcs with the given Morse index joined by move/continuation edges."""
    dg = g.diagram
    sel = set(dg.filter_index(index).tolist())
    nxt, prv = {}, {}
    for s, t, k, *_ in g.edges:
        if k in ("move", "continuation") and s in sel and t in sel:
            nxt[s] = t
            prv[t] = s
    starts = sorted((a for a in sel if a not in prv),
                    key=lambda a: (float(dg.arc_t1[a]), int(dg.arc_v[a])))
    n_events = len(dg.events)
    tracks = []
    for a in starts:
        chain = [a]
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
        first, last = chain[0], chain[-1]
        born = "birth" if first in g.born else ("start" if dg.arc_open[first] < 0 else "other")
        died = "death" if last in g.died else ("end" if dg.arc_close[last] >= n_events else "other")
        tracks.append(Track(chain, float(dg.arc_t1[first]), float(dg.arc_t2[last]), born, died,
                            _track_points(dg, chain)))
    return tracks


def maxima_tracks(g: TrackingGraph, d: int | None = None) -> list:
    return index_tracks(g, g.diagram.d if d is None else d)


def _grid_distance(c, a, seed) -> float:
    grid = c.grid
    if grid is None:
        raise ValueError("seed search needs grid positions")
    p = grid.coords(a).astype(float)
    seed = np.asarray(seed, dtype=float)
    if seed.shape != p.shape:
        raise ValueError(f"seed needs {len(p)} coordinates")
    diff = np.abs(p - seed)
    dims = np.asarray(grid.dims, float)
    diff = np.where(grid.periodic, np.minimum(diff, dims - diff), diff)
    return float(np.sqrt((diff ** 2).sum()))


def seed_search(g: TrackingGraph, seed, radius: float, t: float, after: bool = False,
                index: int | None = None) -> list:
    """Tracks near ``seed`` at time ``t``; with ``after`` also tracks born near it later."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    c = g.diagram.field.complex
    grid = c.grid
    if grid is not None:
        s = np.asarray(seed, float)
        if s.shape != (len(grid.dims),) or np.any(s < 0) or np.any(s > np.asarray(grid.dims) - 1):
            raise ValueError(f"seed {list(s)} lies outside the grid")
    out = []
    for tr in index_tracks(g, g.diagram.d if index is None else index):
        if tr.birth <= t <= tr.death:
            v = tr.position_at(t)
            if v is not None and _grid_distance(c, v, seed) <= radius:
                out.append(tr)
        elif after and tr.birth > t:
            if _grid_distance(c, tr.points[0][1], seed) <= radius:
                out.append(tr)
    return out


def tracking_json(g: TrackingGraph) -> str:
    return json.dumps(g.to_json(), indent=1, sort_keys=True) + "\n"
