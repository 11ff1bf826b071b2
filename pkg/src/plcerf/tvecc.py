"""Time-varying Euler characteristic curves and the distance between families.

A surface E(s, t) only depends on the critical vertices, so it is read off
the Cerf diagram: E(s, t) = sum of arc weights over arcs live at t whose
vertex value f_t(v) is at most s.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cerf import CerfDiagram, compute_cerf_diagram
from .family import TimeVaryingField
from .plmorse import StepFunction


class UnboundedDistance(ValueError):
    """The s-integral diverges (Euler characteristics differ) and no s-range was given."""


def _diagram(x) -> CerfDiagram:
    if isinstance(x, StepSurface):
        return x.diagram
    if isinstance(x, CerfDiagram):
        return x
    if isinstance(x, TimeVaryingField):
        return compute_cerf_diagram(x)
    raise TypeError(f"expected a field, diagram or surface, got {type(x).__name__}")


@dataclass
class LocalTVECC:
    v: int
    times: np.ndarray          # sample times of the threshold curve
    thresholds: np.ndarray     # f_t(v) at those times
    weight_times: np.ndarray   # times where the weight changes (first entry: start)
    weights: np.ndarray        # weight from each change time on
    diagram: CerfDiagram

    def weight(self, t: float) -> int:
        dg = self.diagram
        n = dg.state_index(t)
        live = (dg.arc_v == self.v) & (dg.arc_open < n) & (n <= dg.arc_close)
        return int(dg.arc_weight[live].sum())

    def __call__(self, s: float, t: float) -> int:
        f = float(np.interp(t, self.times, self.thresholds))
        return self.weight(t) if f <= s else 0


def local_tvecc(x, v: int) -> LocalTVECC:
    dg = _diagram(x)
    f = dg.field
    sel = np.nonzero(dg.arc_v == v)[0]
    order = np.argsort(dg.arc_t1[sel], kind="stable")
    sel = sel[order]
    weights = dg.arc_weight
    wt = [f.times[0]]
    w = [0]
    for a in sel.tolist():
        wt.extend([float(dg.arc_t1[a]), float(dg.arc_t2[a])])
        w.extend([int(weights[a]), 0])
    return LocalTVECC(int(v), f.times.copy(), f.values[v].copy(), np.asarray(wt), np.asarray(w), dg)


class StepSurface:
    """E(s, t) on a time window of a diagram, re-parameterizable to [0, 1]."""

    def __init__(self, diagram: CerfDiagram, t_lo: float | None = None,
                 t_hi: float | None = None):
        self.diagram = diagram
        a, b = diagram.field.span
        self.t_lo = a if t_lo is None else float(t_lo)
        self.t_hi = b if t_hi is None else float(t_hi)
        if not a <= self.t_lo < self.t_hi <= b:
            raise ValueError("surface window outside the family's time range")
        w = diagram.arc_weight
        self._arcs = np.nonzero(w != 0)[0]
        self._w = w[self._arcs]

    @property
    def chi(self) -> int:
        return int(self.diagram.arc_weight[self.diagram.live_arcs(self.t_lo)].sum())

    def window(self, t_lo: float, t_hi: float) -> "StepSurface":
        return StepSurface(self.diagram, t_lo, t_hi)

    def to_time(self, u):
        return self.t_lo + np.asarray(u, dtype=float) * (self.t_hi - self.t_lo)

    def slabs(self) -> np.ndarray:
        """Slab boundaries in [0, 1]: arc ends and sample times inside the window."""
        dg = self.diagram
        ts = np.concatenate([dg.arc_t1[self._arcs], dg.arc_t2[self._arcs], dg.field.times,
                             [self.t_lo, self.t_hi]])
        ts = ts[(ts >= self.t_lo) & (ts <= self.t_hi)]
        return np.unique((ts - self.t_lo) / (self.t_hi - self.t_lo))

    def items(self, u_mid: float):
        """Live (vertex, weight) pairs at window-time ``u_mid``."""
        dg = self.diagram
        n = dg.state_index(self.to_time(u_mid))
        a = self._arcs
        live = (dg.arc_open[a] < n) & (n <= dg.arc_close[a])
        return dg.arc_v[a[live]], self._w[live]

    def at(self, u: float) -> StepFunction:
        v, w = self.items(u)
        t = self.to_time(u)
        return StepFunction.from_jumps(self.diagram.field.value(v, np.full(len(v), t)), w)

    def __call__(self, s, u):
        return self.at(u)(s)

    def sample(self, us) -> tuple:
        """Padded (values, weights) of live arcs at each window-time in ``us``."""
        dg = self.diagram
        us = np.asarray(us, dtype=float)
        ts = self.to_time(us)
        n = dg.state_index(ts)
        a = self._arcs
        ao, ac = dg.arc_open[a], dg.arc_close[a]
        rows, cols = [], []
        step = max(1, 2_000_000 // max(len(a), 1))
        for k0 in range(0, len(us), step):
            nk = n[k0:k0 + step, None]
            r, c = np.nonzero((ao[None, :] < nk) & (nk <= ac[None, :]))
            rows.append(r + k0)
            cols.append(c)
        rows = np.concatenate(rows) if rows else np.empty(0, np.int64)
        cols = np.concatenate(cols) if cols else np.empty(0, np.int64)
        counts = np.bincount(rows, minlength=len(us))
        m = int(counts.max()) if len(counts) else 0
        slot = np.arange(len(rows)) - np.repeat(np.cumsum(counts) - counts, counts)
        vals = np.full((len(us), m), np.nan)
        wts = np.zeros((len(us), m), dtype=np.int64)
        vals[rows, slot] = dg.field.value(dg.arc_v[a[cols]], ts[rows])
        wts[rows, slot] = self._w[cols]
        return vals, wts

    def value_range(self) -> tuple:
        dg = self.diagram
        f = dg.field
        k = (f.times >= self.t_lo) & (f.times <= self.t_hi)
        vals = np.concatenate([f.values[:, k].ravel(), f.at(self.t_lo), f.at(self.t_hi)])
        return float(vals.min()), float(vals.max())


def tvecc(x) -> StepSurface:
    return StepSurface(_diagram(x))


def _surface(x) -> StepSurface:
    return x if isinstance(x, StepSurface) else tvecc(x)


# -- distance ---------------------------------------------------------------------

def _l1_rows(vals: np.ndarray, wts: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Exact integral over [lo, hi] of |sum_j w_j [vals_j <= s]| for each row.

    NaN values are padding.
    """
    if vals.shape[1] == 0:
        return np.zeros(len(vals))
    v = np.clip(np.where(np.isnan(vals), hi, vals), lo, hi)
    w = np.where(np.isnan(vals), 0, wts)
    order = np.argsort(v, axis=1, kind="stable")
    v = np.take_along_axis(v, order, axis=1)
    cum = np.cumsum(np.take_along_axis(w, order, axis=1), axis=1)
    gaps = np.diff(np.concatenate([v, np.full((len(v), 1), hi)], axis=1), axis=1)
    return (np.abs(cum) * gaps).sum(axis=1)


def _limits(sf: StepSurface, sg: StepSurface, s_range) -> tuple:
    if s_range is not None:
        lo, hi = map(float, s_range)
        if not hi > lo:
            raise ValueError("s-range must be increasing")
        return lo, hi
    if sf.chi != sg.chi:
        raise UnboundedDistance(
            f"Euler characteristics differ ({sf.chi} vs {sg.chi}); pass an explicit s-range")
    lo_f, hi_f = sf.value_range()
    lo_g, hi_g = sg.value_range()
    return min(lo_f, lo_g), max(hi_f, hi_g)


def _slab_integral(sf: StepSurface, sg: StepSurface, u0: float, u1: float,
                   lo: float, hi: float) -> float:
    um = 0.5 * (u0 + u1)
    vf, wf = sf.items(um)
    vg, wg = sg.items(um)
    ff, fg = sf.diagram.field, sg.diagram.field
    t0f, t1f = sf.to_time(u0), sf.to_time(u1)
    t0g, t1g = sg.to_time(u0), sg.to_time(u1)
    a = np.concatenate([ff.value(vf, np.full(len(vf), t0f)), fg.value(vg, np.full(len(vg), t0g))])
    b = np.concatenate([ff.value(vf, np.full(len(vf), t1f)), fg.value(vg, np.full(len(vg), t1g))])
    w = np.concatenate([wf, -wg])
    if not len(w):
        return 0.0
    # lines s = a + (b - a) * x for x in [0, 1]; include the clip levels as lines
    a_all = np.concatenate([a, [lo, hi]])
    b_all = np.concatenate([b, [lo, hi]])
    da = a_all[:, None] - a_all[None, :]
    db = (b_all - a_all)[:, None] - (b_all - a_all)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = -da / db
    x = x[np.isfinite(x) & (x > 0) & (x < 1)]
    cuts = np.unique(np.concatenate([[0.0, 1.0], x]))
    mids = 0.5 * (cuts[1:] + cuts[:-1])
    vals = a[None, :] + (b - a)[None, :] * mids[:, None]
    wts = np.broadcast_to(w, vals.shape)
    prof = _l1_rows(vals, wts, lo, hi)
    return float((u1 - u0) * np.sum(prof * np.diff(cuts)))


def distance(f, g, quadrature: str = "sampled", n_t: int | None = None,
             s_range=None) -> float:
    """Integral over s and t in [0, 1] of |E_f - E_g| (both families re-parameterized).

    ``quadrature='exact'`` integrates piecewise-linear slabs in closed form;
    ``'sampled'`` integrates exactly in s at ``n_t`` uniform times and uses
    the trapezoid rule in t.
    """
    sf, sg = _surface(f), _surface(g)
    lo, hi = _limits(sf, sg, s_range)
    if quadrature == "exact":
        cuts = np.unique(np.concatenate([sf.slabs(), sg.slabs()]))
        return float(sum(_slab_integral(sf, sg, u0, u1, lo, hi)
                         for u0, u1 in zip(cuts[:-1].tolist(), cuts[1:].tolist()) if u1 > u0))
    if quadrature != "sampled":
        raise ValueError(f"unknown quadrature {quadrature!r}")
    if n_t is None:
        n_t = default_samples(sf, sg)
    us = np.linspace(0.0, 1.0, int(n_t))
    prof = _sampled_profile(sf, sg, us, lo, hi)
    return float(np.sum(0.5 * (prof[1:] + prof[:-1]) * np.diff(us)))


def default_samples(*surfaces, substeps: int = 16) -> int:
    """``substeps`` points per sample interval of the longest window.

    The s-integrated profile is continuous in t (E only jumps where two live
    values coincide), so the count need not grow with the number of events.
    """
    n = 0
    for s in surfaces:
        f = s.diagram.field
        k = np.count_nonzero((f.times > s.t_lo) & (f.times < s.t_hi)) + 1
        n = max(n, k)
    return substeps * n + 1


def _sampled_profile(sf, sg, us, lo, hi, chunk: int = 4096) -> np.ndarray:
    out = []
    for k in range(0, len(us), chunk):
        vf, wf = sf.sample(us[k:k + chunk])
        vg, wg = sg.sample(us[k:k + chunk])
        out.append(_l1_rows(np.concatenate([vf, vg], axis=1),
                            np.concatenate([wf, -wg], axis=1), lo, hi))
    return np.concatenate(out)


# -- windows ----------------------------------------------------------------------

@dataclass
class DistanceMatrix:
    window: int
    shift: int
    start: int
    entries: np.ndarray

    @property
    def starts(self) -> np.ndarray:
        return self.start + self.shift * np.arange(len(self.entries))

    def to_csv(self) -> str:
        head = "window_start," + ",".join(str(s) for s in self.starts)
        rows = [head] + [f"{s}," + ",".join(repr(float(x)) for x in row)
                         for s, row in zip(self.starts.tolist(), self.entries)]
        return "\n".join(rows) + "\n"


def distance_matrix(x, window: int, shift: int, start: int = 0,
                    quadrature: str = "sampled", substeps: int = 8,
                    threads: int = 1) -> DistanceMatrix:
    """Distances between all windows of ``window`` samples, ``shift`` samples apart.

    Sampled quadrature places ``substeps`` points per sample interval, so
    every window samples the same global time grid and each grid point is
    evaluated once.
    """
    dg = _diagram(x)
    f = dg.field
    T = f.n_times
    if window < 2 or window > T:
        raise ValueError(f"window {window} must lie in [2, {T}]")
    if shift < 1:
        raise ValueError("shift must be at least 1")
    if start < 0 or start + window > T:
        raise ValueError(f"start {start} leaves no complete window in {T} samples")
    n = (T - window - start) // shift + 1
    starts = start + shift * np.arange(n)
    full = StepSurface(dg)
    surfaces = [full.window(f.times[s], f.times[s + window - 1]) for s in starts.tolist()]
    lo, hi = full.value_range()
    M = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    if quadrature == "exact":
        def entry(p):
            i, j = p
            return distance(surfaces[i], surfaces[j], "exact", s_range=(lo, hi))
    else:
        # global grid: sample k of the field plus substeps in between
        m = int(substeps)
        grid_u = np.arange((T - 1) * m + 1) / m        # in sample units
        k = np.minimum(grid_u.astype(int), T - 2)
        grid_t = f.times[k] + (grid_u - k) * (f.times[k + 1] - f.times[k])
        u_full = (grid_t - full.t_lo) / (full.t_hi - full.t_lo)
        vals, wts = full.sample(u_full)
        n_t = (window - 1) * m + 1
        wq = np.full(n_t, 1.0 / (n_t - 1))
        wq[[0, -1]] *= 0.5

        def entry(p):
            i, j = p
            ri = starts[i] * m + np.arange(n_t)
            rj = starts[j] * m + np.arange(n_t)
            prof = _l1_rows(np.concatenate([vals[ri], vals[rj]], axis=1),
                            np.concatenate([wts[ri], -wts[rj]], axis=1), lo, hi)
            return float(prof @ wq)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            values = list(ex.map(entry, pairs))
    else:
        values = [entry(p) for p in pairs]
    for (i, j), val in zip(pairs, values):
        M[i, j] = M[j, i] = val
    return DistanceMatrix(int(window), int(shift), int(start), M)


@dataclass
class PeriodEstimate:
    lag: int | None            # in windows
    period: float | None       # lag * shift * time step
    profile: np.ndarray        # mean of band k, index 0 = diagonal

    @property
    def found(self) -> bool:
        return self.lag is not None


def estimate_period(m, time_step: float = 1.0, rel_tol: float = 0.05) -> PeriodEstimate:
    """Smallest lag whose band mean is a local minimum close to the best one.

    Band ``k`` is the k-th off-diagonal. Among local minima of the band-mean
    profile, those within ``rel_tol`` of the profile range above the lowest
    are candidates; the smallest lag wins, so multiples of the period lose
    to the period itself while a clearly higher half-period band does not
    qualify.
    """
    M = m.entries if isinstance(m, DistanceMatrix) else np.asarray(m, dtype=float)
    shift = m.shift if isinstance(m, DistanceMatrix) else 1
    n = len(M)
    if n < 4:
        raise ValueError("period estimation needs at least a 4x4 matrix")
    kmax = n - 2
    prof = np.array([np.mean(np.diagonal(M, k)) for k in range(kmax + 1)])
    scale = prof.max()
    if scale <= 1e-12 * max(1.0, float(np.abs(M).max())):
        return PeriodEstimate(None, None, prof)
    minima = [k for k in range(1, kmax + 1)
              if prof[k] < prof[k - 1] and (k == kmax or prof[k] <= prof[k + 1])]
    if not minima:
        return PeriodEstimate(None, None, prof)
    best = min(prof[k] for k in minima)
    lag = min(k for k in minima if prof[k] <= best + rel_tol * (scale - best))
    return PeriodEstimate(lag, lag * shift * time_step, prof)
