import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plcerf.cerf import (CrossingKind, NonGenericFamily, UnclassifiableCrossing,
                         classify_crossing, compute_cerf_diagram, maxima_tracks, seed_search,
                         tracking_graph, tracking_json, verify_betti_update)
from plcerf.family import TimeVaryingField, detect_crossings, generate_gaussians
from plcerf.mesh import GridSpec, cycle_complex, grid_complex
from plcerf.plmorse import euler_weights, index_vectors, is_pl_morse

from conftest import random_field, random_gaussians

R, MIN, SAD, MAX = (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)


def rotating_profile(steps=4):
    """Profile (3, 2, 0, 1) rotated one vertex per sample around a 4-cycle."""
    p = np.array([3.0, 2.0, 0.0, 1.0])
    vals = np.stack([np.roll(p, k) for k in range(steps)], axis=1)
    return TimeVaryingField(cycle_complex(4), vals)


def all_state_times(dg):
    """Sample times plus midpoints between distinct event times."""
    f = dg.field
    ts = np.unique(np.concatenate([f.times, dg.events.t]))
    return np.concatenate([f.times, (ts[1:] + ts[:-1]) / 2])


# -- taxonomy ---------------------------------------------------------------------

@pytest.mark.parametrize("before,after,kind", [
    ((R, R), ((0, 1, 0), MAX), CrossingKind.Birth),
    ((MAX, SAD), (R, R), CrossingKind.Death),
    ((MIN, SAD), (SAD, MIN), CrossingKind.IndexSwap),
    ((MAX, R), (R, MAX), CrossingKind.CriticalRegularSwitch),
    ((MAX, R), (MAX, R), CrossingKind.CriticalRegular),
    ((MIN, MAX), (MIN, MAX), CrossingKind.CriticalCritical),
    ((R, R), (R, R), CrossingKind.RegularRegular),
])
def test_classify(before, after, kind):
    assert classify_crossing(before, after) == kind


@pytest.mark.parametrize("before,after", [
    ((R, R), (MAX, R)),                    # one vertex changes alone
    ((R, R), ((0, 2, 0), R)),              # multiplicity change
    ((MIN, SAD), (MIN, MAX)),
    ((MIN, MIN), (MIN, MIN)),              # not an index swap: indices equal
    ((MIN, MIN), (R, MAX)),
])
def test_unclassifiable(before, after):
    if before == after and before[0] == before[1]:
        assert classify_crossing(before, after) == CrossingKind.CriticalCritical
        return
    with pytest.raises(UnclassifiableCrossing):
        classify_crossing(before, after)


# -- diagram ----------------------------------------------------------------------

def test_time_constant_field():
    f = random_field((5, 4), (True, False), 2, seed=3)
    f = TimeVaryingField(f.complex, np.repeat(f.values[:, :1], 4, axis=1))
    dg = compute_cerf_diagram(f)
    crit = np.nonzero(index_vectors(f.complex, f.values[:, 0]).any(axis=1))[0]
    assert len(dg.events) == 0
    assert sorted(dg.arc_v.tolist()) == crit.tolist()
    assert np.all(dg.arc_t1 == 0.0) and np.all(dg.arc_t2 == 1.0)
    g = tracking_graph(dg)
    assert g.edges == []


def test_rotating_max_on_four_cycle():
    c = cycle_complex(4)
    f = TimeVaryingField(c, np.array([[3.0, 1.0], [1.0, 3.0], [0.0, 0.0], [0.5, 0.5]]))
    dg = compute_cerf_diagram(f)
    assert len(dg.events) == 1 and dg.kinds[0] == CrossingKind.CriticalRegularSwitch
    assert dg.events.t[0] == pytest.approx(0.5)
    maxima = sorted((int(v), t1, t2) for v, t1, t2, b in zip(dg.arc_v, dg.arc_t1, dg.arc_t2,
                                                              dg.arc_beta.tolist()) if b == [0, 1])
    assert maxima == [(0, 0.0, pytest.approx(0.5)), (1, pytest.approx(0.5), 1.0)]
    x = dg.crossings[0]
    # max weight in d = 1 is -1: vertex 0 gains +1, vertex 1 loses 1
    w = euler_weights(np.array([*x.betti_before, *x.betti_after]))
    assert (w[2] - w[0], w[3] - w[1]) == (1, -1)
    assert verify_betti_update(x)


def test_rotating_max_is_one_chain():
    dg = compute_cerf_diagram(rotating_profile())
    # each step moves the max and the min by one vertex
    assert dg.kinds.tolist() == [CrossingKind.CriticalRegularSwitch] * 6
    g = tracking_graph(dg)
    assert sum(e[2] == "move" for e in g.edges) == 6
    tracks = maxima_tracks(g)
    assert len(tracks) == 1
    tr = tracks[0]
    assert [dg.arc_v[a] for a in tr.nodes] == [0, 1, 2, 3]
    assert (tr.born_by, tr.died_by, tr.birth, tr.death) == ("start", "end", 0.0, 1.0)


def test_events_are_sorted_and_link_adjacent():
    f = random_field((5, 5), (True, True), 5, seed=1)
    dg = compute_cerf_diagram(f)
    assert np.all(np.diff(dg.events.t) >= 0) and np.all(dg.events.adjacent)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000), periodic=st.booleans(), three=st.booleans())
def test_sweep_invariants(seed, periodic, three):
    dims = (3, 3, 3) if three else (5, 4)
    f = random_field(dims, (periodic,) * len(dims), 4, seed)
    c = f.complex
    dg = compute_cerf_diagram(f)
    # Betti update identity at every crossing
    assert dg.betti_update_holds().all()
    # oracle: arcs live at t equal the from-scratch critical set
    for t in all_state_times(dg):
        fresh = index_vectors(c, f.at(t))
        want = {int(v): tuple(int(x) for x in fresh[v]) for v in np.nonzero(fresh.any(axis=1))[0]}
        assert dg.critical_at(t) == want
    # arc betas are constant: recompute at arc midpoints (when not degenerate in time)
    for a in np.nonzero(dg.arc_t2 > dg.arc_t1)[0][:40]:
        tm = 0.5 * (dg.arc_t1[a] + dg.arc_t2[a])
        n = dg.state_index(tm)
        if dg.arc_open[a] < n <= dg.arc_close[a]:
            assert tuple(index_vectors(c, f.at(tm))[dg.arc_v[a]]) == tuple(dg.arc_beta[a])
    # Euler constraint on closed complexes
    if periodic:
        for t in f.times:
            assert int(dg.arc_weight[dg.live_arcs(t)].sum()) == c.euler_characteristic()


def test_morse_families_classify_fully():
    checked = 0
    for seed in range(12):
        f = random_gaussians((10, 10), (seed % 2 == 0, False), 10, seed)
        dg = compute_cerf_diagram(f)
        ts = np.unique(np.concatenate([f.times, dg.events.t]))
        mids = (ts[1:] + ts[:-1]) / 2
        if not all(is_pl_morse(f.complex, f.at(t)) for t in mids):
            continue
        checked += 1
        assert len(dg.unclassified()) == 0
        compute_cerf_diagram(f, strict=True)
    assert checked >= 10


def test_strict_mode_rejects_monkey_saddle():
    spec = GridSpec((5, 5))
    c = grid_complex(spec)
    v = int(spec.index([2, 2]))
    ring = [int(spec.index(p)) for p in ([3, 2], [3, 3], [2, 3], [1, 2], [1, 1], [2, 1])]
    f0 = np.linspace(0, 0.01, 25)
    f0[v] = 0.0
    f0[ring] = [-1, 1, -1, 1, -1, 1]
    f = TimeVaryingField(c, np.stack([f0, f0], axis=1))
    with pytest.raises(NonGenericFamily):
        compute_cerf_diagram(f, strict=True)
    dg = compute_cerf_diagram(f)
    assert (0, 2, 0) in [tuple(b) for b in dg.arc_beta.tolist()]


def test_state_index_at_coincident_events():
    c = cycle_complex(6)
    f = TimeVaryingField(c, np.stack([[9, 0, 1, 5, 6, 9.0], [9, 1, 0, 6, 5, 9.0]], axis=1))
    dg = compute_cerf_diagram(f)
    assert len(dg.events) == 2
    assert dg.state_index(0.5 - 1e-12) == 0 and dg.state_index(0.5 + 1e-12) == 2
    assert dg.state_index(np.array([0.0, 1.0])).tolist() == [0, 2]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_time_reversal_reflects_events(seed):
    f = random_field((4, 4), (False, False), 4, seed)
    a = detect_crossings(f)
    b = detect_crossings(f.reversed())
    assert sorted(zip(np.round(a.t, 9), a.u, a.v)) == \
        sorted(zip(np.round(1 - b.t, 9), b.u, b.v))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_crossing_parity(seed):
    f = random_field((3, 3), (False, False), 6, seed)
    ev = detect_crossings(f)
    for e, (u, v) in enumerate(f.complex.edges.tolist()):
        n = int(np.count_nonzero(ev.edge == e))
        below0 = f.values[u, 0] <= f.values[v, 0]
        below1 = f.values[u, -1] <= f.values[v, -1]
        assert n % 2 == int(below0 != below1)


def test_exports():
    dg = compute_cerf_diagram(random_field((4, 4), (True, True), 3, seed=0))
    arcs = dg.arcs_csv().splitlines()
    assert arcs[0] == "t1,val1,t2,val2,vertex,beta0,beta1,beta2" and len(arcs) == dg.n_arcs + 1
    maxima = dg.arcs_csv(2).splitlines()[1:]
    assert all(line.endswith(",0,0,1") for line in maxima)
    cx = dg.crossings_csv().splitlines()
    assert cx[0] == "t,u,v,kind" and len(cx) == len(dg.events) + 1
    import json
    doc = json.loads(tracking_json(tracking_graph(dg)))
    assert len(doc["nodes"]) == dg.n_arcs


# -- tracks -----------------------------------------------------------------------

def splitting_field(T=21):
    spec = GridSpec((24, 20))
    f1 = generate_gaussians(spec, [(8.2, 10.1)], 2.5, T=T)
    f2 = generate_gaussians(spec, [(15.3, 10.2)], 2.5, T=T)
    ramp = np.clip(np.linspace(-0.5, 1.0, T), 0, None)
    return TimeVaryingField(f1.complex, f1.values + f2.values * ramp, f1.times), spec


def test_static_gaussian_single_track():
    spec = GridSpec((12, 12))
    f = generate_gaussians(spec, [(5.0, 6.0)], 2.0, T=5)
    g = tracking_graph(compute_cerf_diagram(f))
    tracks = maxima_tracks(g)
    assert len(tracks) == 1 and tracks[0].lifetime == 1.0
    hit = seed_search(g, (5, 6), 0.5, 0.5)
    assert hit == tracks
    assert seed_search(g, (0, 0), 1.0, 0.5) == []
    with pytest.raises(ValueError):
        seed_search(g, (40, 0), 1.0, 0.5)
    with pytest.raises(ValueError):
        seed_search(g, (5, 6), 0.0, 0.5)


def test_split_after_mode():
    f, spec = splitting_field()
    g = tracking_graph(compute_cerf_diagram(f))
    before = seed_search(g, (10, 10), 6.0, 0.1)
    after = seed_search(g, (10, 10), 6.0, 0.1, after=True)
    assert len(before) == 1 and len(after) == 2
    born = [tr for tr in after if tr not in before][0]
    assert born.born_by == "birth" and born.birth > 0.1


def test_index_swap_in_3d():
    # in d <= 2 an extremum crossing a neighbour always turns regular, so swaps need d = 3
    f = random_field((4, 4, 4), (True, True, True), 3, 1)
    dg = compute_cerf_diagram(f)
    swaps = np.nonzero(dg.kinds == CrossingKind.IndexSwap)[0]
    assert len(swaps)
    i = int(swaps[0])
    (bu, bv), (au, av) = dg.betti_before[i].tolist(), dg.betti_after[i].tolist()
    assert bu == av and bv == au and bu != bv
    g = tracking_graph(dg)
    moves = [(s, d) for s, d, k, t, e in g.edges if e == i]
    assert len(moves) == 2
    # each edge joins arcs of the same index on different vertices
    for s, d in moves:
        assert dg.arc_index[s] == dg.arc_index[d] and dg.arc_v[s] != dg.arc_v[d]


def test_no_index_swap_in_2d():
    for seed in range(30):
        dg = compute_cerf_diagram(random_field((6, 6), (True, True), 4, seed))
        assert not np.any(dg.kinds == CrossingKind.IndexSwap)
