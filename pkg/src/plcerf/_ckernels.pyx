# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lower-link Betti and sweep kernels (see ``plcerf.kernels``)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.uint8_t u8
ctypedef cnp.int8_t i8

DEF MAXDEG = 256


cdef inline i64 _find(i64* parent, i64 x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


cdef struct Table:
    int d
    i64* nbr_ptr
    i64* nbr_edge
    u8* nbr_is_u
    i64* le_ptr
    i64* le_a
    i64* le_b
    i64* lt_ptr
    i64* lt_a
    i64* lt_b
    i64* lt_c
    u8* closed
    i64* edges


cdef int _vertex_betti(Table* t, i64 v, u8* u_below, i8* out) noexcept nogil:
    cdef i64 lo = t.nbr_ptr[v], hi = t.nbr_ptr[v + 1]
    cdef i64 deg = hi - lo, k, a, b, ra, rb
    cdef u8 lower[MAXDEG]
    cdef i64 parent[MAXDEG]
    cdef i64 nl = 0, ne = 0, nt = 0, comps, chi
    cdef int i, top
    if deg > MAXDEG:
        return -1
    for i in range(t.d + 1):
        out[i] = 0
    for k in range(deg):
        lower[k] = u_below[t.nbr_edge[lo + k]] == t.nbr_is_u[lo + k]
        nl += lower[k]
        parent[k] = k
    if nl == 0:
        out[0] = 1
        return 0
    if t.d == 1:
        out[1] = <i8>(nl - 1)
        return 0
    comps = nl
    for k in range(t.le_ptr[v], t.le_ptr[v + 1]):
        a = t.le_a[k]
        b = t.le_b[k]
        if lower[a] and lower[b]:
            ne += 1
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                parent[ra] = rb
                comps -= 1
    out[1] = <i8>(comps - 1)
    top = 1 if (t.closed[v] and nl == deg) else 0
    if t.d == 2:
        out[2] = top
        return 0
    for k in range(t.lt_ptr[v], t.lt_ptr[v + 1]):
        if lower[t.lt_a[k]] and lower[t.lt_b[k]] and lower[t.lt_c[k]]:
            nt += 1
    chi = nl - ne + nt
    out[2] = <i8>(comps - chi + top)
    out[3] = top
    return 0


cdef class _Hold:
    """Keeps contiguous views alive while a Table points into them."""
    cdef object refs


cdef Table _table(object t, _Hold hold) except *:
    cdef Table tab
    refs = []

    def grab(name, dtype):
        arr = np.ascontiguousarray(getattr(t, name), dtype=dtype)
        refs.append(arr)
        return arr

    cdef i64[::1] nbr_ptr = grab("nbr_ptr", np.int64)
    cdef i64[::1] nbr_edge = grab("nbr_edge", np.int64)
    cdef u8[::1] nbr_is_u = grab("nbr_is_u", np.uint8)
    cdef i64[::1] le_ptr = grab("le_ptr", np.int64)
    cdef i64[::1] le_a = grab("le_a", np.int64)
    cdef i64[::1] le_b = grab("le_b", np.int64)
    cdef i64[::1] lt_ptr = grab("lt_ptr", np.int64)
    cdef i64[::1] lt_a = grab("lt_a", np.int64)
    cdef i64[::1] lt_b = grab("lt_b", np.int64)
    cdef i64[::1] lt_c = grab("lt_c", np.int64)
    cdef u8[::1] closed = grab("closed", np.uint8)
    cdef i64[:, ::1] edges = grab("edges", np.int64)
    hold.refs = refs
    tab.d = t.d
    tab.nbr_ptr = &nbr_ptr[0]
    tab.nbr_edge = &nbr_edge[0] if nbr_edge.shape[0] else NULL
    tab.nbr_is_u = &nbr_is_u[0] if nbr_is_u.shape[0] else NULL
    tab.le_ptr = &le_ptr[0]
    tab.le_a = &le_a[0] if le_a.shape[0] else NULL
    tab.le_b = &le_b[0] if le_b.shape[0] else NULL
    tab.lt_ptr = &lt_ptr[0]
    tab.lt_a = &lt_a[0] if lt_a.shape[0] else NULL
    tab.lt_b = &lt_b[0] if lt_b.shape[0] else NULL
    tab.lt_c = &lt_c[0] if lt_c.shape[0] else NULL
    tab.closed = &closed[0] if closed.shape[0] else NULL
    tab.edges = &edges[0, 0] if edges.shape[0] else NULL
    return tab


def vertex_betti(t, i64 v, u8[::1] u_below, i8[::1] out):
    cdef _Hold hold = _Hold()
    cdef Table tab = _table(t, hold)
    if _vertex_betti(&tab, v, &u_below[0], &out[0]) < 0:
        raise ValueError("vertex degree exceeds kernel limit")


def all_betti(t, u8[::1] u_below, i8[:, ::1] out):
    cdef _Hold hold = _Hold()
    cdef Table tab = _table(t, hold)
    cdef i64 v, n = out.shape[0]
    cdef int bad = 0
    if n == 0:
        return
    cdef u8* ub = &u_below[0] if u_below.shape[0] else NULL
    with nogil:
        for v in range(n):
            if _vertex_betti(&tab, v, ub, &out[v, 0]) < 0:
                bad = 1
    if bad:
        raise ValueError("vertex degree exceeds kernel limit")


def sweep(t, u8[::1] u_below, i8[:, ::1] betti, i64[::1] ev_edge,
          i8[:, :, ::1] before, i8[:, :, ::1] after):
    cdef _Hold hold = _Hold()
    cdef Table tab = _table(t, hold)
    cdef i64 i, e, a, b, n = ev_edge.shape[0]
    cdef int j, w = tab.d + 1, bad = 0
    if n == 0:
        return
    with nogil:
        for i in range(n):
            e = ev_edge[i]
            a = tab.edges[2 * e]
            b = tab.edges[2 * e + 1]
            for j in range(w):
                before[i, 0, j] = betti[a, j]
                before[i, 1, j] = betti[b, j]
            u_below[e] ^= 1
            if _vertex_betti(&tab, a, &u_below[0], &betti[a, 0]) < 0:
                bad = 1
            if _vertex_betti(&tab, b, &u_below[0], &betti[b, 0]) < 0:
                bad = 1
            for j in range(w):
                after[i, 0, j] = betti[a, j]
                after[i, 1, j] = betti[b, j]
    if bad:
        raise ValueError("vertex degree exceeds kernel limit")
