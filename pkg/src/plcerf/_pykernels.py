"""Pure-Python kernels; mirror ``_ckernels.pyx`` line for line."""


def vertex_betti(t, v, u_below, out):
    lo, hi = int(t.nbr_ptr[v]), int(t.nbr_ptr[v + 1])
    deg = hi - lo
    lower = [u_below[t.nbr_edge[k]] == t.nbr_is_u[k] for k in range(lo, hi)]
    for i in range(len(out)):
        out[i] = 0
    nl = sum(lower)
    if nl == 0:
        out[0] = 1
        return
    d = t.d
    if d == 1:
        out[1] = nl - 1
        return
    parent = list(range(deg))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ne = 0
    comps = nl
    for k in range(int(t.le_ptr[v]), int(t.le_ptr[v + 1])):
        a, b = int(t.le_a[k]), int(t.le_b[k])
        if lower[a] and lower[b]:
            ne += 1
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
                comps -= 1
    out[1] = comps - 1
    top = 1 if (t.closed[v] and nl == deg) else 0
    if d == 2:
        out[2] = top
        return
    nt = 0
    for k in range(int(t.lt_ptr[v]), int(t.lt_ptr[v + 1])):
        if lower[t.lt_a[k]] and lower[t.lt_b[k]] and lower[t.lt_c[k]]:
            nt += 1
    chi = nl - ne + nt
    out[2] = comps - chi + top
    out[3] = top


def all_betti(t, u_below, out):
    for v in range(t.n_vertices):
        vertex_betti(t, v, u_below, out[v])


def sweep(t, u_below, betti, ev_edge, before, after):
    edges = t.edges
    for i in range(len(ev_edge)):
        e = ev_edge[i]
        a = edges[e, 0]
        b = edges[e, 1]
        before[i, 0] = betti[a]
        before[i, 1] = betti[b]
        u_below[e] ^= 1
        vertex_betti(t, a, u_below, betti[a])
        vertex_betti(t, b, u_below, betti[b])
        after[i, 0] = betti[a]
        after[i, 1] = betti[b]
