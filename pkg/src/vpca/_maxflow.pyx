# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled FIFO push-relabel; same algorithm and signature as ``_maxflow_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef struct Graph:
    int n
    int source
    int sink
    double tol
    int *start
    int *adj
    int *head
    double *res
    int *height
    double *excess
    int *cur
    char *active
    int *queue
    int qhead
    int qlen


cdef inline void enqueue(Graph *g, int v) noexcept nogil:
    g.queue[(g.qhead + g.qlen) % g.n] = v
    g.qlen += 1
    g.active[v] = 1


cdef inline int dequeue(Graph *g) noexcept nogil:
    cdef int v = g.queue[g.qhead]
    g.qhead = (g.qhead + 1) % g.n
    g.qlen -= 1
    g.active[v] = 0
    return v


cdef void global_relabel(Graph *g, int *bfs) noexcept nogil:
    cdef int n = g.n, v, y, x, a, i, lo, hi
    for v in range(n):
        g.height[v] = 2 * n
    g.height[g.sink] = 0
    lo = 0
    hi = 0
    bfs[hi] = g.sink
    hi += 1
    while lo < hi:
        y = bfs[lo]
        lo += 1
        for i in range(g.start[y], g.start[y + 1]):
            a = g.adj[i]
            x = g.head[a]
            if g.height[x] == 2 * n and x != g.source and g.res[a ^ 1] > g.tol:
                g.height[x] = g.height[y] + 1
                bfs[hi] = x
                hi += 1
    g.height[g.source] = n
    lo = 0
    hi = 0
    bfs[hi] = g.source
    hi += 1
    while lo < hi:
        y = bfs[lo]
        lo += 1
        for i in range(g.start[y], g.start[y + 1]):
            a = g.adj[i]
            x = g.head[a]
            if g.height[x] == 2 * n and g.res[a ^ 1] > g.tol:
                g.height[x] = g.height[y] + 1
                bfs[hi] = x
                hi += 1
    for v in range(n):
        g.cur[v] = g.start[v]


cdef void run(Graph *g, int m, int *bfs) noexcept nogil:
    cdef int n = g.n, u, v, i, j, a, best
    cdef double delta
    cdef long relabels = 0
    cdef long period = n + m

    for i in range(g.start[g.source], g.start[g.source + 1]):
        a = g.adj[i]
        delta = g.res[a]
        if delta > g.tol:
            v = g.head[a]
            g.res[a] -= delta
            g.res[a ^ 1] += delta
            g.excess[v] += delta
            if v != g.sink and v != g.source and not g.active[v]:
                enqueue(g, v)
    global_relabel(g, bfs)

    while g.qlen > 0:
        u = dequeue(g)
        if g.height[u] >= 2 * n:
            continue
        while g.excess[u] > g.tol:
            i = g.cur[u]
            if i == g.start[u + 1]:
                best = 4 * n
                for j in range(g.start[u], g.start[u + 1]):
                    a = g.adj[j]
                    if g.res[a] > g.tol and g.height[g.head[a]] < best:
                        best = g.height[g.head[a]]
                g.height[u] = best + 1
                g.cur[u] = g.start[u]
                relabels += 1
                if g.height[u] >= 2 * n:
                    break
                continue
            a = g.adj[i]
            v = g.head[a]
            if g.res[a] > g.tol and g.height[u] == g.height[v] + 1:
                delta = g.excess[u] if g.excess[u] < g.res[a] else g.res[a]
                g.res[a] -= delta
                g.res[a ^ 1] += delta
                g.excess[u] -= delta
                g.excess[v] += delta
                if v != g.sink and v != g.source and not g.active[v]:
                    enqueue(g, v)
                if g.res[a] <= g.tol:
                    g.cur[u] = i + 1
            else:
                g.cur[u] = i + 1
        if relabels > period:
            relabels = 0
            global_relabel(g, bfs)
            if g.excess[u] > g.tol and not g.active[u]:
                enqueue(g, u)


def default_tol(caps):
    caps = np.asarray(caps, dtype=np.float64)
    return max(1.0, float(caps.max()) if caps.size else 1.0) * 1e-14


def push_relabel(int n, tails, heads, caps, int source, int sink, tol=None):
    cdef cnp.int64_t[::1] t = np.ascontiguousarray(tails, dtype=np.int64)
    cdef cnp.int64_t[::1] h = np.ascontiguousarray(heads, dtype=np.int64)
    cdef double[::1] c = np.ascontiguousarray(caps, dtype=np.float64)
    cdef int m = t.shape[0]
    cdef int e, a, v
    cdef Graph g
    cdef int *fill
    cdef int *bfs
    cdef double value = 0.0, x
    flow_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] flow = flow_arr

    if source == sink or m == 0:
        return 0.0, flow_arr
    g.n = n
    g.source = source
    g.sink = sink
    g.tol = default_tol(caps) if tol is None else tol
    g.start = <int *> malloc((n + 1) * sizeof(int))
    g.adj = <int *> malloc(2 * m * sizeof(int))
    g.head = <int *> malloc(2 * m * sizeof(int))
    g.res = <double *> malloc(2 * m * sizeof(double))
    g.height = <int *> malloc(n * sizeof(int))
    g.excess = <double *> malloc(n * sizeof(double))
    g.cur = <int *> malloc(n * sizeof(int))
    g.active = <char *> malloc(n * sizeof(char))
    g.queue = <int *> malloc(n * sizeof(int))
    fill = <int *> malloc(n * sizeof(int))
    bfs = <int *> malloc(n * sizeof(int))
    g.qhead = 0
    g.qlen = 0
    try:
        with nogil:
            for v in range(n + 1):
                g.start[v] = 0
            for e in range(m):
                g.start[t[e] + 1] += 1
                g.start[h[e] + 1] += 1
            for v in range(n):
                g.start[v + 1] += g.start[v]
                fill[v] = g.start[v]
                g.height[v] = 0
                g.excess[v] = 0.0
                g.active[v] = 0
            for e in range(m):
                a = 2 * e
                g.head[a] = <int> h[e]
                g.head[a + 1] = <int> t[e]
                g.res[a] = c[e]
                g.res[a + 1] = 0.0
                g.adj[fill[t[e]]] = a
                fill[t[e]] += 1
                g.adj[fill[h[e]]] = a + 1
                fill[h[e]] += 1
            run(&g, m, bfs)
            for e in range(m):
                x = c[e] - g.res[2 * e]
                if x < 0.0:
                    x = 0.0
                flow[e] = x
                if h[e] == sink:
                    value += x
                if t[e] == sink:
                    value -= x
    finally:
        free(g.start); free(g.adj); free(g.head); free(g.res); free(g.height)
        free(g.excess); free(g.cur); free(g.active); free(g.queue); free(fill); free(bfs)
    return value, flow_arr
