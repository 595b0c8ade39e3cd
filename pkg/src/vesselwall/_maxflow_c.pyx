# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dinic max-flow kernel.

Mirrors _maxflow_py.solve operation for operation: identical arc
layout (forward 2a, reverse 2a + 1), identical linked-list adjacency
order, identical BFS / blocking-flow traversal and identical float
update order, so both kernels end with bit-identical residuals and
report the same (maximal) cut side.
"""

from libc.stdlib cimport free, malloc

from libc.stdint cimport int32_t

import numpy as np


def solve(Py_ssize_t n, int32_t[::1] tails, int32_t[::1] heads,
          double[::1] caps, Py_ssize_t s, Py_ssize_t t):
    """Max s-t flow; returns (flow, side); see _maxflow_py.solve."""
    cdef Py_ssize_t m = tails.shape[0]
    if heads.shape[0] != m or caps.shape[0] != m:
        raise ValueError("tails, heads and caps must have equal length")
    if not (0 <= s < n and 0 <= t < n) or s == t:
        raise ValueError("bad source or sink")
    cdef Py_ssize_t k
    for k in range(m):
        if not (0 <= tails[k] < n and 0 <= heads[k] < n):
            raise ValueError("arc endpoint out of range")
        if not (caps[k] >= 0.0 and caps[k] - caps[k] == 0.0):
            raise ValueError("arc capacities must be finite and >= 0")

    cdef int* to_ = <int*> malloc(max(2 * m, 1) * sizeof(int))
    cdef int* nxt = <int*> malloc(max(2 * m, 1) * sizeof(int))
    cdef double* cap = <double*> malloc(max(2 * m, 1) * sizeof(double))
    cdef int* head = <int*> malloc(n * sizeof(int))
    cdef int* level = <int*> malloc(n * sizeof(int))
    cdef int* queue = <int*> malloc(n * sizeof(int))
    cdef int* it = <int*> malloc(n * sizeof(int))
    cdef int* path_arcs = <int*> malloc((n + 2) * sizeof(int))
    cdef int* path_nodes = <int*> malloc((n + 2) * sizeof(int))
    cdef unsigned char* reach = <unsigned char*> malloc(n)
    if (to_ == NULL or nxt == NULL or cap == NULL or head == NULL
            or level == NULL or queue == NULL or it == NULL
            or path_arcs == NULL or path_nodes == NULL or reach == NULL):
        free(to_); free(nxt); free(cap); free(head); free(level)
        free(queue); free(it); free(path_arcs); free(path_nodes); free(reach)
        raise MemoryError()

    cdef Py_ssize_t i
    cdef int a, f, r, u, v, w, qh, qt, lv, cut, plen
    cdef double bn, flow

    for i in range(n):
        head[i] = -1
    for i in range(m):
        u = tails[i]
        v = heads[i]
        f = 2 * i
        to_[f] = v
        nxt[f] = head[u]
        head[u] = f
        cap[f] = caps[i]
        r = f + 1
        to_[r] = u
        nxt[r] = head[v]
        head[v] = r
        cap[r] = 0.0

    flow = 0.0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh = 0
        qt = 1
        while qh < qt:
            v = queue[qh]
            qh += 1
            a = head[v]
            while a != -1:
                w = to_[a]
                if cap[a] > 0.0 and level[w] == -1:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
                a = nxt[a]
        if level[t] == -1:
            break

        for i in range(n):
            it[i] = head[i]
        plen = 0
        path_nodes[0] = s
        v = s
        while True:
            if v == t:
                bn = cap[path_arcs[0]]
                for i in range(plen):
                    if cap[path_arcs[i]] < bn:
                        bn = cap[path_arcs[i]]
                flow += bn
                cut = -1
                for i in range(plen):
                    a = path_arcs[i]
                    cap[a] -= bn
                    cap[a ^ 1] += bn
                    if cut == -1 and cap[a] == 0.0:
                        cut = <int> i
                plen = cut
                v = path_nodes[plen]
                continue
            a = it[v]
            lv = level[v] + 1
            while a != -1 and not (cap[a] > 0.0 and level[to_[a]] == lv):
                a = nxt[a]
            it[v] = a
            if a == -1:
                level[v] = -1
                if v == s:
                    break
                plen -= 1
                v = path_nodes[plen]
            else:
                path_arcs[plen] = a
                plen += 1
                path_nodes[plen] = to_[a]
                v = to_[a]

    for i in range(n):
        reach[i] = 0
    reach[t] = 1
    queue[0] = <int> t
    qh = 0
    qt = 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        a = head[v]
        while a != -1:
            w = to_[a]
            if reach[w] == 0 and cap[a ^ 1] > 0.0:
                reach[w] = 1
                queue[qt] = w
                qt += 1
            a = nxt[a]

    side = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] side_mv = side
    for i in range(n):
        side_mv[i] = 0 if reach[i] else 1

    free(to_); free(nxt); free(cap); free(head); free(level)
    free(queue); free(it); free(path_arcs); free(path_nodes); free(reach)
    return float(flow), side
