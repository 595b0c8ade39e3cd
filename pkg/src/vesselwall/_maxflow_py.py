"""Pure-Python Dinic max-flow kernel.

Fallback used when the compiled extension is unavailable.  Both kernels
implement the identical algorithm with the identical arc layout and
operation order (arc a -> internal forward index 2a, reverse 2a + 1;
linked-list adjacency iterated most-recent-first; FIFO level BFS;
iterative advance/retreat blocking flow), so their final residual
capacities, and hence the reported cut side, match exactly.

Saturation tests compare against exactly 0.0: an augmentation subtracts
the path bottleneck, and the arc attaining it yields cap - cap == 0.0
in floating point, so no tolerance is needed or wanted.
"""

from __future__ import annotations

import numpy as np


def solve(n: int, tails, heads, caps, s: int, t: int):
    """Max s-t flow; returns (flow, side).

    side is a uint8 array of length n with 1 for nodes on the source
    side of the *maximal* minimum cut (the complement of the nodes that
    can still reach t in the residual graph).
    """
    tails = [int(v) for v in tails]
    heads = [int(v) for v in heads]
    caps = [float(c) for c in caps]
    m = len(tails)
    if len(heads) != m or len(caps) != m:
        raise ValueError("tails, heads and caps must have equal length")
    if not (0 <= s < n and 0 <= t < n) or s == t:
        raise ValueError("bad source or sink")
    for a in range(m):
        if not (0 <= tails[a] < n and 0 <= heads[a] < n):
            raise ValueError("arc endpoint out of range")
        if not (caps[a] >= 0.0 and caps[a] - caps[a] == 0.0):
            raise ValueError("arc capacities must be finite and >= 0")

    to = [0] * (2 * m)
    nxt = [-1] * (2 * m)
    cap = [0.0] * (2 * m)
    head = [-1] * n
    for a in range(m):
        u = tails[a]
        v = heads[a]
        f = 2 * a
        to[f] = v
        nxt[f] = head[u]
        head[u] = f
        cap[f] = caps[a]
        r = f + 1
        to[r] = u
        nxt[r] = head[v]
        head[v] = r

    level = [-1] * n
    queue = [0] * n
    flow = 0.0

    while True:
        # level BFS on the residual graph
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
                w = to[a]
                if cap[a] > 0.0 and level[w] == -1:
                    level[w] = level[v] + 1
                    queue[qt] = w
                    qt += 1
                a = nxt[a]
        if level[t] == -1:
            break

        # blocking flow: advance/retreat with current-arc pointers
        it = head.copy()
        path_arcs = []
        path_nodes = [s]
        v = s
        while True:
            if v == t:
                bn = cap[path_arcs[0]]
                for a in path_arcs:
                    if cap[a] < bn:
                        bn = cap[a]
                flow += bn
                cut = -1
                for i, a in enumerate(path_arcs):
                    cap[a] -= bn
                    cap[a ^ 1] += bn
                    if cut == -1 and cap[a] == 0.0:
                        cut = i
                del path_arcs[cut:]
                del path_nodes[cut + 1:]
                v = path_nodes[-1]
                continue
            a = it[v]
            lv = level[v] + 1
            while a != -1 and not (cap[a] > 0.0 and level[to[a]] == lv):
                a = nxt[a]
            it[v] = a
            if a == -1:
                level[v] = -1
                if v == s:
                    break
                path_arcs.pop()
                path_nodes.pop()
                v = path_nodes[-1]
            else:
                path_arcs.append(a)
                path_nodes.append(to[a])
                v = to[a]

    # maximal cut side: everything that cannot reach t in the residual
    reach_t = [False] * n
    reach_t[t] = True
    queue[0] = t
    qh = 0
    qt = 1
    while qh < qt:
        v = queue[qh]
        qh += 1
        a = head[v]
        while a != -1:
            w = to[a]
            if not reach_t[w] and cap[a ^ 1] > 0.0:
                reach_t[w] = True
                queue[qt] = w
                qt += 1
            a = nxt[a]
    side = np.fromiter((0 if r else 1 for r in reach_t),
                       dtype=np.uint8, count=n)
    return flow, side
