"""Pure-Python FIFO push-relabel; fallback for the compiled ``_maxflow`` kernel.

Both versions take an edge list ``(tails, heads, caps)`` over vertices
``0..n-1`` and return ``(value, per-edge flow)``. The code is kept line-for-line
parallel to ``_maxflow.pyx`` so the two can be benchmarked and cross-checked.
"""

from collections import deque


def default_tol(caps) -> float:
    m = 1.0
    for c in caps:
        if c > m:
            m = c
    return m * 1e-14


def push_relabel(n, tails, heads, caps, source, sink, tol=None):
    m = len(tails)
    tails = [int(x) for x in tails]
    heads = [int(x) for x in heads]
    caps = [float(x) for x in caps]
    if tol is None:
        tol = default_tol(caps)
    if source == sink or m == 0:
        return 0.0, [0.0] * m

    # arc 2e is edge e, arc 2e+1 its reverse
    deg = [0] * (n + 1)
    for e in range(m):
        deg[tails[e] + 1] += 1
        deg[heads[e] + 1] += 1
    start = [0] * (n + 1)
    for v in range(n):
        start[v + 1] = start[v] + deg[v + 1]
    fill = start[:n]
    adj = [0] * (2 * m)
    head = [0] * (2 * m)
    res = [0.0] * (2 * m)
    for e in range(m):
        a = 2 * e
        head[a] = heads[e]
        head[a + 1] = tails[e]
        res[a] = caps[e]
        adj[fill[tails[e]]] = a
        fill[tails[e]] += 1
        adj[fill[heads[e]]] = a + 1
        fill[heads[e]] += 1

    height = [0] * n
    excess = [0.0] * n
    cur = start[:n]
    active = [False] * n
    queue = deque()

    def global_relabel():
        for v in range(n):
            height[v] = 2 * n
        height[sink] = 0
        bfs = deque([sink])
        while bfs:
            y = bfs.popleft()
            for i in range(start[y], start[y + 1]):
                a = adj[i]
                x = head[a]
                if height[x] == 2 * n and x != source and res[a ^ 1] > tol:
                    height[x] = height[y] + 1
                    bfs.append(x)
        height[source] = n
        bfs.append(source)
        while bfs:
            y = bfs.popleft()
            for i in range(start[y], start[y + 1]):
                a = adj[i]
                x = head[a]
                if height[x] == 2 * n and res[a ^ 1] > tol:
                    height[x] = height[y] + 1
                    bfs.append(x)
        for v in range(n):
            cur[v] = start[v]

    for i in range(start[source], start[source + 1]):
        a = adj[i]
        delta = res[a]
        if delta > tol:
            v = head[a]
            res[a] -= delta
            res[a ^ 1] += delta
            excess[v] += delta
            if v != sink and v != source and not active[v]:
                active[v] = True
                queue.append(v)
    global_relabel()

    relabels = 0
    relabel_period = n + m
    while queue:
        u = queue.popleft()
        active[u] = False
        if height[u] >= 2 * n:
            continue
        while excess[u] > tol:
            i = cur[u]
            if i == start[u + 1]:
                best = 4 * n
                for j in range(start[u], start[u + 1]):
                    a = adj[j]
                    if res[a] > tol and height[head[a]] < best:
                        best = height[head[a]]
                height[u] = best + 1
                cur[u] = start[u]
                relabels += 1
                if height[u] >= 2 * n:
                    break
                continue
            a = adj[i]
            v = head[a]
            if res[a] > tol and height[u] == height[v] + 1:
                delta = excess[u] if excess[u] < res[a] else res[a]
                res[a] -= delta
                res[a ^ 1] += delta
                excess[u] -= delta
                excess[v] += delta
                if v != sink and v != source and not active[v]:
                    active[v] = True
                    queue.append(v)
                if res[a] <= tol:
                    cur[u] = i + 1
            else:
                cur[u] = i + 1
        if relabels > relabel_period:
            relabels = 0
            global_relabel()
            if excess[u] > tol and not active[u]:
                active[u] = True
                queue.append(u)

    flow = [0.0] * m
    for e in range(m):
        x = caps[e] - res[2 * e]
        if x < 0.0:
            x = 0.0
        flow[e] = x
    value = 0.0
    for e in range(m):
        if heads[e] == sink:
            value += flow[e]
        if tails[e] == sink:
            value -= flow[e]
    return value, flow
