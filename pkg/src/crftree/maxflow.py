"""Max-flow / min-cut on two-terminal networks with real capacities.

Dinic's algorithm: BFS builds a level graph, an in-order DFS pushes a blocking
flow through it, and the process repeats until the sink is unreachable. Each
phase strictly increases the source-sink distance, so the phase count is
bounded by the node count independent of capacity values and real capacities
terminate. Deterministic given the construction order of edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FlowNetwork:
    """Per-node terminal capacities plus undirected inter-node edges.

    source_caps[p] is the capacity source -> p, sink_caps[p] the capacity
    p -> sink. Each (p, q, cap) edge carries cap in both directions, which is
    all the symmetric energies here need. All capacities must be >= 0. edges
    may be a list of (p, q, cap) triples or an equivalent (m, 3) array.
    """

    num_nodes: int
    source_caps: np.ndarray
    sink_caps: np.ndarray
    edges: list | np.ndarray

    def __post_init__(self):
        self.source_caps = np.asarray(self.source_caps, dtype=float)
        self.sink_caps = np.asarray(self.sink_caps, dtype=float)
        if self.source_caps.shape != (self.num_nodes,) or self.sink_caps.shape != (self.num_nodes,):
            raise ValueError("terminal capacity arrays must have length num_nodes")
        if np.any(self.source_caps < 0) or np.any(self.sink_caps < 0):
            raise ValueError("terminal capacities must be >= 0")
        E = np.asarray(self.edges, dtype=float)
        if E.size == 0:
            E = np.zeros((0, 3))
        if E.ndim != 2 or E.shape[1] != 3:
            raise ValueError("edges must be (p, q, cap) triples")
        p, q, cap = E[:, 0].astype(np.int64), E[:, 1].astype(np.int64), E[:, 2]
        bad = (p < 0) | (p >= self.num_nodes) | (q < 0) | (q >= self.num_nodes) | (p == q)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(f"bad edge ({int(p[i])}, {int(q[i])})")
        neg = cap < 0
        if neg.any():
            i = int(np.flatnonzero(neg)[0])
            raise ValueError(f"edge ({int(p[i])}, {int(q[i])}) has negative capacity {cap[i]}")
        self._edge_p, self._edge_q, self._edge_cap = p, q, cap


def max_flow_min_cut(net: FlowNetwork) -> tuple[float, np.ndarray]:
    """Returns (flow value, source_side) where source_side[p] is True for nodes
    reachable from the source in the final residual graph. The flow value
    equals the capacity of that cut (max-flow/min-cut duality).
    """
    n = net.num_nodes
    s, t = n, n + 1

    # Arc a and arc a^1 are mutual reverses. Plain lists: the graphs here are
    # small (tens of nodes), where list indexing beats array scalar access.
    to: list[int] = []
    cap: list[float] = []
    adj: list[list[int]] = [[] for _ in range(n + 2)]

    def add(u: int, v: int, cap_uv: float, cap_vu: float):
        adj[u].append(len(to))
        to.append(v)
        cap.append(cap_uv)
        adj[v].append(len(to))
        to.append(u)
        cap.append(cap_vu)

    src, snk = net.source_caps, net.sink_caps
    for p in np.flatnonzero(src > 0).tolist():
        add(s, p, float(src[p]), 0.0)
    for p in np.flatnonzero(snk > 0).tolist():
        add(p, t, float(snk[p]), 0.0)
    for p, q, c in zip(net._edge_p.tolist(), net._edge_q.tolist(), net._edge_cap.tolist()):
        if c > 0:
            add(p, q, c, c)

    flow = 0.0
    level = [-1] * (n + 2)
    while True:
        # BFS level graph on the residual.
        level = [-1] * (n + 2)
        level[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            lu1 = level[u] + 1
            for a in adj[u]:
                v = to[a]
                if level[v] < 0 and cap[a] > 0:
                    level[v] = lu1
                    queue.append(v)
        if level[t] < 0:
            break

        # Blocking flow: depth-first advance along level-increasing arcs with a
        # per-node resume pointer; dead ends leave the level graph.
        ptr = [0] * (n + 2)
        path: list[int] = []
        u = s
        while True:
            if u == t:
                bottleneck = min(cap[a] for a in path)
                flow += bottleneck
                for a in path:
                    cap[a] -= bottleneck
                    cap[a ^ 1] += bottleneck
                k = 0
                while cap[path[k]] > 0:
                    k += 1
                u = to[path[k] ^ 1]  # retreat to the first saturated arc's tail
                del path[k:]
                continue
            moved = False
            arcs = adj[u]
            lu1 = level[u] + 1
            while ptr[u] < len(arcs):
                a = arcs[ptr[u]]
                if cap[a] > 0 and level[to[a]] == lu1:
                    path.append(a)
                    u = to[a]
                    moved = True
                    break
                ptr[u] += 1
            if moved:
                continue
            if u == s:
                break
            level[u] = -1  # dead end
            a = path.pop()
            u = to[a ^ 1]
            ptr[u] += 1

    # The final BFS found no path to the sink, so its levels mark exactly the
    # residual-reachable nodes: the source side of a minimum cut.
    return flow, np.array([level[p] >= 0 for p in range(n)], dtype=bool)
