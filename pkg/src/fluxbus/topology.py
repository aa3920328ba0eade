"""Binary-tree connectivity layout over a qubit chain, with routing algebra.

A chain of N - 1 qubits (N = 2^L) gains a coupler layer that connects the
qubits as a dyadic binary tree: the root is qubit N/2 and the level-l nodes
are the odd multiples of N / 2^(l+1).  Every qubit gets a binary address --
the binary fraction digits of p/N with the leading integer 0 kept and the
trailing (always 1) digit dropped -- and the lowest common ancestor of two
qubits is simply their longest common address prefix.  The entangling
distance between two qubits then scales as O(log N) instead of O(N).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

EDGE_TYPES = ("chain", "tree", "grid-column")


# ---------------------------------------------------------------------------
# addresses
# ---------------------------------------------------------------------------

def address_of(p, n_total):
    """Binary address of qubit position p in a chain of N = n_total.

    The address is the binary expansion of p / N including the leading
    integer digit 0, with the final (always-1) digit removed.  The root N/2
    gets address "0".
    """
    _check_pow2(n_total)
    if not 1 <= p <= n_total - 1:
        raise ValueError(f"position {p} outside 1..{n_total - 1}")
    # binary fraction of p/N terminates at the lowest set bit of p
    depth = n_total.bit_length() - 1
    frac = format(p, f"0{depth}b")[: depth - _v2(p)]
    return "0" + frac[:-1]


def _v2(p):
    """2-adic valuation: number of trailing zero bits."""
    return (p & -p).bit_length() - 1


def _level(p, n_total):
    return int(math.log2(n_total)) - 1 - _v2(p)


def position_of(address, n_total):
    """Inverse of :func:`address_of`: append the dropped 1 and scale by N."""
    _check_pow2(n_total)
    if not address or address[0] != "0":
        raise ValueError("addresses start with the integer digit '0'")
    frac = address[1:] + "1"
    value = int(frac, 2)
    p = value * n_total // (1 << len(frac))
    if not 1 <= p <= n_total - 1:
        raise ValueError(f"address {address!r} is outside the chain")
    return p


def lca(addr_a, addr_b):
    """Longest common prefix: the address of the lowest common ancestor."""
    n = 0
    for ca, cb in zip(addr_a, addr_b):
        if ca != cb:
            break
        n += 1
    return addr_a[:n]


def tree_distance(addr_a, addr_b):
    """Edges between two nodes: depth(a) + depth(b) - 2 depth(lca)."""
    da, db = len(addr_a) - 1, len(addr_b) - 1
    return da + db - 2 * (len(lca(addr_a, addr_b)) - 1)


def _check_pow2(n_total):
    if n_total < 4 or n_total & (n_total - 1):
        raise ValueError("N must be a power of two, at least 4")


# ---------------------------------------------------------------------------
# tree and graphs
# ---------------------------------------------------------------------------

@dataclass
class BeatTree:
    """Dyadic coupler tree over the chain 1 .. N-1."""

    depth: int                                  # L with N = 2^L
    n_total: int
    levels: dict = field(default_factory=dict)  # position -> level
    parents: dict = field(default_factory=dict)  # position -> parent position

    @property
    def root(self):
        return self.n_total // 2

    def nodes_at_level(self, level):
        return sorted(p for p, l in self.levels.items() if l == level)

    def edges(self):
        return [(parent, child) for child, parent in sorted(self.parents.items())]


def build_tree(depth) -> BeatTree:
    """BEAT tree for a chain of 2^depth - 1 qubits.

    Level-l nodes sit at the odd multiples of N / 2^(l+1); the parent of a
    node is the unique node one level up whose dyadic interval contains it.
    """
    if not 2 <= depth <= 24:
        raise ValueError("depth must be between 2 and 24")
    n_total = 1 << depth
    tree = BeatTree(depth=depth, n_total=n_total)
    for p in range(1, n_total):
        tree.levels[p] = _level(p, n_total)
    for p in range(1, n_total):
        lvl = tree.levels[p]
        if lvl == 0:
            continue
        step = n_total >> (lvl + 1)              # N / 2^(l+1)
        for parent in (p - step, p + step):
            if 1 <= parent <= n_total - 1 and tree.levels[parent] == lvl - 1:
                tree.parents[p] = parent
                break
    return tree


@dataclass
class ConnectivityGraph:
    """Undirected typed multigraph-free adjacency over hashable vertices."""

    vertices: list
    edges: set = field(default_factory=set)     # frozenset({u, v}, type) pairs

    def __post_init__(self):
        self._index = {v: i for i, v in enumerate(self.vertices)}

    def add_edge(self, u, v, kind):
        if kind not in EDGE_TYPES:
            raise ValueError(f"unknown edge type {kind!r}")
        if u == v or u not in self._index or v not in self._index:
            raise ValueError(f"edge ({u}, {v}) has endpoints off the graph")
        self.edges.add((frozenset((u, v)), kind))

    def has_edge(self, u, v):
        return any(frozenset((u, v)) == pair for pair, _ in self.edges)

    def neighbors(self, u):
        out = []
        for pair, _ in self.edges:
            if u in pair:
                (other,) = pair - {u}
                out.append(other)
        return sorted(out, key=self._index.get)

    def degree(self, u, kind=None):
        total = 0
        for pair, k in self.edges:
            if u in pair and (kind is None or k == kind):
                total += 1
        return total

    def sparse_adjacency(self):
        rows, cols = [], []
        for pair, _ in self.edges:
            u, v = tuple(pair)
            i, j = self._index[u], self._index[v]
            rows += [i, j]
            cols += [j, i]
        data = np.ones(len(rows), dtype=np.int8)
        n = len(self.vertices)
        return csr_matrix((data, (rows, cols)), shape=(n, n))

    def index(self, v):
        return self._index[v]


def beat_graph(depth, chain=True, tree=True) -> ConnectivityGraph:
    """1D chain of 2^depth - 1 qubits with optional chain and tree layers."""
    n_total = 1 << depth
    g = ConnectivityGraph(list(range(1, n_total)))
    if chain:
        for p in range(1, n_total - 1):
            g.add_edge(p, p + 1, "chain")
    if tree:
        for parent, child in build_tree(depth).edges():
            g.add_edge(parent, child, "tree")
    return g


def build_grid(rows, depth, column_kind="grid-column") -> ConnectivityGraph:
    """2D layout: one BEAT row per grid row, plus a leftmost-column assembly.

    Vertices are (row, position).  Each row carries its own chain + tree
    edges; the leftmost column (position 1 of every row) gets an extra BEAT
    assembly connecting the rows.  When rows + 1 is not a power of two the
    column tree is the dyadic tree of the next power of two restricted to
    the existing rows, with chain links added for any stranded rows.
    """
    if rows < 1:
        raise ValueError("need at least one row")
    n_total = 1 << depth
    verts = [(r, p) for r in range(1, rows + 1) for p in range(1, n_total)]
    g = ConnectivityGraph(verts)
    tree = build_tree(depth)
    for r in range(1, rows + 1):
        for p in range(1, n_total - 1):
            g.add_edge((r, p), (r, p + 1), "chain")
        for parent, child in tree.edges():
            g.add_edge((r, parent), (r, child), "tree")
    if rows == 1:
        return g
    col_depth = max(2, math.ceil(math.log2(rows + 1)))
    col_tree = build_tree(col_depth)
    linked = set()
    for parent, child in col_tree.edges():
        if parent <= rows and child <= rows:
            g.add_edge((parent, 1), (child, 1), column_kind)
            linked.update((parent, child))
    # chain-link rows stranded by the truncated dyadic tree
    for r in range(1, rows + 1):
        if rows > 1 and r not in linked and col_tree.parents.get(r, r) > rows:
            neighbor = r - 1 if r > 1 else r + 1
            g.add_edge((r, 1), (neighbor, 1), column_kind)
    return g


def remove_nodes(graph: ConnectivityGraph, dead) -> ConnectivityGraph:
    """Induced subgraph after deleting the dead vertices."""
    dead = set(dead)
    unknown = dead - set(graph.vertices)
    if unknown:
        raise ValueError(f"dead vertices not in graph: {sorted(unknown)}")
    keep = [v for v in graph.vertices if v not in dead]
    out = ConnectivityGraph(keep)
    for pair, kind in graph.edges:
        u, v = tuple(pair)
        if u not in dead and v not in dead:
            out.add_edge(u, v, kind)
    return out


# ---------------------------------------------------------------------------
# routing and statistics
# ---------------------------------------------------------------------------

@dataclass
class RouteResult:
    path: list
    found: bool

    @property
    def length(self):
        return len(self.path) - 1 if self.found else math.inf


def route(a, b, graph: ConnectivityGraph = None, n_total=None) -> RouteResult:
    """Entangling path between two qubits.

    Without a graph (or with a tree-only graph) the path follows the address
    algebra through the lowest common ancestor.  With a general graph a BFS
    shortest path is returned; unreachable pairs give ``found=False``.
    """
    if graph is None or all(kind == "tree" for _, kind in graph.edges):
        if n_total is None:
            if graph is None:
                raise ValueError("tree routing needs n_total")
            n_total = len(graph.vertices) + 1
        path = _tree_route(a, b, n_total)
        if graph is not None:
            ok = all(graph.has_edge(u, v) for u, v in zip(path, path[1:]))
            if not ok:
                return RouteResult([], False)
        return RouteResult(path, True)
    return _bfs_route(a, b, graph)


def _tree_route(a, b, n_total):
    addr_a, addr_b = address_of(a, n_total), address_of(b, n_total)
    anc = lca(addr_a, addr_b)
    up = []
    cur = addr_a
    while cur != anc:
        up.append(cur)
        cur = cur[:-1]
    down = []
    cur = addr_b
    while cur != anc:
        down.append(cur)
        cur = cur[:-1]
    addrs = up + [anc] + down[::-1]
    return [position_of(x, n_total) for x in addrs]


def _bfs_route(a, b, graph):
    import collections

    if a == b:
        return RouteResult([a], True)
    prev = {a: None}
    queue = collections.deque([a])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if v not in prev:
                prev[v] = u
                if v == b:
                    path = [b]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return RouteResult(path[::-1], True)
                queue.append(v)
    return RouteResult([], False)


@dataclass
class DistanceReport:
    """All-pairs entangling-distance statistics (edges per path)."""

    max_distance: int
    mean_distance: float
    histogram: np.ndarray        # histogram[d] = number of ordered pairs
    n_pairs: int
    n_unreachable: int
    sampled: bool = False


def distance_stats(graph: ConnectivityGraph, all_pairs_cap=1 << 14,
                   sample_size=2048, seed=7) -> DistanceReport:
    """Exact all-pairs BFS statistics (sampled above ``all_pairs_cap`` nodes)."""
    adj = graph.sparse_adjacency()
    n = len(graph.vertices)
    sampled = n > all_pairs_cap
    if sampled:
        rng = np.random.default_rng(seed)
        sources = rng.choice(n, size=min(sample_size, n), replace=False)
    else:
        sources = np.arange(n)

    hist = np.zeros(1, dtype=np.int64)
    unreachable = 0
    batch = 256
    for start in range(0, len(sources), batch):
        idx = sources[start:start + batch]
        dist = dijkstra(adj, indices=idx, unweighted=True)
        finite = np.isfinite(dist)
        unreachable += int((~finite).sum())
        vals = dist[finite].astype(np.int64)
        vals = vals[vals > 0]
        if len(vals):
            top = vals.max() + 1
            if top > len(hist):
                hist = np.pad(hist, (0, top - len(hist)))
            hist += np.bincount(vals, minlength=len(hist))
    n_pairs = int(hist.sum())
    if n_pairs == 0:
        return DistanceReport(0, 0.0, hist, 0, unreachable, sampled)
    dists = np.arange(len(hist))
    mean = float((hist * dists).sum() / n_pairs)
    return DistanceReport(int(dists[hist > 0].max()), mean, hist, n_pairs,
                          unreachable, sampled)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def graph_to_json(graph: ConnectivityGraph):
    """JSON-ready adjacency with typed edges."""
    return {
        "vertices": [list(v) if isinstance(v, tuple) else v
                     for v in graph.vertices],
        "edges": sorted(
            [sorted([list(u) if isinstance(u, tuple) else u
                     for u in pair], key=str) + [kind]
             for pair, kind in graph.edges], key=str),
    }


def graph_to_dot(graph: ConnectivityGraph, name="beat"):
    styles = {"chain": "solid", "tree": "bold", "grid-column": "dashed"}
    lines = [f"graph {name} {{"]
    for v in graph.vertices:
        lines.append(f'  "{v}";')
    for pair, kind in sorted(graph.edges, key=str):
        u, v = sorted(tuple(pair), key=str)
        lines.append(f'  "{u}" -- "{v}" [style={styles[kind]}, kind={kind}];')
    lines.append("}")
    return "\n".join(lines)
