"""Finite metric trees (R-trees with finitely many vertices)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DomainError, InvalidInput
from .base import Space


@dataclass(frozen=True)
class TreePoint:
    """A point of a metric tree: either a vertex, or an interior point of an edge.

    ``offset`` is measured from the first endpoint of ``edge`` as listed in
    the tree's edge table. Use :meth:`MetricTree.point` to build canonical
    instances (offsets 0 and the full length collapse to the vertex).
    """

    node: int | None = None
    edge: int | None = None
    offset: float = 0.0

    @property
    def is_node(self):
        return self.node is not None


class TreeBatch(NamedTuple):
    """A stack of tree points as parallel arrays.

    ``node[i] >= 0`` marks a vertex; otherwise the point sits on ``edge[i]`` at
    ``offset[i]`` from that edge's first endpoint.
    """

    node: np.ndarray
    edge: np.ndarray
    offset: np.ndarray

    def __len__(self):
        return len(self.node)


class MetricTree(Space):
    """A connected acyclic graph with positive edge lengths.

    Distances between vertices are tabulated once at construction, together
    with a next-hop table used to walk geodesics.
    """

    kind = "tree"

    def __init__(self, nodes, edges):
        nodes = list(nodes)
        if not nodes:
            raise InvalidInput("tree needs at least one node")
        self.labels = nodes
        self.index = {label: i for i, label in enumerate(nodes)}
        if len(self.index) != len(nodes):
            raise InvalidInput("duplicate node labels")
        self.edges = []
        for e in edges:
            if len(e) != 3:
                raise InvalidInput(f"edge must be [u, v, length], got {e!r}")
            u, v, length = e
            if u not in self.index or v not in self.index:
                raise InvalidInput(f"edge {e!r} references an unknown node")
            length = float(length)
            if not length > 0.0 or not np.isfinite(length):
                raise InvalidInput(f"edge {e!r} must have positive finite length")
            if u == v:
                raise InvalidInput(f"self-loop {e!r}")
            self.edges.append((self.index[u], self.index[v], length))
        n = len(nodes)
        if len(self.edges) != n - 1:
            raise InvalidInput(f"a tree on {n} nodes has {n - 1} edges, got {len(self.edges)}")
        self.adj = [[] for _ in range(n)]
        self.edge_of = {}
        for k, (u, v, _) in enumerate(self.edges):
            if (u, v) in self.edge_of:
                raise InvalidInput("parallel edges are not allowed")
            self.adj[u].append((v, k))
            self.adj[v].append((u, k))
            self.edge_of[(u, v)] = k
            self.edge_of[(v, u)] = k
        self.dist = np.full((n, n), np.inf)
        self.next_hop = np.full((n, n), -1, dtype=int)
        for root in range(n):
            self._bfs(root)
        if np.isinf(self.dist).any():
            raise InvalidInput("tree is not connected")
        self.total_length = sum(e[2] for e in self.edges)
        self._eu = np.array([e[0] for e in self.edges], dtype=int)
        self._ev = np.array([e[1] for e in self.edges], dtype=int)
        self._elen = np.array([e[2] for e in self.edges], dtype=float)
        self._cum_len = np.cumsum(self._elen)
        self._edge_index = np.full((n, n), -1, dtype=int)
        for (u, v), k in self.edge_of.items():
            self._edge_index[u, v] = k

    def _bfs(self, root):
        self.dist[root, root] = 0.0
        self.next_hop[root, root] = root
        queue = deque([root])
        seen = {root}
        while queue:
            a = queue.popleft()
            for b, k in self.adj[a]:
                if b in seen:
                    continue
                seen.add(b)
                self.dist[b, root] = self.dist[a, root] + self.edges[k][2]
                # stepping from b toward root goes through a
                self.next_hop[b, root] = a
                queue.append(b)

    def __repr__(self):
        return f"MetricTree(nodes={len(self.labels)}, edges={len(self.edges)})"

    # construction ----------------------------------------------------------

    @classmethod
    def star(cls, legs, length=1.0):
        """Star with a center ``"c"`` and ``legs`` leaves ``"l0", "l1", ...``."""
        lengths = [length] * legs if np.isscalar(length) else list(length)
        nodes = ["c"] + [f"l{i}" for i in range(legs)]
        return cls(nodes, [("c", f"l{i}", lengths[i]) for i in range(legs)])

    def node(self, label):
        """Vertex by label (or by integer index when the label is unknown)."""
        if label in self.index:
            return TreePoint(node=self.index[label])
        if isinstance(label, (int, np.integer)) and 0 <= label < len(self.labels):
            return TreePoint(node=int(label))
        raise InvalidInput(f"unknown node {label!r}")

    def point(self, edge, offset):
        if not isinstance(edge, (int, np.integer)) or not 0 <= edge < len(self.edges):
            raise InvalidInput(f"unknown edge {edge!r}")
        u, v, length = self.edges[edge]
        offset = float(offset)
        if not -1e-12 * length <= offset <= length * (1 + 1e-12):
            raise DomainError(f"offset {offset} outside [0, {length}] on edge {edge}")
        if offset <= 0.0:
            return TreePoint(node=u)
        if offset >= length:
            return TreePoint(node=v)
        return TreePoint(edge=int(edge), offset=offset)

    def check(self, x):
        if isinstance(x, TreeBatch):
            return self._check_batch(x)
        if isinstance(x, TreePoint):
            if x.node is not None:
                if not 0 <= x.node < len(self.labels):
                    raise InvalidInput(f"unknown node index {x.node}")
                return x
            return self.point(x.edge, x.offset)
        if isinstance(x, dict):
            return self.from_json(x)
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return self.point(int(x[0]), x[1])
        raise InvalidInput(f"not a tree point: {x!r}")

    # metric ----------------------------------------------------------------

    def ends(self, p):
        """Vertices bounding the cell of ``p`` with their distances from ``p``."""
        if p.node is not None:
            return ((p.node, 0.0),)
        u, v, length = self.edges[p.edge]
        return ((u, p.offset), (v, length - p.offset))

    def _route(self, p, q):
        best = None
        for a, da in self.ends(p):
            for b, db in self.ends(q):
                total = da + self.dist[a, b] + db
                if best is None or total < best[0]:
                    best = (total, a, da, b, db)
        return best

    def distance(self, p, q):
        if isinstance(p, TreeBatch) or isinstance(q, TreeBatch):
            return self._distance_batch(self.pack(p), self.pack(q))
        if p.edge is not None and p.edge == q.edge:
            return abs(p.offset - q.offset)
        if p.node is not None and q.node is not None:
            return float(self.dist[p.node, q.node])
        return float(self._route(p, q)[0])

    def move_from_node(self, node, edge, s):
        """Point at distance ``s`` from ``node`` along an incident ``edge``."""
        u, v, length = self.edges[edge]
        if node == u:
            return self.point(edge, min(max(s, 0.0), length))
        if node == v:
            return self.point(edge, min(max(length - s, 0.0), length))
        raise InvalidInput(f"edge {edge} is not incident to node {node}")

    def walk(self, p, q, s):
        """Point at distance ``s`` from ``p`` along the geodesic to ``q``."""
        if s <= 0.0:
            return p
        if p.edge is not None and p.edge == q.edge:
            step = s if q.offset >= p.offset else -s
            lo, hi = sorted((p.offset, q.offset))
            return self.point(p.edge, min(max(p.offset + step, lo), hi))
        total, a, da, b, db = self._route(p, q)
        if s >= total:
            return q
        if s < da:
            return self.move_from_node(a, p.edge, da - s)
        s -= da
        cur = a
        while cur != b:
            nxt = int(self.next_hop[cur, b])
            k = self.edge_of[(cur, nxt)]
            length = self.edges[k][2]
            if s < length:
                return self.move_from_node(cur, k, s)
            s -= length
            cur = nxt
        if q.node is not None:
            return q
        return self.move_from_node(b, q.edge, min(s, db))

    def geodesic(self, p, q, t):
        if isinstance(p, TreeBatch) or isinstance(q, TreeBatch) or np.ndim(t) > 0:
            return self._geodesic_batch(self.pack(p), self.pack(q), t)
        if t <= 0.0:
            return p
        if t >= 1.0:
            return q
        return self.walk(p, q, t * self.distance(p, q))

    def project_to_segment(self, p, x, y):
        dxy = self.distance(x, y)
        if dxy == 0.0:
            return 0.0, x
        # the branch point of the tripod (p, x, y) lies on [x, y] at the Gromov product
        t = (self.distance(x, p) + dxy - self.distance(y, p)) / (2.0 * dxy)
        t = min(1.0, max(0.0, t))
        return t, self.geodesic(x, y, t)

    # structure -------------------------------------------------------------

    def degree(self, node):
        return len(self.adj[node])

    def leaves(self):
        return [i for i in range(len(self.labels)) if self.degree(i) == 1]

    def incident(self, node):
        return [k for _, k in self.adj[node]]

    def node_points(self):
        return [TreePoint(node=i) for i in range(len(self.labels))]

    def sample(self, rng, scale=1.0):
        """Uniform point with respect to length measure."""
        s = rng.uniform(0.0, self.total_length)
        k = min(int(np.searchsorted(self._cum_len, s, side="right")), len(self.edges) - 1)
        return self.point(k, min(s - (self._cum_len[k] - self._elen[k]), self._elen[k]))

    # batched evaluation ----------------------------------------------------

    def pack(self, points):
        """Convert a point or a sequence of points to a :class:`TreeBatch`."""
        if isinstance(points, TreeBatch):
            return points
        if isinstance(points, TreePoint):
            points = [points]
        node = np.array([-1 if p.node is None else p.node for p in points], dtype=int)
        edge = np.array([-1 if p.edge is None else p.edge for p in points], dtype=int)
        offset = np.array([p.offset if p.node is None else 0.0 for p in points], dtype=float)
        return TreeBatch(node, edge, offset)

    def unpack(self, batch):
        return [
            TreePoint(node=int(n)) if n >= 0 else TreePoint(edge=int(e), offset=float(o))
            for n, e, o in zip(batch.node, batch.edge, batch.offset)
        ]

    def _check_batch(self, b):
        node = np.asarray(b.node, dtype=int)
        edge = np.asarray(b.edge, dtype=int)
        offset = np.asarray(b.offset, dtype=float)
        if np.any(node >= len(self.labels)) or np.any((node < 0) & ((edge < 0) | (edge >= len(self.edges)))):
            raise InvalidInput("batch references unknown nodes or edges")
        inner = node < 0
        length = self._elen[np.where(inner, edge, 0)]
        if np.any(inner & ((offset < 0.0) | (offset > length))):
            raise DomainError("batch offsets outside their edges")
        return self._canonical(node, edge, offset)

    def _canonical(self, node, edge, offset):
        inner = node < 0
        k = np.where(inner, edge, 0)
        length = self._elen[k]
        at_u = inner & (offset <= 0.0)
        at_v = inner & (offset >= length)
        node = np.where(at_u, self._eu[k], np.where(at_v, self._ev[k], node))
        edge = np.where(node >= 0, -1, edge)
        offset = np.where(node >= 0, 0.0, offset)
        return TreeBatch(node, edge, offset)

    def _cells(self, b):
        inner = b.node < 0
        k = np.where(inner, b.edge, 0)
        u = np.where(inner, self._eu[k], b.node)
        v = np.where(inner, self._ev[k], b.node)
        du = np.where(inner, b.offset, 0.0)
        dv = np.where(inner, self._elen[k] - b.offset, 0.0)
        return (u, du), (v, dv)

    def _route_batch(self, p, q):
        best = None
        for a, da in self._cells(p):
            for b, db in self._cells(q):
                total = da + self.dist[a, b] + db
                if best is None:
                    best = [total, a, da, b, db]
                else:
                    better = total < best[0]
                    best = [np.where(better, new, old) for new, old in zip((total, a, da, b, db), best)]
        same = (p.node < 0) & (p.edge == q.edge)
        best[0] = np.where(same, np.abs(p.offset - q.offset), best[0])
        return best, same

    def _distance_batch(self, p, q):
        (total, *_), _ = self._route_batch(p, q)
        return total

    def _at_from(self, w, k, r):
        """Point at distance r from vertex w along incident edge k (arrays)."""
        off = np.where(self._eu[k] == w, r, self._elen[k] - r)
        return off

    def _geodesic_batch(self, p, q, t):
        (total, a, da, b, db), same = self._route_batch(p, q)
        total = np.broadcast_to(total, np.broadcast_shapes(np.shape(total), np.shape(t)))
        s = np.clip(np.asarray(t, dtype=float), 0.0, 1.0) * total
        shape = s.shape
        node = np.full(shape, -1, dtype=int)
        edge = np.full(shape, -1, dtype=int)
        offset = np.zeros(shape)
        pb = [np.broadcast_to(x, shape) for x in p]
        qb = [np.broadcast_to(x, shape) for x in q]
        a, da, b, db, same = (np.broadcast_to(x, shape) for x in (a, da, b, db, same))
        dab = self.dist[a, b]

        # both points on one edge
        step = np.where(qb[2] >= pb[2], s, -s)
        edge = np.where(same, pb[1], edge)
        offset = np.where(same, pb[2] + step, offset)

        # still on p's own edge
        first = ~same & (s < da)
        ke = np.where(first, pb[1], 0)
        edge = np.where(first, pb[1], edge)
        offset = np.where(first, self._at_from(a, ke, da - s), offset)

        # on q's edge, or q itself
        last = ~same & ~first & (s >= da + dab)
        r = s - da - dab
        q_inner = qb[0] < 0
        kq = np.where(last & q_inner, qb[1], 0)
        on_q_edge = last & q_inner & (r < db)
        edge = np.where(on_q_edge, qb[1], edge)
        offset = np.where(on_q_edge, self._at_from(b, kq, r), offset)
        at_q = last & ~on_q_edge
        node = np.where(at_q, qb[0], node)
        edge = np.where(at_q, qb[1], edge)
        offset = np.where(at_q, qb[2], offset)

        # along the vertex path from a to b
        middle = ~same & ~first & ~last
        if np.any(middle):
            sm = s - da
            da_w = self.dist[a[..., None], np.arange(len(self.labels))]
            dw_b = self.dist[np.arange(len(self.labels)), b[..., None]]
            on_path = np.abs(da_w + dw_b - dab[..., None]) <= 1e-12 * (1.0 + dab[..., None])
            reach = on_path & (da_w <= sm[..., None])
            w = np.argmax(np.where(reach, da_w, -1.0), axis=-1)
            r = sm - self.dist[a, w]
            nxt = self.next_hop[w, b]
            k = self._edge_index[w, np.where(nxt >= 0, nxt, w)]
            k = np.where(k >= 0, k, 0)
            vertex = middle & (r <= 0.0)
            interior = middle & (r > 0.0)
            node = np.where(vertex, w, node)
            edge = np.where(interior, k, edge)
            offset = np.where(interior, self._at_from(w, k, r), offset)

        return self._canonical(node, edge, offset)

    def sample_batch(self, rng, count):
        k = rng.choice(len(self.edges), size=count, p=self._elen / self._elen.sum())
        offset = rng.uniform(0.0, 1.0, size=count) * self._elen[k]
        return self._canonical(np.full(count, -1, dtype=int), k, offset)

    # serialization ---------------------------------------------------------

    def to_json(self, p):
        if p.node is not None:
            return {"node": self.labels[p.node]}
        return {"edge": int(p.edge), "offset": float(p.offset)}

    def from_json(self, obj):
        if "node" in obj:
            return self.node(obj["node"])
        if "edge" in obj:
            return self.point(int(obj["edge"]), obj.get("offset", 0.0))
        raise InvalidInput(f"tree point needs 'node' or 'edge': {obj!r}")

    def describe(self):
        return {
            "kind": "tree",
            "nodes": list(self.labels),
            "edges": [[self.labels[u], self.labels[v], length] for u, v, length in self.edges],
        }
