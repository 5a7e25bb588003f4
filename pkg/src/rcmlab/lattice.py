"""Finite lattice graphs, boundary conditions, and graph builders.

Coordinates are integer tuples: (x, y) for planar graphs and (x, y, z) for
sheeted cover graphs (z = sheet index). Vertex ids are dense 0..n-1 in
lexicographic coordinate order; edge ids are dense in sorted endpoint order.
All graphs are immutable after construction.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .errors import ValidationError

_token_counter = itertools.count()


class Graph:
    """Undirected graph with coordinates, a designated boundary, and labels.

    Parallel edges are rejected unless allow_parallel is set (only dual
    constructions need them); self-loops are always rejected.
    """

    def __init__(self, coords, edges, boundary=(), labels=None,
                 allow_parallel=False):
        self.coords = tuple(tuple(c) for c in coords)
        self.edges = tuple((min(u, v), max(u, v)) for u, v in edges)
        self.boundary = frozenset(boundary)
        self.labels = {k: frozenset(v) for k, v in (labels or {}).items()}
        self.allow_parallel = allow_parallel
        self._token = next(_token_counter)
        self._validate()
        self._adj = None
        self._coord_index = None

    def _validate(self):
        n = len(self.coords)
        if len(set(self.coords)) != n:
            raise ValidationError("duplicate vertex coordinates")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError("self-loop edge (%d,%d)" % (u, v))
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError("edge endpoint out of range")
            if (u, v) in seen and not self.allow_parallel:
                raise ValidationError("duplicate edge (%d,%d)" % (u, v))
            seen.add((u, v))
        if not self.boundary <= set(range(n)):
            raise ValidationError("boundary contains unknown vertex ids")
        for name, block in self.labels.items():
            if not block <= set(range(n)):
                raise ValidationError("label %r contains unknown ids" % name)

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def adj(self):
        """adj[v] = list of (neighbour id, edge id)."""
        if self._adj is None:
            adj = [[] for _ in range(self.n_vertices)]
            for eid, (u, v) in enumerate(self.edges):
                adj[u].append((v, eid))
                adj[v].append((u, eid))
            self._adj = adj
        return self._adj

    @property
    def coord_index(self):
        if self._coord_index is None:
            self._coord_index = {c: i for i, c in enumerate(self.coords)}
        return self._coord_index

    def vid(self, v):
        """Resolve a vertex given as id or coordinate tuple."""
        if isinstance(v, int):
            if not 0 <= v < self.n_vertices:
                raise ValidationError("vertex id %d out of range" % v)
            return v
        key = tuple(v)
        if key not in self.coord_index:
            raise ValidationError("no vertex at %r" % (key,))
        return self.coord_index[key]

    def edge_id(self, u, v):
        u, v = self.vid(u), self.vid(v)
        u, v = min(u, v), max(u, v)
        for w, eid in self.adj[u]:
            if w == v:
                return eid
        raise ValidationError("no edge (%r,%r)" % (u, v))

    def degree(self, v):
        return len(self.adj[self.vid(v)])

    def to_json(self):
        return json.dumps({
            "format": "rcmlab-graph",
            "version": 1,
            "vertices": [list(c) for c in self.coords],
            "edges": [list(e) for e in self.edges],
            "boundary": sorted(self.boundary),
            "labels": {k: sorted(v) for k, v in sorted(self.labels.items())},
            "allow_parallel": self.allow_parallel,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get("format") != "rcmlab-graph":
            raise ValidationError("not a graph document")
        return cls(
            [tuple(c) for c in data["vertices"]],
            [tuple(e) for e in data["edges"]],
            data.get("boundary", ()),
            {k: frozenset(v) for k, v in data.get("labels", {}).items()},
            allow_parallel=data.get("allow_parallel", False),
        )

    def __repr__(self):
        return "Graph(%d vertices, %d edges, %d boundary)" % (
            self.n_vertices, self.n_edges, len(self.boundary))


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition: how boundary vertices are pre-joined into blocks.

    kind is one of free, wired, dobrushin, partition. Dobrushin marks two
    boundary vertices a, b (coordinates); the block is the boundary arc from
    a to b walking the outer face clockwise, both endpoints included. The
    collapsed case a == b yields the singleton block {a}, which counts
    clusters exactly like free boundary conditions. gap_a / gap_b optionally
    pin the missing-neighbour direction used to anchor the start/end edges of
    the interface walk when the marked vertex has several missing directions.
    """

    kind: str
    a: tuple = None
    b: tuple = None
    raw_blocks: tuple = None
    gap_a: tuple = None
    gap_b: tuple = None

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def wired(cls):
        return cls("wired")

    @classmethod
    def dobrushin(cls, a, b, gap_a=None, gap_b=None):
        return cls("dobrushin", a=tuple(a), b=tuple(b),
                   gap_a=None if gap_a is None else tuple(gap_a),
                   gap_b=None if gap_b is None else tuple(gap_b))

    @classmethod
    def partition(cls, blocks):
        return cls("partition",
                   raw_blocks=tuple(frozenset(b) for b in blocks))

    def validate(self, graph):
        if self.kind not in ("free", "wired", "dobrushin", "partition"):
            raise ValidationError("unknown boundary kind %r" % self.kind)
        if self.kind == "dobrushin":
            for mark in (self.a, self.b):
                if graph.vid(mark) not in graph.boundary:
                    raise ValidationError(
                        "Dobrushin mark %r not on the boundary" % (mark,))
        if self.kind == "partition":
            seen = set()
            for block in self.raw_blocks:
                ids = {graph.vid(v) for v in block}
                if ids & seen:
                    raise ValidationError("partition blocks overlap")
                if not ids <= graph.boundary:
                    raise ValidationError("partition block leaves boundary")
                seen |= ids

    def blocks(self, graph):
        """Blocks of vertex ids joined before cluster counting."""
        if self.kind == "free":
            return ()
        if self.kind == "wired":
            return (frozenset(graph.boundary),) if graph.boundary else ()
        if self.kind == "partition":
            return tuple(frozenset(graph.vid(v) for v in b)
                         for b in self.raw_blocks)
        from .planar import dobrushin_arcs
        arcs = dobrushin_arcs(graph, self.a, self.b)
        return (frozenset(arcs.wired_vertices),)

    def key(self, graph):
        """Hashable fingerprint of the induced blocks, for caching."""
        return (self.kind,
                tuple(sorted(tuple(sorted(b)) for b in self.blocks(graph))))

    def __repr__(self):
        if self.kind == "dobrushin":
            return "BoundarySpec(dobrushin %r->%r)" % (self.a, self.b)
        return "BoundarySpec(%s)" % self.kind


@dataclass
class Domain:
    """A graph together with a boundary condition."""

    graph: Graph
    bc: BoundarySpec = field(default_factory=BoundarySpec.free)

    def __post_init__(self):
        self.bc.validate(self.graph)

    def vertex_reps(self):
        """Map vertex id -> dense representative id after bc contraction."""
        n = self.graph.n_vertices
        rep_of = list(range(n))
        for block in self.bc.blocks(self.graph):
            ids = sorted(block)
            for v in ids[1:]:
                rep_of[v] = ids[0]
        remap, reps = {}, []
        for v in range(n):
            r = rep_of[v]
            if r not in remap:
                remap[r] = len(remap)
            reps.append(remap[r])
        return reps, len(remap)

    def key(self):
        return (self.graph._token, self.bc.key(self.graph))

    def __repr__(self):
        return "Domain(%r, %r)" % (self.graph, self.bc)


def _grid_graph(xs, ys, boundary_pred, labels=None):
    """Rectangular-ish section of the square lattice over xs x ys."""
    coords = sorted((x, y) for x in xs for y in ys)
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for (x, y) in coords:
        for nb in ((x + 1, y), (x, y + 1)):
            if nb in index:
                edges.append((index[(x, y)], index[nb]))
    edges.sort(key=lambda e: (coords[e[0]], coords[e[1]]))
    boundary = [index[c] for c in coords if boundary_pred(c)]
    lab = {}
    for name, pred in (labels or {}).items():
        lab[name] = frozenset(index[c] for c in coords if pred(c))
    return Graph(coords, edges, boundary, lab)


def build_box(n, kind="plane"):
    """Square box {max(|x|,|y|) <= n}, full-plane or upper-half-plane."""
    if n < 1:
        raise ValidationError("box size must be >= 1")
    rng = range(-n, n + 1)
    if kind == "plane":
        return _grid_graph(rng, rng,
                           lambda c: max(abs(c[0]), abs(c[1])) == n)
    if kind == "half_plane":
        return _grid_graph(
            rng, range(0, n + 1),
            lambda c: max(abs(c[0]), abs(c[1])) == n or c[1] == 0)
    raise ValidationError("kind must be plane or half_plane")


def build_rect(x0, x1, y0, y1):
    """Rectangle [x0,x1] x [y0,y1]; boundary = border ring."""
    if x1 < x0 or y1 < y0:
        raise ValidationError("empty rectangle")

    def on_border(c):
        return c[0] in (x0, x1) or c[1] in (y0, y1)

    return _grid_graph(range(x0, x1 + 1), range(y0, y1 + 1), on_border)


def build_strip_rect(n, m):
    """Truncation of the height-n strip to x in [-m, m].

    Boundary is the full rectangle border. Labelled subsets (restricted to
    the truncation): plus = {y in {0,n}, x >= 0}, minus = {y in {0,n},
    x <= 0}, minus_bottom = {y = 0, x < 0}, left_col / right_col = the
    truncation columns x = -m / x = m.
    """
    if n < 1 or m < 1:
        raise ValidationError("strip height and half-width must be >= 1")
    labels = {
        "plus": lambda c: c[1] in (0, n) and c[0] >= 0,
        "minus": lambda c: c[1] in (0, n) and c[0] <= 0,
        "minus_bottom": lambda c: c[1] == 0 and c[0] < 0,
        "left_col": lambda c: c[0] == -m,
        "right_col": lambda c: c[0] == m,
    }
    return _grid_graph(
        range(-m, m + 1), range(0, n + 1),
        lambda c: c[0] in (-m, m) or c[1] in (0, n), labels)


def build_slit_box(n):
    """Box {max(|x|,|y|) <= n} with the vertices (0,k), 1 <= k <= n removed.

    The slit leaves the origin with a missing north neighbour; boundary =
    every vertex of degree < 4, so the origin qualifies as an interface
    mark with its gap pointing into the slit.
    """
    if n < 1:
        raise ValidationError("box size must be >= 1")
    removed = {(0, k) for k in range(1, n + 1)}
    coords = sorted((x, y)
                    for x in range(-n, n + 1)
                    for y in range(-n, n + 1)
                    if (x, y) not in removed)
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for (x, y) in coords:
        for nb in ((x + 1, y), (x, y + 1)):
            if nb in index:
                edges.append((index[(x, y)], index[nb]))
    edges.sort(key=lambda e: (coords[e[0]], coords[e[1]]))
    deg = [0] * len(coords)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    boundary = [i for i, d in enumerate(deg) if d < 4]
    return Graph(coords, edges, boundary)


def build_universal_cover_box(n, k):
    """Box of size n in the (2k+1)-sheet branched cover of the plane minus
    the unit face [0,1] x [-1,0].

    Vertices (x, y, z), |z| <= k, max(|x|,|y|) <= n. Vertical edges
    everywhere; horizontal edges within a sheet except across the cut
    half-column between x=0 and x=1: the crossing (0,y)-(1,y) stays in-sheet
    for y >= 0 and climbs one sheet for y <= -1, so a loop around the cut
    face lands one sheet up or down. Boundary = box border plus the top and
    bottom sheets' sealed cut rays {(0, y, +-k), y <= 0}.
    """
    if n < 1 or k < 0:
        raise ValidationError("need n >= 1 and k >= 0")
    coords = sorted((x, y, z)
                    for x in range(-n, n + 1)
                    for y in range(-n, n + 1)
                    for z in range(-k, k + 1))
    index = {c: i for i, c in enumerate(coords)}
    edges = set()
    for (x, y, z) in coords:
        up = (x, y + 1, z)
        if up in index:
            edges.add((index[(x, y, z)], index[up]))
        if x != 0:
            right = (x + 1, y, z)
            if right in index:
                edges.add((index[(x, y, z)], index[right]))
        else:
            cross = (1, y, z) if y >= 0 else (1, y, z + 1)
            if cross in index:
                e = (index[(x, y, z)], index[cross])
                edges.add((min(e), max(e)))
    edges = sorted(edges, key=lambda e: (coords[e[0]], coords[e[1]]))
    box_bdry = {index[c] for c in coords if max(abs(c[0]), abs(c[1])) == n}
    cut_bdry = {index[c] for c in coords
                if c[0] == 0 and c[1] <= 0 and abs(c[2]) == k}
    labels = {"box_boundary": box_bdry, "cut_boundary": cut_bdry}
    return Graph(coords, edges, box_bdry | cut_bdry, labels)


def induced_subdomain(graph, S):
    """Induced subgraph on the vertex set S (ids or coordinates).

    Keeps coordinates; vertex/edge ids are renumbered densely. Boundary and
    labels are restricted.
    """
    ids = sorted({graph.vid(v) for v in S})
    keep = set(ids)
    coords = [graph.coords[v] for v in ids]
    remap = {v: i for i, v in enumerate(ids)}
    edges = [(remap[u], remap[v]) for u, v in graph.edges
             if u in keep and v in keep]
    boundary = [remap[v] for v in graph.boundary if v in keep]
    labels = {name: frozenset(remap[v] for v in block if v in keep)
              for name, block in graph.labels.items()}
    return Graph(coords, edges, boundary, labels)


def edge_boundary(graph, S):
    """Directed edge boundary: pairs (x, y) with x in S, y outside."""
    keep = {graph.vid(v) for v in S}
    out = []
    for u, v in graph.edges:
        if (u in keep) != (v in keep):
            x, y = (u, v) if u in keep else (v, u)
            out.append((x, y))
    return out


def ambient_edge_boundary(graph, S):
    """Edge boundary of S counted in the full square lattice.

    Returns (x_id, outside_coord) pairs: every lattice edge leaving S,
    whether or not the outside endpoint belongs to the graph. This is the
    boundary used by the connection-sum function, whose terms count all
    lattice exits of S.
    """
    keep = {graph.vid(v) for v in S}
    keep_coords = {graph.coords[v] for v in keep}
    if any(len(c) != 2 for c in keep_coords):
        raise ValidationError("ambient edge boundary needs planar coords")
    out = []
    for v in sorted(keep):
        x, y = graph.coords[v]
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nb not in keep_coords:
                out.append((v, nb))
    return out
