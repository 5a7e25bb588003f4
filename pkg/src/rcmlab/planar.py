"""Planar embedding utilities: faces, outer walks, and boundary arcs.

Graphs built by the lattice module carry their embedding in the vertex
coordinates (all edges are straight segments between distinct points).
Faces are traced with the interior kept on the left of each directed edge,
so bounded faces come out counterclockwise and the outer face clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnsupportedDomainError, ValidationError


def _require_planar_coords(graph):
    if graph.coords and len(graph.coords[0]) != 2:
        raise UnsupportedDomainError(
            "planar operations need 2d coordinates (cover graphs have none)")
    if graph.allow_parallel:
        raise UnsupportedDomainError(
            "planar operations need a coordinate embedding without "
            "parallel edges")


def rotation_order(graph, v):
    """Incident (neighbour, edge id) pairs in counterclockwise order."""
    cx, cy = graph.coords[v]

    def angle(item):
        nx, ny = graph.coords[item[0]]
        return math.atan2(ny - cy, nx - cx) % (2 * math.pi)

    return sorted(graph.adj[v], key=angle)


def trace_faces(graph):
    """All face walks as dart lists; each dart (u, v, edge id) appears in
    exactly one face. Next dart after u->v leaves v toward the neighbour
    counterclockwise-before u, which keeps the face interior on the left.
    """
    _require_planar_coords(graph)
    rot = [rotation_order(graph, v) for v in range(graph.n_vertices)]
    pred = {}
    for v in range(graph.n_vertices):
        ring = rot[v]
        for i, (w, eid) in enumerate(ring):
            prev_w, prev_eid = ring[i - 1]
            pred[(v, w)] = (prev_w, prev_eid)
    faces = []
    unused = {(u, v) for u, v in graph.edges} | {(v, u) for u, v in graph.edges}
    while unused:
        start = min(unused)
        walk = []
        dart = start
        while True:
            u, v = dart
            unused.discard(dart)
            w, eid = pred[(v, u)]
            walk.append((u, v, graph.edge_id(u, v)))
            dart = (v, w)
            if dart == start:
                break
        faces.append(walk)
    return faces


def _signed_area(graph, walk):
    area = 0.0
    for u, v, _ in walk:
        ux, uy = graph.coords[u]
        vx, vy = graph.coords[v]
        area += ux * vy - vx * uy
    return area / 2.0


def outer_face_index(graph, faces):
    """The outer face: unique face of minimal (most negative) signed area.

    Trees and single edges have one face only (area 0), which is the outer
    one.
    """
    if len(faces) == 1:
        return 0
    areas = [_signed_area(graph, f) for f in faces]
    return min(range(len(faces)), key=lambda i: areas[i])


def outer_walk(graph):
    """Dart walk of the outer face (clockwise)."""
    faces = trace_faces(graph)
    return faces[outer_face_index(graph, faces)]


@dataclass
class DobrushinArcs:
    """Outer-walk split at the two marked vertices.

    wired_vertices runs clockwise from a to b (inclusive); wired_edges are
    the edge ids along that arc. free_vertices runs clockwise from b to a.
    Collapsed marks (a == b) give the singleton arc with no edges.
    """

    a: int
    b: int
    wired_vertices: tuple
    wired_edges: tuple
    free_vertices: tuple


def dobrushin_arcs(graph, a, b):
    a_id, b_id = graph.vid(a), graph.vid(b)
    if a_id == b_id:
        return DobrushinArcs(a_id, b_id, (a_id,), (), (a_id,))
    walk = outer_walk(graph)
    seq = [u for u, _, _ in walk]
    occ_a = [i for i, u in enumerate(seq) if u == a_id]
    occ_b = [i for i, u in enumerate(seq) if u == b_id]
    if len(occ_a) != 1 or len(occ_b) != 1:
        raise ValidationError(
            "marked vertices must occur exactly once on the outer walk; "
            "use an explicit partition for pinched domains")
    i, j = occ_a[0], occ_b[0]
    n = len(seq)
    span = (j - i) % n
    wired_v = tuple(seq[(i + t) % n] for t in range(span + 1))
    wired_e = tuple(walk[(i + t) % n][2] for t in range(span))
    free_v = tuple(seq[(j + t) % n] for t in range((i - j) % n + 1))
    return DobrushinArcs(a_id, b_id, wired_v, wired_e, free_v)


def split_outer_arcs(walk):
    """Split an outer walk into maximal dart runs with no repeated edge.

    A bridge is walked twice by the outer face; each passage must land in a
    different outer region, so runs break exactly at edge repeats (checked
    cyclically so the first and last run merge when legal).
    """
    arcs = []
    current = []
    used = set()
    for dart in walk:
        eid = dart[2]
        if eid in used:
            arcs.append(current)
            current, used = [], set()
        current.append(dart)
        used.add(eid)
    arcs.append(current)
    if len(arcs) > 1:
        first_edges = {d[2] for d in arcs[0]}
        if not first_edges & {d[2] for d in arcs[-1]}:
            arcs[0] = arcs.pop() + arcs[0]
    return [tuple(arc) for arc in arcs]
