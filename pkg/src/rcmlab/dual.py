"""Planar dual domains with matched boundary conditions.

The dual graph has one vertex per bounded face plus outer-region vertices
obtained by splitting the outer walk; the edge bijection is the identity on
ids (dual edge e crosses primal edge e). Boundary conditions map so that the
configuration flip ω*(e) = 1 - ω(e) carries the measure at (p, q) to the
measure at (p*, q): free maps to wired (whole outer region one vertex per
arc), wired maps to free with every outer-walk passage getting its own dual
vertex (contracting the primal boundary splits the outer region into one
fragment per border edge), and an interface pair (a, b) gets one dual vertex
per wired-arc edge plus a single vertex for the free arc's outer side.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConstructionBugError, UnsupportedDomainError
from .lattice import BoundarySpec, Domain, Graph
from .planar import (_require_planar_coords, dobrushin_arcs,
                     outer_face_index, split_outer_arcs, trace_faces)

__all__ = ["DualGraph", "dual_graph"]


@dataclass
class DualGraph:
    """Dual domain, primal edge id -> dual edge id map, and the primal."""

    domain: Domain
    edge_bijection: dict
    primal: Domain

    @property
    def graph(self) -> Graph:
        return self.domain.graph

    @property
    def bc(self) -> BoundarySpec:
        return self.domain.bc


def _face_centroid(graph, walk):
    xs = [graph.coords[u][0] for u, _, _ in walk]
    ys = [graph.coords[u][1] for u, _, _ in walk]
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def dual_graph(domain: Domain) -> DualGraph:
    """Construct the dual domain; applied to a dual it returns the stored
    primal, so dualizing twice is the identity on edge ids."""
    stored = getattr(domain.graph, "_dual_primal", None)
    if stored is not None:
        primal_domain, bij = stored
        inverse = {d: p for p, d in bij.items()}
        return DualGraph(domain=primal_domain, edge_bijection=inverse,
                         primal=domain)

    g = domain.graph
    bc = domain.bc
    _require_planar_coords(g)
    if bc.kind == "partition":
        raise UnsupportedDomainError(
            "duality is defined for free, wired, and interface-pair "
            "boundary conditions only")

    faces = trace_faces(g)
    outer_i = outer_face_index(g, faces)
    region_of = {}
    dual_coords = []
    for fi, walk in enumerate(faces):
        if fi == outer_i:
            continue
        rid = len(dual_coords)
        for u, v, _ in walk:
            region_of[(u, v)] = rid
        dual_coords.append(_face_centroid(g, walk))
    n_bounded = len(dual_coords)
    outer = faces[outer_i]

    collapsed = (bc.kind == "dobrushin" and g.vid(bc.a) == g.vid(bc.b))
    if bc.kind == "free" or collapsed:
        arcs = split_outer_arcs(outer)
        for ai, arc in enumerate(arcs):
            rid = n_bounded + ai
            for u, v, _ in arc:
                region_of[(u, v)] = rid
            dual_coords.append(("outer", ai))
        # Flipping a configuration turns joined-up boundary into cut-apart
        # boundary and vice versa.
        dual_bc = BoundarySpec.wired()
    elif bc.kind == "wired":
        # Contracting the wired boundary to a point pushes the graph onto a
        # sphere whose far side is pinched apart at every visit of that
        # point, so the outer walk splits into one fragment per arrival at a
        # wired vertex and nothing gets wired on the dual side.
        block = frozenset().union(*bc.blocks(g)) if bc.blocks(g) else \
            frozenset()
        runs = []
        current = []
        for dart in outer:
            if dart[0] in block and current:
                runs.append(current)
                current = []
            current.append(dart)
        runs.append(current)
        if len(runs) > 1 and outer[0][0] not in block:
            runs[0] = runs.pop() + runs[0]
        for ai, run in enumerate(runs):
            rid = n_bounded + ai
            for u, v, _ in run:
                region_of[(u, v)] = rid
            dual_coords.append(("outer", ai))
        dual_bc = BoundarySpec.free()
    else:
        arcs = dobrushin_arcs(g, bc.a, bc.b)
        seen = set()
        for u, v, eid in outer:
            if eid in seen:
                raise UnsupportedDomainError(
                    "interface-pair duality needs an outer walk without "
                    "repeated edges")
            seen.add(eid)
        wired_region = {}
        for i, eid in enumerate(arcs.wired_edges):
            rid = n_bounded + i
            wired_region[eid] = rid
            dual_coords.append(("outer_arc", i))
        free_rid = len(dual_coords)
        dual_coords.append(("outer", 0))
        for u, v, eid in outer:
            region_of[(u, v)] = wired_region.get(eid, free_rid)
        dual_bc = BoundarySpec.partition([(free_rid,)])

    dual_edges = []
    bijection = {}
    for eid, (u, v) in enumerate(g.edges):
        r1 = region_of[(u, v)]
        r2 = region_of[(v, u)]
        if r1 == r2:
            raise ConstructionBugError(
                "edge %d has the same region on both sides" % eid)
        dual_edges.append((r1, r2))
        bijection[eid] = eid
    dual_boundary = range(n_bounded, len(dual_coords))
    dual_g = Graph(dual_coords, dual_edges, dual_boundary,
                   allow_parallel=True)
    dual_domain = Domain(dual_g, dual_bc)
    dual_g._dual_primal = (domain, bijection)
    return DualGraph(domain=dual_domain, edge_bijection=bijection,
                     primal=domain)
