"""Shared fixtures: the canonical small-graph family, reference events, and
the boundary-condition trio exercised across the suite."""

from dataclasses import dataclass

import pytest

from rcmlab import (BoundarySpec, Domain, EventSpec, Graph, build_box,
                    build_rect)


def two_arm_event(graph):
    """Vertex 0 reaches at least two boundary vertices through raw open
    paths (bc contractions deliberately ignored, like any predicate)."""
    bdry = frozenset(graph.boundary)
    adj = graph.adj

    def pred(mask):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w, eid in adj[u]:
                if (mask >> eid) & 1 and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen & bdry) >= 2

    return EventSpec.from_predicate(pred, increasing=True, name="two_arm")


@dataclass(frozen=True)
class GraphCase:
    """One member of the test family: a graph plus its interface marks."""

    name: str
    graph: Graph
    mark_a: tuple
    mark_b: tuple

    def bc_trio(self):
        return (("free", BoundarySpec.free()),
                ("wired", BoundarySpec.wired()),
                ("dobrushin",
                 BoundarySpec.dobrushin(self.mark_a, self.mark_b)))

    def domains(self):
        return tuple((lbl, Domain(self.graph, bc))
                     for lbl, bc in self.bc_trio())

    def events(self):
        """Five reference events, all increasing: two point connections,
        vertex 0 to the boundary, one cylinder event, one raw two-arm."""
        g = self.graph
        lu, lv = g.edges[-1]
        return (
            ("ends_joined", EventSpec.connection(0, g.n_vertices - 1)),
            ("last_edge_pair", EventSpec.connection(lu, lv)),
            ("v0_to_boundary",
             EventSpec.connection_to_set(0, sorted(g.boundary))),
            ("edge0_open", EventSpec.edge_open(0)),
            ("two_arm", two_arm_event(g)),
        )


def _family():
    edge1 = Graph([(0, 0), (1, 0)], [(0, 1)], [0, 1])
    path3 = Graph([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)], [0, 2])
    path4 = Graph([(0, 0), (1, 0), (2, 0), (3, 0)],
                  [(0, 1), (1, 2), (2, 3)], [0, 3])
    cycle4 = Graph([(0, 0), (1, 0), (1, 1), (0, 1)],
                   [(0, 1), (1, 2), (2, 3), (0, 3)], [0, 1, 2, 3])
    cycle4_tail = Graph([(0, 0), (1, 0), (1, 1), (0, 1), (2, 0)],
                        [(0, 1), (1, 2), (2, 3), (0, 3), (1, 4)],
                        [0, 1, 2, 3, 4])
    grid2x3 = build_rect(0, 2, 0, 1)
    return (
        GraphCase("edge1", edge1, (0, 0), (1, 0)),
        GraphCase("path3", path3, (0, 0), (2, 0)),
        GraphCase("path4", path4, (0, 0), (3, 0)),
        GraphCase("cycle4", cycle4, (0, 0), (1, 1)),
        GraphCase("cycle4_tail", cycle4_tail, (0, 0), (2, 0)),
        GraphCase("grid2x3", grid2x3, (0, 0), (2, 1)),
    )


_SMALL = _family()
_BOX1 = GraphCase("box1", build_box(1), (0, 1), (0, -1))


@pytest.fixture(scope="session")
def small_cases():
    """The canonical family with at most 8 edges each."""
    return _SMALL


@pytest.fixture(scope="session")
def box1_case():
    return _BOX1


@pytest.fixture(scope="session")
def all_cases():
    return _SMALL + (_BOX1,)


@pytest.fixture(params=_SMALL, ids=lambda c: c.name)
def case(request):
    return request.param
