"""Graph constructions: counts, labels, adjacency, bc validation, JSON."""

import pytest

from rcmlab import (BoundarySpec, Domain, Graph, ValidationError,
                    ambient_edge_boundary, build_box, build_rect,
                    build_slit_box, build_strip_rect,
                    build_universal_cover_box, edge_boundary,
                    induced_subdomain)


def _assert_adjacency_consistent(g):
    pairs = set()
    for v in range(g.n_vertices):
        for w, eid in g.adj[v]:
            assert g.edges[eid] in ((v, w), (w, v))
            pairs.add((min(v, w), max(v, w)))
    assert pairs == set(g.edges) or g.allow_parallel
    for v in range(g.n_vertices):
        for w, _ in g.adj[v]:
            assert any(x == v for x, _ in g.adj[w])


class TestBox:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_counts(self, n):
        g = build_box(n)
        side = 2 * n + 1
        assert g.n_vertices == side * side
        assert g.n_edges == 2 * side * (side - 1)
        assert len(g.boundary) == 8 * n
        for v in g.boundary:
            x, y = g.coords[v]
            assert max(abs(x), abs(y)) == n
        _assert_adjacency_consistent(g)

    def test_half_plane(self):
        g = build_box(2, kind="half_plane")
        assert all(y >= 0 for _, y in g.coords)
        assert g.n_vertices == 5 * 3
        for v in g.boundary:
            x, y = g.coords[v]
            assert max(abs(x), abs(y)) == 2 or y == 0
        _assert_adjacency_consistent(g)

    def test_rejects_bad_size(self):
        with pytest.raises(ValidationError):
            build_box(0)
        with pytest.raises(ValidationError):
            build_box(1, kind="diagonal")


class TestRect:
    def test_counts(self):
        g = build_rect(0, 2, 0, 1)
        assert g.n_vertices == 6
        assert g.n_edges == 7
        assert len(g.boundary) == 6
        _assert_adjacency_consistent(g)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            build_rect(2, 1, 0, 0)


class TestStrip:
    @pytest.mark.parametrize("n,m", [(1, 1), (1, 2), (2, 1), (3, 2)])
    def test_counts_and_labels(self, n, m):
        g = build_strip_rect(n, m)
        w = 2 * m + 1
        assert g.n_vertices == w * (n + 1)
        assert g.n_edges == 2 * m * (n + 1) + w * n
        plus = {g.coords[v] for v in g.labels["plus"]}
        minus = {g.coords[v] for v in g.labels["minus"]}
        assert plus == {(x, y) for x in range(0, m + 1) for y in (0, n)}
        assert minus == {(x, y) for x in range(-m, 1) for y in (0, n)}
        assert {g.coords[v] for v in g.labels["minus_bottom"]} == \
            {(x, 0) for x in range(-m, 0)}
        assert {g.coords[v][0] for v in g.labels["left_col"]} == {-m}
        assert {g.coords[v][0] for v in g.labels["right_col"]} == {m}
        _assert_adjacency_consistent(g)


class TestSlitBox:
    def test_slit_removed(self):
        g = build_slit_box(2)
        coords = set(g.coords)
        assert (0, 1) not in coords and (0, 2) not in coords
        assert (0, 0) in coords and (0, -1) in coords
        # the origin lost its north neighbour, so it sits on the boundary
        assert g.vid((0, 0)) in g.boundary
        assert g.degree((0, 0)) == 3
        _assert_adjacency_consistent(g)

    def test_boundary_is_low_degree(self):
        g = build_slit_box(1)
        for v in range(g.n_vertices):
            assert (v in g.boundary) == (g.degree(v) < 4)


class TestUniversalCover:
    def test_sheets_and_counts(self):
        n, k = 2, 1
        g = build_universal_cover_box(n, k)
        side = 2 * n + 1
        assert g.n_vertices == side * side * (2 * k + 1)
        assert {c[2] for c in g.coords} == {-1, 0, 1}
        _assert_adjacency_consistent(g)

    def test_projection_and_cut(self):
        """Dropping the sheet is a graph homomorphism onto the plane box;
        vertical edges stay in-sheet; only cut crossings with y <= -1
        change sheet, by exactly one."""
        n, k = 2, 1
        g = build_universal_cover_box(n, k)
        plane = build_box(n)
        plane_pairs = {frozenset((plane.coords[u], plane.coords[v]))
                       for u, v in plane.edges}
        for u, v in g.edges:
            (x1, y1, z1), (x2, y2, z2) = g.coords[u], g.coords[v]
            assert frozenset(((x1, y1), (x2, y2))) in plane_pairs
            if x1 == x2:
                assert z1 == z2
            elif {x1, x2} == {0, 1} and max(y1, y2) <= -1:
                assert abs(z1 - z2) == 1
            else:
                assert z1 == z2

    def test_loop_around_cut_changes_sheet(self):
        g = build_universal_cover_box(2, 1)
        loop = [(0, 0), (0, -1), (1, -1), (1, 0), (0, 0)]
        sheet = 0
        for (x1, y1), (x2, y2) in zip(loop, loop[1:]):
            for dz in (-1, 0, 1):
                try:
                    g.edge_id((x1, y1, sheet), (x2, y2, sheet + dz))
                except ValidationError:
                    continue
                sheet += dz
                break
        assert sheet != 0

    def test_labels(self):
        g = build_universal_cover_box(2, 1)
        for v in g.labels["box_boundary"]:
            x, y, _ = g.coords[v]
            assert max(abs(x), abs(y)) == 2
        for v in g.labels["cut_boundary"]:
            x, y, z = g.coords[v]
            assert x == 0 and y <= 0 and abs(z) == 1


class TestGraphBasics:
    def test_vid_and_edge_id(self):
        g = build_rect(0, 1, 0, 1)
        assert g.vid((0, 0)) == g.vid(g.vid((0, 0)))
        eid = g.edge_id((0, 0), (1, 0))
        assert eid == g.edge_id((1, 0), (0, 0))
        with pytest.raises(ValidationError):
            g.vid((9, 9))
        with pytest.raises(ValidationError):
            g.edge_id((0, 0), (1, 1))

    def test_rejects_bad_graphs(self):
        with pytest.raises(ValidationError):
            Graph([(0, 0), (0, 0)], [])
        with pytest.raises(ValidationError):
            Graph([(0, 0), (1, 0)], [(0, 0)])
        with pytest.raises(ValidationError):
            Graph([(0, 0), (1, 0)], [(0, 1), (1, 0)])
        with pytest.raises(ValidationError):
            Graph([(0, 0)], [], boundary=[3])

    def test_json_round_trip(self, all_cases):
        for case in all_cases:
            g = case.graph
            h = Graph.from_json(g.to_json())
            assert h.coords == g.coords
            assert h.edges == g.edges
            assert h.boundary == g.boundary
            assert h.labels == g.labels
        with pytest.raises(ValidationError):
            Graph.from_json('{"format": "something-else"}')


class TestBoundarySpec:
    def test_dobrushin_marks_must_be_boundary(self):
        g = build_box(1)
        with pytest.raises(ValidationError):
            Domain(g, BoundarySpec.dobrushin((0, 0), (0, 1)))

    def test_partition_validation(self):
        g = build_box(1)
        with pytest.raises(ValidationError):
            Domain(g, BoundarySpec.partition([[(0, 1)], [(0, 1)]]))
        with pytest.raises(ValidationError):
            Domain(g, BoundarySpec.partition([[(0, 0)]]))

    def test_block_structure(self, all_cases):
        for case in all_cases:
            g = case.graph
            assert BoundarySpec.free().blocks(g) == ()
            wired = BoundarySpec.wired().blocks(g)
            assert wired == (frozenset(g.boundary),)
            dob = BoundarySpec.dobrushin(case.mark_a, case.mark_b)
            (block,) = dob.blocks(g)
            assert g.vid(case.mark_a) in block
            assert g.vid(case.mark_b) in block

    def test_vertex_reps_contraction(self):
        g = build_box(1)
        reps, n_free = Domain(g, BoundarySpec.free()).vertex_reps()
        assert n_free == g.n_vertices
        reps, n_wired = Domain(g, BoundarySpec.wired()).vertex_reps()
        assert n_wired == g.n_vertices - len(g.boundary) + 1
        assert len({reps[v] for v in g.boundary}) == 1


class TestSubdomains:
    def test_induced_subdomain(self):
        g = build_box(1)
        sub = induced_subdomain(g, [(0, 0), (1, 0), (0, 1)])
        assert sub.n_vertices == 3
        assert sub.n_edges == 2
        assert set(sub.coords) == {(0, 0), (1, 0), (0, 1)}

    def test_edge_boundary(self):
        g = build_box(1)
        cut = edge_boundary(g, [(0, 0)])
        assert len(cut) == 4
        assert all(g.coords[x] == (0, 0) for x, _ in cut)

    def test_ambient_edge_boundary_counts_lattice_exits(self):
        g = build_box(1)
        # the corner keeps 4 lattice exits even though the graph only has 2
        cut = ambient_edge_boundary(g, [(1, 1)])
        assert len(cut) == 4
        inner = ambient_edge_boundary(g, [(0, 0)])
        assert len(inner) == 4
