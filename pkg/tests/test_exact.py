"""Enumeration engine: golden values, derivatives, inequalities, guards.

The single-edge and 3-path numbers are hand-derived. For the 3-path
(edges a-b, b-c, free bc, q=2, p=1/2): weights are 2, 1, 1, 1/2 over the
four configurations, so Z = 4.5, P(a<->c) = 1/9, d/dp P(a<->c) = 16/27,
P(edge a-b pivotal for a<->c) = P(b-c open) = 1/3, and the expected
Hamming distance to {a<->c} is (2*2 + 1 + 1)/4.5 = 4/3.
"""

import math

import numpy as np
import pytest

from rcmlab import (BoundarySpec, Domain, EventSpec, Graph, TooLargeError,
                    ValidationError, build_box, build_rect)
from rcmlab import exact
from rcmlab.exact import ModelParams


def _edge_domain():
    return Domain(Graph([(0, 0), (1, 0)], [(0, 1)], [0, 1]),
                  BoundarySpec.free())


def _path_domain():
    return Domain(Graph([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)], [0, 2]),
                  BoundarySpec.free())


PR = ModelParams(p=0.5, q=2.0)


class TestGoldenValues:
    def test_single_edge(self):
        dom = _edge_domain()
        assert abs(exact.partition_function(dom, PR) - 3.0) < 1e-12
        assert abs(exact.event_prob(dom, PR, EventSpec.edge_open(0))
                   - 1 / 3) < 1e-12
        assert abs(exact.prob(dom, PR, 0) - 2 / 3) < 1e-12
        assert abs(exact.weight(dom, PR, 1) - 1.0) < 1e-12

    def test_three_path(self):
        dom = _path_domain()
        conn = EventSpec.connection(0, 2)
        assert abs(exact.partition_function(dom, PR) - 4.5) < 1e-12
        assert abs(exact.event_prob(dom, PR, conn) - 1 / 9) < 1e-12
        d, err = exact.event_prob_derivative(dom, PR, conn)
        assert abs(d - 16 / 27) < 1e-6 + 3 * err
        assert abs(exact.pivotal_prob(dom, PR, 0, conn) - 1 / 3) < 1e-12
        assert abs(exact.expected_hamming(dom, PR, conn) - 4 / 3) < 1e-12

    def test_cluster_count(self):
        dom = _path_domain()
        assert exact.cluster_count(dom, 0b00) == 3
        assert exact.cluster_count(dom, 0b01) == 2
        assert exact.cluster_count(dom, 0b11) == 1
        wired = Domain(dom.graph, BoundarySpec.wired())
        assert exact.cluster_count(wired, 0b00) == 2


class TestParams:
    def test_q_below_one_rejected(self):
        with pytest.raises(ValidationError):
            ModelParams(p=0.5, q=0.5)

    def test_p_range(self):
        with pytest.raises(ValidationError):
            ModelParams(p=0.0, q=2.0)
        with pytest.raises(ValidationError):
            ModelParams(p=1.0, q=2.0)

    def test_self_dual_point(self):
        for q, want in ((1.0, 0.5), (2.0, math.sqrt(2) / (1 + math.sqrt(2))),
                        (4.0, 2 / 3)):
            assert abs(exact.self_dual_point(q) - want) < 1e-12

    def test_dual_parameter_q1(self):
        for p in (0.2, 0.5, 0.9):
            assert abs(exact.dual_parameter(p, 1.0) - (1 - p)) < 1e-12


class TestEventMachinery:
    def test_indicator_is_uint8_and_matches_prob(self, case):
        dom = Domain(case.graph, BoundarySpec.free())
        for _, ev in case.events():
            ind = exact.event_indicator(dom, ev)
            assert ind.dtype == np.uint8
            w = exact.config_weights(dom, PR)
            by_hand = float((w * ind).sum() / w.sum())
            assert abs(by_hand - exact.event_prob(dom, PR, ev)) < 1e-12

    def test_bc_changes_connection_probability(self):
        g = _path_domain().graph
        conn = EventSpec.connection(0, 2)
        free = exact.event_prob(Domain(g, BoundarySpec.free()), PR, conn)
        wired = exact.event_prob(Domain(g, BoundarySpec.wired()), PR, conn)
        assert wired == 1.0 and free < 1.0

    def test_predicates_see_raw_bits(self):
        """bc contractions weight the measure but never rewrite the mask a
        predicate sees."""
        g = _path_domain().graph
        wired = Domain(g, BoundarySpec.wired())
        ev = EventSpec.from_predicate(lambda m: m == 0, increasing=False,
                                      name="all_closed")
        w = exact.config_weights(wired, PR)
        assert abs(exact.event_prob(wired, PR, ev)
                   - float(w[0] / w.sum())) < 1e-12

    def test_connection_accepts_coords(self):
        dom = _path_domain()
        a = exact.event_prob(dom, PR, EventSpec.connection((0, 0), (2, 0)))
        b = exact.event_prob(dom, PR, EventSpec.connection(0, 2))
        assert a == b

    def test_audit_increasing(self, case):
        dom = Domain(case.graph, BoundarySpec.free())
        for _, ev in case.events():
            assert exact.audit_increasing(dom, ev)
        decreasing = EventSpec.from_predicate(lambda m: m == 0,
                                              increasing=True,
                                              name="mislabelled")
        assert not exact.audit_increasing(dom, decreasing)

    def test_enumeration_caps(self):
        big = build_rect(0, 23, 0, 0)
        dom = Domain(big, BoundarySpec.free())
        with pytest.raises(TooLargeError):
            exact.event_indicator(dom, EventSpec.edge_open(0))
        huge = build_rect(0, 27, 0, 0)
        with pytest.raises(TooLargeError):
            exact.event_prob(Domain(huge, BoundarySpec.free()), PR,
                             EventSpec.connection(0, 1))


class TestInequalities:
    def test_fkg_three_path_is_equality(self):
        """Disjoint single-edge connections on the free 3-path at q=2,
        p=1/2 are uncorrelated: both sides equal 1/9 exactly."""
        dom = _path_domain()
        a = EventSpec.connection(0, 1)
        b = EventSpec.connection(1, 2)
        lhs, rhs, holds = exact.check_fkg(dom, PR, a, b)
        assert holds
        assert abs(lhs - 1 / 9) < 1e-14
        assert abs(lhs - rhs) < 1e-14

    def test_fkg_across_family(self, case):
        for _, dom in case.domains():
            for q in (1.0, 2.0, 4.0):
                pr = ModelParams(p=exact.self_dual_point(q), q=q)
                for _, a in case.events():
                    for _, b in case.events():
                        lhs, rhs, holds = exact.check_fkg(dom, pr, a, b)
                        assert holds, (case.name, a.name, b.name)

    def test_fkg_rejects_unflagged(self):
        dom = _edge_domain()
        ev = EventSpec.from_predicate(lambda m: True, name="unflagged")
        with pytest.raises(ValidationError):
            exact.check_fkg(dom, PR, ev, ev)

    def test_domination_order(self, case):
        """Coarser boundary partitions dominate finer ones on increasing
        events. On path-like graphs the interface arc sweeps interior
        outer-walk vertices, so it can sit above wired; the containment of
        the blocks decides the direction either way."""
        g = case.graph
        free = BoundarySpec.free()
        wired = BoundarySpec.wired()
        dob = BoundarySpec.dobrushin(case.mark_a, case.mark_b)
        (dob_block,) = dob.blocks(g)
        wired_block = frozenset(g.boundary)
        pr = ModelParams(p=0.45, q=2.0)
        for _, ev in case.events():
            assert exact.check_domination(g, wired, free, pr, ev)
            assert exact.check_domination(g, dob, free, pr, ev)
            if dob_block <= wired_block:
                assert exact.check_domination(g, wired, dob, pr, ev)
            elif wired_block <= dob_block:
                assert exact.check_domination(g, dob, wired, pr, ev)

    def test_domination_needs_coarsening(self):
        g = build_box(1)
        a = BoundarySpec.partition([[(0, 1), (1, 1)]])
        b = BoundarySpec.partition([[(0, -1), (1, -1)]])
        with pytest.raises(ValidationError):
            exact.check_domination(g, a, b, PR,
                                   EventSpec.connection(0, 1))

    def test_finite_energy(self, case):
        for _, dom in case.domains():
            for (p, q) in ((0.3, 1.0), (0.5, 2.0), (0.7, 4.0)):
                pr = ModelParams(p=p, q=q)
                for e in range(case.graph.n_edges):
                    rep = exact.check_finite_energy(dom, pr, e)
                    assert rep.holds, (case.name, e, rep)
                    assert rep.lower - 1e-12 <= rep.min_ratio
                    assert rep.min_ratio <= rep.max_ratio
                    assert rep.max_ratio <= rep.upper + 1e-12

    def test_russo_equality_at_q1(self):
        """At q=1 the derivative equals the pivotal sum exactly (product
        measure), so the Richardson estimate must land on it."""
        g = Graph([(0, 0), (1, 0), (1, 1), (0, 1)],
                  [(0, 1), (1, 2), (2, 3), (0, 3)], [0, 1, 2, 3])
        dom = Domain(g, BoundarySpec.free())
        pr = ModelParams(p=0.4, q=1.0)
        ev = EventSpec.connection(0, 2)
        d, err = exact.event_prob_derivative(dom, pr, ev)
        piv = sum(exact.pivotal_prob(dom, pr, e, ev)
                  for e in range(g.n_edges))
        assert abs(d - piv) < 1e-6 + 3 * err


class TestDerivativeGuards:
    def test_step_must_stay_inside(self):
        dom = _edge_domain()
        with pytest.raises(ValidationError):
            exact.event_prob_derivative(dom, ModelParams(p=1e-6, q=2.0),
                                        EventSpec.edge_open(0))

    def test_empty_event_hamming(self):
        dom = _edge_domain()
        never = EventSpec.from_predicate(lambda m: False, increasing=True,
                                         name="never")
        with pytest.raises(ValidationError):
            exact.expected_hamming(dom, PR, never)

    def test_pivotal_and_fail(self):
        dom = _path_domain()
        conn = EventSpec.connection(0, 2)
        both = exact.pivotal_prob(dom, PR, 0, conn)
        fail = exact.pivotal_and_fail_prob(dom, PR, 0, conn)
        assert 0.0 <= fail <= both
