"""End-to-end gate: exactly checkable identities at pinned tolerances plus
the Monte Carlo reproductions at desk scale.

Everything here is deterministic given the seeds baked into the calls, so a
green run stays green. The Monte Carlo checks compare against enumerated
truths at 3 batch-means stderr, or against pinned windows for the
finite-size critical-point scans.
"""

import itertools
import math

import numpy as np
import pytest

from rcmlab import (BoundarySpec, Domain, EventSpec, Graph,
                    UnsupportedDomainError, build_box, build_rect,
                    build_slit_box, build_strip_rect, dual_graph)
from rcmlab import exact, experiments, observable, sampler
from rcmlab.exact import ModelParams, dual_parameter, self_dual_point

Q_SET = (1.0, 2.0, 4.0)
P_SET = (0.3, 0.5)


def _per_config_gap(dom, params):
    dg = dual_graph(dom)
    ne = dom.graph.n_edges
    full = (1 << ne) - 1
    dual_params = params.with_p(dual_parameter(params.p, params.q))
    w = exact.config_weights(dom, params)
    wd = exact.config_weights(dg.domain, dual_params)
    idx = np.arange(1 << ne)
    return float(np.abs(w / w.sum() - wd[full ^ idx] / wd.sum()).max())


class TestGoldenValues:
    """Hand-derived partition functions and probabilities at q=2, p=1/2."""

    def test_single_edge(self):
        g = Domain(Graph([(0, 0), (1, 0)], [(0, 1)], [0, 1]),
                   BoundarySpec.free())
        params = ModelParams(p=0.5, q=2.0)
        assert abs(exact.partition_function(g, params) - 3.0) < 1e-12
        assert abs(exact.event_prob(g, params, EventSpec.edge_open(0))
                   - 1 / 3) < 1e-12

    def test_two_edge_path(self):
        g = Domain(Graph([(0, 0), (1, 0), (2, 0)], [(0, 1), (1, 2)],
                         [0, 2]), BoundarySpec.free())
        params = ModelParams(p=0.5, q=2.0)
        assert abs(exact.partition_function(g, params) - 4.5) < 1e-12
        assert abs(exact.connection_prob(g, params, 0, 2) - 1 / 9) < 1e-12


class TestConfigurationDuality:
    """Every configuration's probability equals its dual complement's,
    under the dual parameter and the mapped boundary condition."""

    DOMAINS = (
        ("box1", build_box(1), (0, 1), (0, -1)),
        ("rect3x4", build_rect(0, 2, 0, 3), (0, 0), (2, 3)),
    )

    @pytest.mark.parametrize("name,graph,ma,mb", DOMAINS,
                             ids=[d[0] for d in DOMAINS])
    def test_identity_all_bc_all_params(self, name, graph, ma, mb):
        specs = (BoundarySpec.free(), BoundarySpec.wired(),
                 BoundarySpec.dobrushin(ma, mb))
        for bc in specs:
            dom = Domain(graph, bc)
            for q in Q_SET:
                for p in P_SET + (self_dual_point(q),):
                    gap = _per_config_gap(dom, ModelParams(p=p, q=q))
                    assert gap <= 1e-10, (name, bc.kind, p, q, gap)


class TestContourVanishing:
    """Signed sums of the edge observable around admissible vertices vanish
    at the self-dual point on interface domains."""

    DOMAINS = (
        ("box1", Domain(build_box(1),
                        BoundarySpec.dobrushin((0, 1), (0, -1)))),
        ("slit1", Domain(build_slit_box(1),
                         BoundarySpec.dobrushin((0, 0), (0, 0)))),
        ("strip1x1", Domain(build_strip_rect(1, 1),
                            BoundarySpec.dobrushin((0, 1), (0, 0)))),
    )

    @pytest.mark.parametrize("q", [1.0, 2.0, 3.0, 3.5, 4.0])
    @pytest.mark.parametrize("dom", [d[1] for d in DOMAINS],
                             ids=[d[0] for d in DOMAINS])
    def test_all_contours_vanish(self, dom, q):
        assert dom.graph.n_edges <= 16
        report = observable.contour_report(dom, q)
        assert report["at_self_dual_point"]
        assert report["max_modulus"] <= 1e-9


class TestSamplerAgreement:
    """Long heat-bath chains reproduce enumerated probabilities on every
    small test graph, under all three boundary conditions."""

    BUDGET = 10**6

    def test_heat_bath_three_stderr(self, small_cases):
        for case in small_cases:
            assert len(case.graph.edges) <= 8
            events = case.events()
            assert len(events) >= 5
            for lbl, dom in case.domains():
                params = ModelParams(p=0.5, q=2.0)
                ests = sampler.estimate_events(
                    dom, params, [e for _, e in events], seed=417,
                    budget=self.BUDGET)
                for (name, ev), est in zip(events, ests):
                    truth = exact.event_prob(dom, params, ev)
                    assert abs(est.mean - truth) <= 3 * est.stderr, (
                        case.name, lbl, name, est.mean, truth, est.stderr)

    def test_one_sweep_stationarity(self, small_cases):
        for case in small_cases:
            if len(case.graph.edges) > 4:
                continue
            for lbl, dom in case.domains():
                for p, q in ((0.5, 2.0), (0.3, 4.0)):
                    params = ModelParams(p=p, q=q)
                    T = sampler.exact_sweep_matrix(dom, params)
                    w = exact.config_weights(dom, params)
                    pi = w / w.sum()
                    gap = float(np.abs(pi @ T - pi).max())
                    assert gap <= 1e-10, (case.name, lbl, p, q, gap)


class TestDifferentialInequalities:
    """Two lower bounds on the growth of increasing events in p.

    The log-derivative dominates the expected Hamming distance to the event
    divided by p(1-p). Separately, for q >= 1 a crude finite-energy bound
    gives d/dp P(A) >= (1/q) sum_e P(e pivotal); at q=1 this is an equality
    (product measure).
    """

    P_GRID = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)

    def _cases(self, small_cases):
        picks = [c for c in small_cases
                 if c.name in ("path3", "cycle4", "grid2x3")]
        for case in picks:
            ev = EventSpec.connection(0, case.graph.n_vertices - 1)
            for bc in (BoundarySpec.free(), BoundarySpec.wired()):
                yield case.name, Domain(case.graph, bc), ev

    def test_hamming_lower_bound(self, small_cases):
        for name, dom, ev in self._cases(small_cases):
            for q in Q_SET:
                for p in self.P_GRID:
                    params = ModelParams(p=p, q=q)
                    prob = exact.event_prob(dom, params, ev)
                    deriv, err = exact.event_prob_derivative(dom, params,
                                                             ev)
                    lhs = deriv / prob
                    rhs = exact.expected_hamming(dom, params, ev) / (
                        p * (1 - p))
                    tol = 1e-6 + 3 * err / prob
                    assert lhs >= rhs - tol, (name, q, p, lhs, rhs)

    def test_pivotal_lower_bound(self, small_cases):
        for name, dom, ev in self._cases(small_cases):
            for q in Q_SET:
                for p in self.P_GRID:
                    params = ModelParams(p=p, q=q)
                    deriv, err = exact.event_prob_derivative(dom, params,
                                                             ev)
                    total = math.fsum(
                        exact.pivotal_prob(dom, params, e, ev)
                        for e in range(dom.graph.n_edges))
                    tol = 1e-6 + 3 * err
                    assert deriv >= total / q - tol, (name, q, p)
                    if q == 1.0:
                        assert abs(deriv - total) <= tol, (name, p)


class TestBoundarySumLowerBound:
    """The minimum boundary connection sum over all 256 origin sets in the
    radius-1 box stays above the closed-form constant."""

    @pytest.mark.parametrize("q", [1.0, 2.0, 3.0])
    def test_exhaustive_minimum(self, q):
        res = experiments.lemma_q3_scan(1, q)
        assert res.n_sets == 256
        assert res.min_value > res.c_value
        assert res.passed
        if q == 2.0:
            assert abs(res.c_value - 0.9238795325112866) < 1e-12


class TestPositiveAssociation:
    """Connection events are positively associated: exhaustively over all
    vertex-pair events on every small graph and boundary condition."""

    def test_all_connection_pairs(self, small_cases):
        for case in small_cases:
            assert len(case.graph.edges) <= 8
            nv = case.graph.n_vertices
            pairs = list(itertools.combinations(range(nv), 2))
            events = [EventSpec.connection(u, v) for u, v in pairs]
            for lbl, dom in case.domains():
                for q in (1.0, 2.0, 4.0):
                    params = ModelParams(p=self_dual_point(q), q=q)
                    for a, b in itertools.combinations_with_replacement(
                            events, 2):
                        lhs, rhs, holds = exact.check_fkg(dom, params, a, b)
                        assert lhs >= rhs - 1e-12, (case.name, lbl, q,
                                                    a.name, b.name)


class TestCriticalPointEstimate:
    """Finite-size crossing curves pin the critical point at desk scale."""

    SIZES = (8, 16, 32)
    # The q=4 cluster chain mixes slowest; its budget is sized so the
    # steepest curve point stays under the 0.01 stderr cap.
    PLANS = (
        (1.0, 0.5, 0.03, 9, 60000, 0.500, 0.010),
        (2.0, None, 0.04, 9, 60000, 0.5858, 0.015),
        (4.0, None, 0.06, 11, 240000, 0.667, 0.020),
    )

    @staticmethod
    def _grid(center, half, count):
        step = 2 * half / (count - 1)
        return tuple(round(center + step * (i - (count - 1) / 2), 6)
                     for i in range(count))

    @pytest.mark.parametrize("q,center,half,count,budget,target,window",
                             PLANS, ids=["q1", "q2", "q4"])
    def test_intersections_bracket_target(self, q, center, half, count,
                                          budget, target, window):
        grid = self._grid(self_dual_point(q) if center is None else center,
                          half, count)
        scan = experiments.pc_estimate(q, self.SIZES, grid,
                                       budget=budget, seed=20260815)
        for pts in scan.curves.values():
            for _, est in pts:
                assert est.stderr <= 0.01
        assert len(scan.intersections) == 3
        for pair, abscissa in scan.intersections.items():
            assert abscissa is not None, pair
            assert abs(abscissa - target) <= window, (q, pair, abscissa)


class TestPercolationCrossing:
    """At q=1, p=1/2 the left-right crossing of the self-dual rectangle is
    exactly one half."""

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exact_half(self, n):
        v = experiments.rect_crossing_prob(n, ModelParams(p=0.5, q=1.0))
        assert abs(v - 0.5) <= 1e-10


class TestSectorSelection:
    """The winding-sector count satisfies both cosine sign conditions, and
    the degenerate endpoint is refused."""

    @pytest.mark.parametrize("q", [3.1, 3.5, 3.9])
    def test_sign_conditions(self, q):
        k = experiments.select_k(q)
        s = observable.sigma_hat(q)
        assert math.cos((2 * k + 1) * math.pi * s / 4) >= -1e-9
        assert math.cos((2 * k + 3) * math.pi * s / 4) <= 1e-9

    def test_q4_refused(self):
        with pytest.raises(UnsupportedDomainError):
            experiments.select_k(4.0)


class TestCoverDecayMonotone:
    """Origin-to-border probabilities on sheeted cover boxes weakly
    decrease with the box size at the self-dual point."""

    def test_weak_decrease(self):
        k = experiments.select_k(3.5)
        assert k == 3
        pts = experiments.uk_decay(3.5, k, 2, (4, 6, 8), budget=30000,
                                   seed=20260815)
        assert [p.n for p in pts] == [4, 6, 8]
        for a, b in zip(pts, pts[1:]):
            slack = 3 * math.hypot(a.estimate.stderr, b.estimate.stderr)
            assert b.estimate.mean <= a.estimate.mean + slack, (
                a.n, b.n, a.estimate.mean, b.estimate.mean, slack)
