"""Boundary connection sums, strip crossings with dual interfaces, cover
index selection and decay, and finite-size critical-point scans.

Strip conventions. The height-n strip is truncated to x in [-m, m]; the two
boundary rows split at the marks (0,0) and (0,n) into a plus side (x >= 0,
extended by the right truncation column) and a strict minus side (x <= -1,
extended by the left truncation column). The bottom/top crossing event, the
shielded set and the dual interface all use raw open-path connectivity; the
boundary condition only weights configurations. Truncation side conditions
are reported both wired (the whole border in one block) and free (only the
two rows wired), bracketing the untruncated strip for increasing events.
"""

import math
import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import exact
from . import sampler
from .errors import (TooLargeError, UnsupportedDomainError, ValidationError,
                     ConstructionBugError)
from .exact import EventSpec, ModelParams, self_dual_point, dual_parameter
from .dual import dual_graph
from .lattice import (BoundarySpec, Domain, Graph, ambient_edge_boundary,
                      build_box, build_rect, build_strip_rect,
                      build_universal_cover_box, edge_boundary,
                      induced_subdomain)
from .observable import sigma_hat
from .sampler import Estimate

# per-configuration python loops; 2^16 is a couple of seconds
SWEEP_CAP = 16

_ORIGIN = (0, 0)


# ---------------------------------------------------------------------------
# boundary connection sums


@dataclass(frozen=True)
class PhiReport:
    """A sum of connection probabilities over the edge boundary of a set.

    breakdown holds ((inside endpoint, outside endpoint), term) per boundary
    edge; value is the fsum of the terms and every term lies in [0, 1].
    """

    S: tuple
    value: float
    breakdown: tuple

    def __post_init__(self):
        for (_, term) in self.breakdown:
            if not -1e-12 <= term <= 1 + 1e-12:
                raise ConstructionBugError(
                    "connection term %r outside [0,1]" % term)


def phi_fn(ambient: Graph, S, params: ModelParams) -> PhiReport:
    """Sum, over all square-lattice edges leaving S, of the probability
    that the inside endpoint connects to the origin in the free-boundary
    random-cluster measure on the subgraph induced by S.

    S is a set of vertices (ids or coordinates) of ambient containing the
    origin. Boundary edges are counted in the full lattice, so exits
    pointing outside ambient still contribute a term.
    """
    ids = sorted({ambient.vid(v) for v in S})
    coords = [ambient.coords[v] for v in ids]
    if _ORIGIN not in coords:
        raise ValidationError("the set must contain the origin")
    sub = induced_subdomain(ambient, ids)
    dom = Domain(sub, BoundarySpec.free())
    delta = ambient_edge_boundary(ambient, ids)
    probs: Dict[int, float] = {}
    breakdown = []
    for x_id, out_coord in delta:
        if x_id not in probs:
            probs[x_id] = exact.connection_prob(
                dom, params, _ORIGIN, ambient.coords[x_id])
        breakdown.append(((ambient.coords[x_id], out_coord), probs[x_id]))
    value = math.fsum(term for _, term in breakdown)
    return PhiReport(S=tuple(sorted(coords)), value=value,
                     breakdown=tuple(breakdown))


def lemma_C(q: float) -> float:
    """Lower-bound constant for the boundary connection sum at the
    self-dual point: half the chord length |e^{i sigma pi/2} - 1| times
    (1 + sqrt q)."""
    s = sigma_hat(q)
    return 0.5 * abs(cmath.exp(1j * s * math.pi / 2) - 1) * (1 + math.sqrt(q))


@dataclass(frozen=True)
class ScanResult:
    """Minimum of the boundary connection sum over a family of sets."""

    q: float
    n: int
    p: float
    c_value: float
    min_value: float
    argmin: tuple
    n_sets: int
    passed: bool


def _connected_sets_upto(universe, root, max_size):
    """All connected subsets of universe (a set of planar coords) that
    contain root, up to the given size. BFS over the subset lattice with
    dedup; fine for a few tens of thousands of sets."""
    seed = frozenset([root])
    found = {seed}
    frontier = [seed]
    while frontier:
        nxt = []
        for s in frontier:
            if len(s) >= max_size:
                continue
            for (x, y) in s:
                for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if nb in universe and nb not in s:
                        t = s | {nb}
                        if t not in found:
                            found.add(t)
                            nxt.append(t)
        frontier = nxt
    return found


def _random_connected_sets(universe, root, n_sets, max_size, seed):
    """Random connected sets grown by repeatedly attaching a uniformly
    chosen lattice neighbour, the documented sampling family for scans too
    large to enumerate."""
    rng = np.random.default_rng(seed)
    out = set()
    for _ in range(n_sets):
        target = int(rng.integers(2, max_size + 1))
        s = {root}
        while len(s) < target:
            frontier = sorted({nb for (x, y) in s
                               for nb in ((x + 1, y), (x - 1, y),
                                          (x, y + 1), (x, y - 1))
                               if nb in universe and nb not in s})
            if not frontier:
                break
            s.add(frontier[int(rng.integers(len(frontier)))])
        out.add(frozenset(s))
    return out


def lemma_q3_scan(n: int, q: float, max_size: int = 8, n_random: int = 200,
                  seed: int = 11) -> ScanResult:
    """Scan sets containing the origin in the size-n box and compare the
    minimum boundary connection sum at the self-dual point against the
    lemma_C constant.

    n = 1 scans all 256 subsets of the box containing the origin; larger n
    scans every connected set up to max_size vertices plus a seeded random
    growth family.
    """
    if n < 1:
        raise ValidationError("box size must be >= 1")
    p = self_dual_point(q)
    params = ModelParams(p=p, q=q)
    ambient = build_box(n)
    box_coords = [c for c in ambient.coords]
    if n == 1:
        others = sorted(c for c in box_coords if c != _ORIGIN)
        sets = [frozenset([_ORIGIN]) | {others[i] for i in range(len(others))
                                        if (bits >> i) & 1}
                for bits in range(1 << len(others))]
    else:
        universe = set(box_coords)
        family = _connected_sets_upto(universe, _ORIGIN, max_size)
        family |= _random_connected_sets(universe, _ORIGIN, n_random,
                                         max_size, seed)
        sets = sorted(family, key=lambda s: (len(s), sorted(s)))
    c_value = lemma_C(q)
    min_value = math.inf
    argmin: tuple = ()
    for s in sets:
        rep = phi_fn(ambient, s, params)
        if rep.value < min_value:
            min_value = rep.value
            argmin = rep.S
    passed = min_value >= c_value - 1e-12
    return ScanResult(q=q, n=n, p=p, c_value=c_value, min_value=min_value,
                      argmin=argmin, n_sets=len(sets), passed=passed)


# ---------------------------------------------------------------------------
# truncated strips


_strip_cache: Dict[Tuple[int, int], Graph] = {}


def _strip_graph(n: int, m: int) -> Graph:
    g = _strip_cache.get((n, m))
    if g is None:
        g = build_strip_rect(n, m)
        _strip_cache[(n, m)] = g
    return g


def _strip_domain(graph: Graph, n: int, side: str) -> Domain:
    """Wired side condition wires the whole border; free wires only the two
    strip rows, leaving the truncation columns free."""
    if side == "wired":
        return Domain(graph, BoundarySpec.wired())
    if side == "free":
        rows = [v for v in range(graph.n_vertices)
                if graph.coords[v][1] in (0, n)]
        return Domain(graph, BoundarySpec.partition([rows]))
    raise ValidationError("side must be wired or free")


def _strip_sides(graph: Graph, n: int):
    """(minus, plus) vertex ids: strict minus rows plus the left column,
    marks and the right column on the plus side."""
    minus = {v for v in range(graph.n_vertices)
             if graph.coords[v][1] in (0, n) and graph.coords[v][0] <= -1}
    minus |= set(graph.labels["left_col"])
    plus = {v for v in range(graph.n_vertices)
            if graph.coords[v][1] in (0, n) and graph.coords[v][0] >= 0}
    plus |= set(graph.labels["right_col"])
    return frozenset(minus), frozenset(plus)


def _open_reach(adj, config: int, seeds, allowed=None) -> frozenset:
    """Vertices reachable from seeds through open edges, optionally
    restricted to the allowed vertex set."""
    if allowed is not None:
        seeds = [v for v in seeds if v in allowed]
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for w, eid in adj[u]:
            if (config >> eid) & 1 and w not in seen:
                if allowed is None or w in allowed:
                    seen.add(w)
                    stack.append(w)
    return frozenset(seen)


def phi_bar_fn(n: int, m_trunc: int, S, params: ModelParams,
               side: str = "wired", condition: bool = True) -> PhiReport:
    """Conditional boundary connection sum on the truncated strip.

    For each strip edge leaving S, sums the probability that the inside
    endpoint connects within S to the strict minus rows, conditioned on the
    shielded set {x: x not joined to the plus side by a raw open path}
    being exactly S. S must contain the strict minus rows and avoid the
    plus side. condition=False drops the conditioning (the literal and the
    unconditional readings differ; the conditional one is primary).
    """
    graph = _strip_graph(n, m_trunc)
    if graph.n_edges > SWEEP_CAP:
        raise TooLargeError(
            "conditional sums sweep every configuration; needs <= %d edges"
            % SWEEP_CAP)
    dom = _strip_domain(graph, n, side)
    minus_all, plus_all = _strip_sides(graph, n)
    s_ids = frozenset(graph.vid(v) for v in S)
    minus_rows = frozenset(
        v for v in range(graph.n_vertices)
        if graph.coords[v][1] in (0, n) and graph.coords[v][0] <= -1)
    if not minus_rows <= s_ids:
        raise ValidationError("S must contain the strict minus rows")
    if s_ids & plus_all:
        raise ValidationError(
            "S touches the plus side, so the conditioning event is empty")
    w = exact.config_weights(dom, params)
    adj = graph.adj
    delta = edge_boundary(graph, s_ids)
    shielded_target = frozenset(range(graph.n_vertices)) - s_ids
    num = [0.0] * len(delta)
    denom = 0.0
    for mask in range(1 << graph.n_edges):
        if condition:
            exposed = _open_reach(adj, mask, plus_all)
            if exposed != shielded_target:
                continue
        wm = float(w[mask])
        denom += wm
        reach = _open_reach(adj, mask, minus_rows, allowed=s_ids)
        for i, (x, _) in enumerate(delta):
            if x in reach:
                num[i] += wm
    if denom <= 0.0:
        raise ValidationError("conditioning event has probability zero")
    breakdown = tuple(((graph.coords[x], graph.coords[y]), num[i] / denom)
                      for i, (x, y) in enumerate(delta))
    value = math.fsum(term for _, term in breakdown)
    return PhiReport(S=tuple(sorted(graph.coords[v] for v in s_ids)),
                     value=value, breakdown=breakdown)


# ---------------------------------------------------------------------------
# crossings


@dataclass(frozen=True)
class CrossingSpec:
    """Top-to-bottom crossing of the box [-m, m] x [0, C*m] inside a
    height-n strip truncation."""

    m: int
    n: int
    C: float
    bc: BoundarySpec

    def height(self) -> int:
        h = self.C * self.m
        hi = int(round(h))
        if abs(h - hi) > 1e-9:
            raise ValidationError("C*m must be an integer height")
        if not 1 <= hi <= self.n:
            raise ValidationError("box height must lie in [1, n]")
        if self.m < 1:
            raise ValidationError("box half-width must be >= 1")
        return hi


def _box_crossing_event(graph: Graph, m: int, h: int,
                        whole_graph: bool) -> EventSpec:
    bottom = [v for v in range(graph.n_vertices)
              if graph.coords[v][1] == 0 and abs(graph.coords[v][0]) <= m]
    top = [v for v in range(graph.n_vertices)
           if graph.coords[v][1] == h and abs(graph.coords[v][0]) <= m]
    if whole_graph:
        return EventSpec.set_connection([graph.coords[v] for v in bottom],
                                        [graph.coords[v] for v in top])
    box = frozenset(v for v in range(graph.n_vertices)
                    if abs(graph.coords[v][0]) <= m
                    and 0 <= graph.coords[v][1] <= h)
    in_box = [(eid, u, v) for eid, (u, v) in enumerate(graph.edges)
              if u in box and v in box]
    bot_f, top_f = frozenset(bottom), frozenset(top)

    def crossed(mask: int, edges=tuple(in_box)) -> bool:
        parent = {}

        def find(a):
            root = a
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(a, a) != a:
                parent[a], a = root, parent[a]
            return root

        for eid, u, v in edges:
            if (mask >> eid) & 1:
                parent[find(u)] = find(v)
        roots = {find(v) for v in bot_f}
        return any(find(v) in roots for v in top_f)

    return EventSpec.from_predicate(crossed, increasing=True,
                                    name="box_crossing")


def crossing_prob(spec: CrossingSpec, params: ModelParams,
                  mode: str = "exact", seed: int = 0,
                  budget: int = 20000,
                  m_trunc: Optional[int] = None) -> Union[float, Estimate]:
    """Probability that the bottom of the box meets its top through open
    edges staying inside the box, in the truncated strip with the given
    boundary condition."""
    h = spec.height()
    mt = spec.m if m_trunc is None else m_trunc
    if mt < spec.m:
        raise ValidationError("truncation narrower than the box")
    graph = _strip_graph(spec.n, mt)
    dom = Domain(graph, spec.bc)
    whole = (mt == spec.m and h == spec.n and spec.bc.kind == "free")
    event = _box_crossing_event(graph, spec.m, h, whole)
    if mode == "exact":
        return exact.event_prob(dom, params, event)
    if mode == "mc":
        return sampler.estimate_event(dom, params, event, seed=seed,
                                      budget=budget)
    raise ValidationError("mode must be exact or mc")


def rect_crossing_prob(n: int, params: ModelParams, mode: str = "exact",
                       seed: int = 0, budget: int = 20000,
                       method: str = "cluster") -> Union[float, Estimate]:
    """Left-to-right crossing of the (n+1) x n vertex rectangle under free
    boundary conditions; the self-dual shape for critical-point scans."""
    if n < 1:
        raise ValidationError("rectangle size must be >= 1")
    graph = build_rect(0, n, 0, n - 1)
    dom = Domain(graph, BoundarySpec.free())
    left = [(0, y) for y in range(n)]
    right = [(n, y) for y in range(n)]
    event = EventSpec.set_connection(left, right)
    if mode == "exact":
        return exact.event_prob(dom, params, event)
    if mode == "mc":
        return sampler.estimate_event(dom, params, event, seed=seed,
                                      budget=budget, method=method)
    raise ValidationError("mode must be exact or mc")


def crossing_duality_gap(n: int, params: ModelParams) -> float:
    """|P(no primal crossing) - P(dual blocking crossing)| on the free
    (n+1) x n rectangle, the dual evaluated at the dual parameter under the
    dual boundary condition.

    The blocking event runs through bounded dual faces only: a face enters
    through an open dual edge crossing a bottom border edge, moves through
    open interior dual edges, and leaves through one crossing a top border
    edge. The single outer dual vertex is excluded so side crossings do not
    short-circuit the block.
    """
    if n < 2:
        raise ValidationError("duality gap needs n >= 2 for bounded faces")
    graph = build_rect(0, n, 0, n - 1)
    dom = Domain(graph, BoundarySpec.free())
    left = [(0, y) for y in range(n)]
    right = [(n, y) for y in range(n)]
    p_cross = exact.event_prob(dom, params,
                               EventSpec.set_connection(left, right))

    dg = dual_graph(dom)
    dgr = dg.graph
    outer = set(dgr.boundary)

    def cell_of(eid: int) -> int:
        r1, r2 = dgr.edges[eid]
        if (r1 in outer) == (r2 in outer):
            raise ConstructionBugError("border edge without outer side")
        return r2 if r1 in outer else r1

    top = [(graph.edge_id((x, n - 1), (x + 1, n - 1)), cell_of(
        graph.edge_id((x, n - 1), (x + 1, n - 1)))) for x in range(n)]
    bottom = [(graph.edge_id((x, 0), (x + 1, 0)), cell_of(
        graph.edge_id((x, 0), (x + 1, 0)))) for x in range(n)]
    interior = [(eid, u, v) for eid, (u, v) in enumerate(dgr.edges)
                if u not in outer and v not in outer]
    top_node, bot_node = -1, -2

    def blocked(mask: int) -> bool:
        parent = {}

        def find(a):
            root = a
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(a, a) != a:
                parent[a], a = root, parent[a]
            return root

        for eid, cell in top:
            if (mask >> eid) & 1:
                parent[find(top_node)] = find(cell)
        for eid, cell in bottom:
            if (mask >> eid) & 1:
                parent[find(bot_node)] = find(cell)
        for eid, u, v in interior:
            if (mask >> eid) & 1:
                parent[find(u)] = find(v)
        return find(top_node) == find(bot_node)

    dual_params = params.with_p(dual_parameter(params.p, params.q))
    p_block = exact.event_prob(
        dg.domain, dual_params,
        EventSpec.from_predicate(blocked, increasing=True,
                                 name="dual_blocking"))
    return abs((1.0 - p_cross) - p_block)


# ---------------------------------------------------------------------------
# dual interface in the strip


@dataclass(frozen=True)
class LeftmostDualPath:
    """Dual interface from the gap below (0,0) to the gap above (0,n),
    listed as the unit cells [x, x+1] x [y, y+1] its dual vertices sit in."""

    cells: tuple

    @property
    def centers(self) -> tuple:
        return tuple((x + 0.5, y + 0.5) for x, y in self.cells)

    @property
    def corners(self) -> frozenset:
        out = set()
        for x, y in self.cells:
            out |= {(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)}
        return frozenset(out)


_LEFT_TURN = {(0, 1): (-1, 0), (-1, 0): (0, -1),
              (0, -1): (1, 0), (1, 0): (0, 1)}
_RIGHT_TURN = {v: k for k, v in _LEFT_TURN.items()}


def _crossed_edge(cell, d):
    """Primal edge crossed when stepping from cell in direction d."""
    x, y = cell
    if d == (0, 1):
        return ((x, y + 1), (x + 1, y + 1))
    if d == (0, -1):
        return ((x, y), (x + 1, y))
    if d == (1, 0):
        return ((x + 1, y), (x + 1, y + 1))
    return ((x, y), (x, y + 1))


def leftmost_dual_path(n: int, m_trunc: int,
                       config: int) -> Optional[LeftmostDualPath]:
    """Extract the dual interface for a packed strip configuration.

    The walk enters the cell left of (0,0) through the primal edge
    ((-1,0),(0,0)), moves between cells whose shared primal edge is closed,
    and exits above the cell left of (0,n) through ((-1,n),(0,n)). Both
    gate edges must be closed. Search order at each cell: straight on, then
    the left turn, then the right turn, backtracking last, so ties deviate
    leftward and the all-closed configuration yields the straight column of
    cells hugging x = 0 on its left. Returns None when no interface exists,
    exactly the configurations whose minus side meets the plus side.
    """
    graph = _strip_graph(n, m_trunc)

    def closed(a, b) -> bool:
        return not (config >> graph.edge_id(a, b)) & 1

    if not closed((-1, 0), (0, 0)):
        return None
    start, goal = (-1, 0), (-1, n - 1)

    def done(cell) -> bool:
        return cell == goal and closed((-1, n), (0, n))

    def moves(cell, heading):
        for d in (heading, _LEFT_TURN[heading], _RIGHT_TURN[heading]):
            nx, ny = cell[0] + d[0], cell[1] + d[1]
            if -m_trunc <= nx < m_trunc and 0 <= ny < n:
                if closed(*_crossed_edge(cell, d)):
                    yield (nx, ny), d
        back = (-heading[0], -heading[1])
        bx, by = cell[0] + back[0], cell[1] + back[1]
        if -m_trunc <= bx < m_trunc and 0 <= by < n:
            if closed(*_crossed_edge(cell, back)):
                yield (bx, by), back

    if done(start):
        return LeftmostDualPath(cells=(start,))
    visited = {start}
    stack = [(start, (0, 1), moves(start, (0, 1)))]
    while stack:
        cell, heading, it = stack[-1]
        advanced = False
        for nxt, d in it:
            if nxt in visited:
                continue
            visited.add(nxt)
            if done(nxt):
                return LeftmostDualPath(
                    cells=tuple(c for c, _, _ in stack) + (nxt,))
            stack.append((nxt, d, moves(nxt, d)))
            advanced = True
            break
        if not advanced:
            stack.pop()
    return None


@dataclass(frozen=True)
class StripCrossing:
    """Probabilities of the minus-plus crossing and of its complement, the
    dual interface event."""

    a_n: Union[float, Estimate]
    a_star: Union[float, Estimate]


def strip_dual_crossing(n: int, m_trunc: int, params: ModelParams,
                        mode: str = "exact", seed: int = 0,
                        budget: int = 20000,
                        side: str = "wired") -> StripCrossing:
    """Probability that the strict minus side of the truncated strip meets
    the plus side through raw open paths, and of the complementary dual
    interface event."""
    graph = _strip_graph(n, m_trunc)
    dom = _strip_domain(graph, n, side)
    minus_all, plus_all = _strip_sides(graph, n)
    if mode == "exact":
        free_twin = Domain(graph, BoundarySpec.free())
        ind = exact.event_indicator(
            free_twin, EventSpec.set_connection(sorted(minus_all),
                                                sorted(plus_all)))
        w = exact.config_weights(dom, params)
        a_n = float((w * ind).sum() / w.sum())
        return StripCrossing(a_n=a_n, a_star=1.0 - a_n)
    if mode == "mc":
        adj = graph.adj

        def crossed(mask: int) -> bool:
            return bool(_open_reach(adj, mask, minus_all) & plus_all)

        est = sampler.estimate_event(
            dom, params,
            EventSpec.from_predicate(crossed, increasing=True,
                                     name="strip_crossing"),
            seed=seed, budget=budget)
        star = Estimate(mean=1.0 - est.mean, stderr=est.stderr,
                        n_samples=est.n_samples, n_batches=est.n_batches)
        return StripCrossing(a_n=est, a_star=star)
    raise ValidationError("mode must be exact or mc")


def q4_boundary_sum(n: int, m_trunc: int, params: ModelParams,
                    side: str = "wired") -> float:
    """Average over configurations of the number of strict bottom-minus
    vertices joined by open paths to a corner of the dual interface; zero
    on configurations without an interface."""
    graph = _strip_graph(n, m_trunc)
    if graph.n_edges > SWEEP_CAP:
        raise TooLargeError(
            "interface sums sweep every configuration; needs <= %d edges"
            % SWEEP_CAP)
    dom = _strip_domain(graph, n, side)
    w = exact.config_weights(dom, params)
    adj = graph.adj
    bottom = [v for v in range(graph.n_vertices)
              if graph.coords[v][1] == 0 and graph.coords[v][0] < 0]
    total = 0.0
    acc = 0.0
    for mask in range(1 << graph.n_edges):
        wm = float(w[mask])
        total += wm
        path = leftmost_dual_path(n, m_trunc, mask)
        if path is None:
            continue
        corner_ids = [graph.vid(c) for c in path.corners]
        reach = _open_reach(adj, mask, corner_ids)
        hits = sum(1 for v in bottom if v in reach)
        if hits:
            acc += wm * hits
    return acc / total


# ---------------------------------------------------------------------------
# cover index selection and decay


def select_k(q: float) -> int:
    """Winding-sector count for the branched cover argument: the unique
    integer k with (2/sigma - 3)/2 <= k <= (2/sigma - 1)/2, the smaller one
    if both endpoints are integers.

    The interval pins down the two cosine sign conditions
    cos((2k+1) pi sigma / 4) >= 0 and cos((2k+3) pi sigma / 4) <= 0, which
    are re-checked directly, together with the derived requirements that
    cos((4k+3) pi sigma / 2) >= 0 and that the closed-form cosine sum
    sin((4k+3/2) theta) / sin(theta/2), theta = pi sigma / 2, is <= -1.
    """
    if q == 4:
        raise UnsupportedDomainError(
            "q = 4 gives sigma = 0; no finite sector count exists")
    if not 3 < q < 4:
        raise ValidationError("sector selection needs q in (3, 4)")
    s = sigma_hat(q)
    lo = (2.0 / s - 3.0) / 2.0
    hi = (2.0 / s - 1.0) / 2.0
    k = math.ceil(lo - 1e-12)
    if not lo - 1e-12 <= k <= hi + 1e-12:
        raise ConstructionBugError(
            "no integer in [%r, %r] despite unit length" % (lo, hi))
    theta = math.pi * s / 2.0
    checks = (
        math.cos((2 * k + 1) * math.pi * s / 4.0) >= -1e-9,
        math.cos((2 * k + 3) * math.pi * s / 4.0) <= 1e-9,
        math.cos((4 * k + 3) * theta) >= -1e-9,
        math.sin((4 * k + 1.5) * theta) / math.sin(theta / 2.0) <= -1 + 1e-9,
    )
    if not all(checks):
        raise ConstructionBugError(
            "cosine sign conditions failed for k=%d at q=%r" % (k, q))
    return k


@dataclass(frozen=True)
class DecayPoint:
    n: int
    estimate: Estimate


def _fan_out(work, jobs: int) -> list:
    """Run the argument-free callables, in order, possibly on a thread
    pool; results come back in submission order either way, so job count
    never changes the output."""
    if jobs <= 1 or len(work) <= 1:
        return [fn() for fn in work]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return [f.result() for f in [pool.submit(fn) for fn in work]]


def uk_decay(q: float, k: int, R: int, n_list: Sequence[int], budget: int,
             seed: int, p: Optional[float] = None,
             jobs: int = 1) -> Tuple[DecayPoint, ...]:
    """Estimates, one per box size n, of the probability that the origin
    reaches the radius-R box border inside the free-boundary (2k+1)-sheet
    cover box of size n, at the self-dual point unless p is given."""
    n_list = sorted(set(int(n) for n in n_list))
    if not n_list:
        raise ValidationError("need at least one box size")
    if R < 1 or R >= n_list[0]:
        raise ValidationError("need 1 <= R < every box size")
    if k < 0:
        raise ValidationError("sheet index must be >= 0")
    params = ModelParams(p=self_dual_point(q) if p is None else p, q=q)
    inner = build_universal_cover_box(R, k)
    targets = sorted(inner.coords[v] for v in inner.labels["box_boundary"])
    origin = (0, 0, 0)
    seeds = np.random.SeedSequence(seed).spawn(len(n_list))

    def job(child, n):
        graph = build_universal_cover_box(n, k)
        dom = Domain(graph, BoundarySpec.free())
        event = EventSpec.connection_to_set(origin, targets)
        return sampler.estimate_event(dom, params, event, seed=child,
                                      budget=budget, method="cluster")

    work = [lambda c=c, n=n: job(c, n) for c, n in zip(seeds, n_list)]
    ests = _fan_out(work, jobs)
    return tuple(DecayPoint(n=n, estimate=est)
                 for n, est in zip(n_list, ests))


# ---------------------------------------------------------------------------
# finite-size critical point


@dataclass(frozen=True)
class PcScan:
    """Crossing curves over a parameter grid and their pairwise
    intersection abscissas."""

    q: float
    sizes: tuple
    p_grid: tuple
    curves: dict
    intersections: dict
    spread: Optional[float]

    @property
    def abscissas(self) -> tuple:
        return tuple(v for v in self.intersections.values()
                     if v is not None)


def _curve_intersection(p_grid, small, big) -> Optional[float]:
    """Abscissa where the larger-size curve overtakes the smaller one:
    linear interpolation at sign changes of the difference, the median
    abscissa if noise gives several."""
    diff = [b - s for s, b in zip(small, big)]
    hits = []
    for i in range(len(diff) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0.0:
            hits.append(p_grid[i])
        elif (d0 < 0.0) != (d1 < 0.0):
            t = d0 / (d0 - d1)
            hits.append(p_grid[i] + t * (p_grid[i + 1] - p_grid[i]))
    if diff and diff[-1] == 0.0:
        hits.append(p_grid[-1])
    if not hits:
        return None
    return float(np.median(hits))


def pc_estimate(q: float, sizes: Sequence[int], p_grid: Sequence[float],
                budget: int, seed: int, method: str = "cluster",
                jobs: int = 1) -> PcScan:
    """Monte Carlo crossing curves for (n+1) x n free rectangles over a
    parameter grid, with pairwise curve intersections bracketing the
    critical point."""
    sizes = tuple(sorted(set(int(n) for n in sizes)))
    if len(sizes) < 3:
        raise ValidationError("need at least three sizes")
    p_grid = tuple(float(p) for p in p_grid)
    if len(p_grid) < 2 or any(not 0 < p < 1 for p in p_grid):
        raise ValidationError("grid must hold >= 2 parameters in (0, 1)")
    if sorted(p_grid) != list(p_grid):
        raise ValidationError("grid must be ascending")
    seeds = np.random.SeedSequence(seed).spawn(len(sizes) * len(p_grid))
    cells = [(i, j) for i in range(len(sizes)) for j in range(len(p_grid))]
    work = [lambda i=i, j=j: rect_crossing_prob(
        sizes[i], ModelParams(p=p_grid[j], q=q), mode="mc",
        seed=seeds[i * len(p_grid) + j], budget=budget, method=method)
        for i, j in cells]
    ests = _fan_out(work, jobs)
    curves = {}
    for (i, j), est in zip(cells, ests):
        curves.setdefault(sizes[i], []).append((p_grid[j], est))
    curves = {nsz: tuple(pts) for nsz, pts in curves.items()}
    intersections = {}
    for a in range(len(sizes)):
        for b in range(a + 1, len(sizes)):
            small = [est.mean for _, est in curves[sizes[a]]]
            big = [est.mean for _, est in curves[sizes[b]]]
            intersections[(sizes[a], sizes[b])] = _curve_intersection(
                p_grid, small, big)
    found = [v for v in intersections.values() if v is not None]
    spread = (max(found) - min(found)) if found else None
    return PcScan(q=q, sizes=sizes, p_grid=p_grid, curves=curves,
                  intersections=intersections, spread=spread)
