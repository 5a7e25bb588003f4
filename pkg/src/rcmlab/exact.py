"""Exhaustive-enumeration engine for random-cluster measures on small graphs.

A configuration is an integer bitmask over edge ids (bit e = state of edge
e). Everything here is exact up to floating point: probabilities, partition
functions, numerical derivatives, pivotality, Hamming distances, and the
standard inequality checks (FKG, boundary-condition domination, finite
energy).

Enumeration is capped at 26 edges. Up to 22 edges the per-configuration
cluster counts are materialized as numpy arrays (at most 4M entries) and all
queries are vectorized; between 23 and 26 edges only streaming accumulation
is available, which supports partition functions and connection-type events
but not arbitrary predicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import TooLargeError, ValidationError
from .lattice import BoundarySpec, Domain, Graph

ENUM_CAP = 26
DENSE_CAP = 22

__all__ = [
    "ENUM_CAP",
    "DENSE_CAP",
    "ModelParams",
    "EventSpec",
    "FiniteEnergyReport",
    "cluster_count",
    "config_weights",
    "weight",
    "partition_function",
    "prob",
    "event_prob",
    "event_indicator",
    "connection_prob",
    "dualize_config",
    "dual_parameter",
    "self_dual_point",
    "event_prob_derivative",
    "pivotal_prob",
    "pivotal_and_fail_prob",
    "expected_hamming",
    "check_fkg",
    "check_domination",
    "check_finite_energy",
    "audit_increasing",
]


@dataclass(frozen=True)
class ModelParams:
    """Edge weight p in (0,1) and cluster weight q >= 1."""

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValidationError(f"p must lie in (0,1), got {self.p}")
        if self.q < 1.0:
            raise ValidationError(f"q must be >= 1, got {self.q}")

    @classmethod
    def self_dual(cls, q: float) -> "ModelParams":
        return cls(p=self_dual_point(q), q=q)

    def with_p(self, p: float) -> "ModelParams":
        return replace(self, p=p)


def dual_parameter(p: float, q: float) -> float:
    """Solve p p* / ((1-p)(1-p*)) = q for p*."""
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie in (0,1), got {p}")
    if q < 1.0:
        raise ValidationError(f"q must be >= 1, got {q}")
    return q * (1.0 - p) / (q * (1.0 - p) + p)


def self_dual_point(q: float) -> float:
    """Fixed point of the duality map: sqrt(q)/(1+sqrt(q))."""
    if q < 1.0:
        raise ValidationError(f"q must be >= 1, got {q}")
    r = math.sqrt(q)
    return r / (1.0 + r)


@dataclass(frozen=True)
class EventSpec:
    """An event over configurations, either structured or a raw predicate.

    Structured kinds ("always", "connect") evaluate vectorized through the
    union-find kernels and honour boundary-condition contractions; kind
    "predicate" calls a pure function mask -> bool. The increasing flag is
    trusted by the inequality checks (audit_increasing spot-checks it).
    """

    kind: str
    increasing: Optional[bool] = None
    name: str = ""
    predicate: Optional[Callable[[int], bool]] = None
    sources: tuple = ()
    targets: tuple = ()

    @classmethod
    def always(cls) -> "EventSpec":
        return cls(kind="always", increasing=True, name="always")

    @classmethod
    def connection(cls, x, y) -> "EventSpec":
        return cls(kind="connect", increasing=True, name=f"{x}<->{y}",
                   sources=(x,), targets=(y,))

    @classmethod
    def connection_to_set(cls, x, targets: Sequence) -> "EventSpec":
        return cls(kind="connect", increasing=True,
                   name=f"{x}<->set({len(tuple(targets))})",
                   sources=(x,), targets=tuple(targets))

    @classmethod
    def set_connection(cls, sources: Sequence, targets: Sequence) -> "EventSpec":
        return cls(kind="connect", increasing=True, name="set<->set",
                   sources=tuple(sources), targets=tuple(targets))

    @classmethod
    def edge_open(cls, e: int) -> "EventSpec":
        return cls(kind="predicate", increasing=True, name=f"edge{e}_open",
                   predicate=lambda m, _e=e: bool((m >> _e) & 1))

    @classmethod
    def from_predicate(cls, fn: Callable[[int], bool],
                       increasing: Optional[bool] = None,
                       name: str = "predicate") -> "EventSpec":
        return cls(kind="predicate", increasing=increasing, name=name,
                   predicate=fn)


class _Table:
    """Per-domain enumeration state: rep-space edge list and lazy arrays."""

    def __init__(self, domain: Domain):
        g = domain.graph
        reps, n_reps = domain.vertex_reps()
        self.domain = domain
        self.ne = len(g.edges)
        self.n_reps = n_reps
        self.reps = reps
        self.eu = np.array([reps[u] for u, v in g.edges], dtype=np.int32)
        self.ev = np.array([reps[v] for u, v in g.edges], dtype=np.int32)
        self._k = None
        self._o = None
        self._hist = None
        self._ind_cache: dict = {}

    @property
    def k(self) -> np.ndarray:
        if self._k is None:
            if self.ne > DENSE_CAP:
                raise TooLargeError(
                    f"{self.ne} edges exceeds the dense cap of {DENSE_CAP}")
            self._k = _kernels.k_per_mask(self.ne, self.n_reps,
                                          self.eu, self.ev)
        return self._k

    @property
    def o(self) -> np.ndarray:
        if self._o is None:
            idx = np.arange(1 << self.ne, dtype=np.uint32)
            if hasattr(np, "bitwise_count"):
                self._o = np.bitwise_count(idx).astype(np.int64)
            else:  # pragma: no cover
                acc = np.zeros(idx.shape, dtype=np.int64)
                while idx.any():
                    acc += idx & 1
                    idx >>= 1
                self._o = acc
        return self._o

    @property
    def hist(self) -> np.ndarray:
        if self._hist is None:
            self._hist = _kernels.ko_histogram(self.ne, self.n_reps,
                                               self.eu, self.ev)
        return self._hist


_tables: dict = {}


def _table(domain: Domain) -> _Table:
    if domain.graph.n_edges > ENUM_CAP:
        raise TooLargeError(
            f"{domain.graph.n_edges} edges exceeds the enumeration cap "
            f"of {ENUM_CAP}")
    key = domain.key()
    tab = _tables.get(key)
    if tab is None:
        # bulk scans build thousands of throwaway domains; rebuilding a
        # table is cheap, so just drop the cache when it gets silly
        if len(_tables) > 512:
            _tables.clear()
        tab = _Table(domain)
        _tables[key] = tab
    return tab


def _log_terms(params: ModelParams):
    return math.log(params.q), math.log(params.p), math.log1p(-params.p)


def config_weights(domain: Domain, params: ModelParams) -> np.ndarray:
    """Unnormalized weights q^k p^o (1-p)^c for every mask (dense path).

    Scaled by a common factor exp(-max log-weight) to dodge under/overflow;
    all consumers use ratios, so the scale cancels.
    """
    tab = _table(domain)
    lq, lp, lc = _log_terms(params)
    logw = tab.k * lq + tab.o * lp + (tab.ne - tab.o) * lc
    return np.exp(logw - logw.max())


def cluster_count(domain: Domain, config: int) -> int:
    """Components of the open subgraph after contracting each bc block."""
    tab = _table(domain)
    parent = list(range(tab.n_reps))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    k = tab.n_reps
    for e in range(tab.ne):
        if (config >> e) & 1:
            ru, rv = find(int(tab.eu[e])), find(int(tab.ev[e]))
            if ru != rv:
                parent[ru] = rv
                k -= 1
    return k


def weight(domain: Domain, params: ModelParams, config: int) -> float:
    """q^{k(config)} p^{o(config)} (1-p)^{c(config)}, unnormalized."""
    tab = _table(domain)
    if not (0 <= config < (1 << tab.ne)):
        raise ValidationError(f"config {config} out of range for "
                              f"{tab.ne} edges")
    k = cluster_count(domain, config)
    o = bin(config).count("1")
    lq, lp, lc = _log_terms(params)
    return math.exp(k * lq + o * lp + (tab.ne - o) * lc)


def partition_function(domain: Domain, params: ModelParams) -> float:
    """Z = sum of weights, accumulated from the joint (k, o) tally."""
    tab = _table(domain)
    hist = tab.hist
    lq, lp, lc = _log_terms(params)
    ks = np.arange(hist.shape[0])[:, None]
    os_ = np.arange(hist.shape[1])[None, :]
    logw = ks * lq + os_ * lp + (tab.ne - os_) * lc
    nz = hist > 0
    m = logw[nz].max()
    return float(math.exp(m) * math.fsum(hist[nz] * np.exp(logw[nz] - m)))


def prob(domain: Domain, params: ModelParams, config: int) -> float:
    return weight(domain, params, config) / partition_function(domain, params)


def _resolve_reps(domain: Domain, vertices, tab: _Table) -> frozenset:
    g = domain.graph
    return frozenset(int(tab.reps[g.vid(v)]) for v in vertices)


def event_indicator(domain: Domain, event: EventSpec) -> np.ndarray:
    """uint8 indicator of the event over all masks (dense path only)."""
    tab = _table(domain)
    if tab.ne > DENSE_CAP:
        raise TooLargeError(
            f"indicator arrays need <= {DENSE_CAP} edges, got {tab.ne}")
    n_masks = 1 << tab.ne
    if event.kind == "always":
        return np.ones(n_masks, dtype=np.uint8)
    if event.kind == "connect":
        src = _resolve_reps(domain, event.sources, tab)
        dst = _resolve_reps(domain, event.targets, tab)
        ckey = (src, dst)
        cached = tab._ind_cache.get(ckey)
        if cached is not None:
            return cached
        src_flags = np.zeros(tab.n_reps, dtype=np.uint8)
        dst_flags = np.zeros(tab.n_reps, dtype=np.uint8)
        src_flags[list(src)] = 1
        dst_flags[list(dst)] = 1
        ind = _kernels.setconnect_per_mask(tab.ne, tab.n_reps, tab.eu,
                                           tab.ev, src_flags, dst_flags)
        tab._ind_cache[ckey] = ind
        return ind
    if event.kind == "predicate":
        fn = event.predicate
        return np.fromiter((1 if fn(m) else 0 for m in range(n_masks)),
                           dtype=np.uint8, count=n_masks)
    raise ValidationError(f"unknown event kind {event.kind!r}")


def event_prob(domain: Domain, params: ModelParams, event: EventSpec) -> float:
    tab = _table(domain)
    if tab.ne > DENSE_CAP:
        if event.kind == "always":
            return 1.0
        if event.kind != "connect":
            raise TooLargeError(
                f"arbitrary predicates need <= {DENSE_CAP} edges, got "
                f"{tab.ne}; connection events stream up to {ENUM_CAP}")
        src = _resolve_reps(domain, event.sources, tab)
        dst = _resolve_reps(domain, event.targets, tab)
        src_flags = np.zeros(tab.n_reps, dtype=np.uint8)
        dst_flags = np.zeros(tab.n_reps, dtype=np.uint8)
        src_flags[list(src)] = 1
        dst_flags[list(dst)] = 1
        lq, lp, lc = _log_terms(params)
        num, den = _kernels.setconnect_weighted_stream(
            tab.ne, tab.n_reps, tab.eu, tab.ev, src_flags, dst_flags,
            lq, lp, lc)
        return num / den
    w = config_weights(domain, params)
    ind = event_indicator(domain, event)
    return float(w[ind.astype(bool)].sum() / w.sum())


def connection_prob(domain: Domain, params: ModelParams, x, y) -> float:
    return event_prob(domain, params, EventSpec.connection(x, y))


def dualize_config(dg, config: int) -> int:
    """ω*(e*) = 1 - ω(e) routed through the primal->dual edge bijection."""
    out = 0
    for e_primal, e_dual in dg.edge_bijection.items():
        if not (config >> e_primal) & 1:
            out |= 1 << e_dual
    return out


def event_prob_derivative(domain: Domain, params: ModelParams,
                          event: EventSpec, h: float = 1e-4):
    """d/dp of the event probability: central difference + one Richardson
    refinement. Returns (derivative, truncation-error estimate)."""
    p = params.p
    if not (0.0 < p - h and p + h < 1.0):
        raise ValidationError(f"step {h} leaves (0,1) around p={p}")

    def at(pp):
        return event_prob(domain, params.with_p(pp), event)

    d_h = (at(p + h) - at(p - h)) / (2.0 * h)
    d_h2 = (at(p + h / 2) - at(p - h / 2)) / h
    rich = (4.0 * d_h2 - d_h) / 3.0
    return rich, abs(rich - d_h2)


def _edge_bit(domain: Domain, e) -> int:
    if isinstance(e, int):
        if not (0 <= e < domain.graph.n_edges):
            raise ValidationError(f"edge id {e} out of range")
        return e
    u, v = e
    return domain.graph.edge_id(u, v)


def _require_increasing(event: EventSpec):
    if event.increasing is not True:
        raise ValidationError(
            f"event {event.name!r} is not flagged increasing")


def pivotal_prob(domain: Domain, params: ModelParams, e, event: EventSpec
                 ) -> float:
    """P(event holds with e forced open and fails with e forced closed)."""
    _require_increasing(event)
    tab = _table(domain)
    bit = 1 << _edge_bit(domain, e)
    ind = event_indicator(domain, event)
    idx = np.arange(1 << tab.ne, dtype=np.int64)
    piv = (ind[idx | bit] == 1) & (ind[idx & ~bit] == 0)
    w = config_weights(domain, params)
    return float(w[piv].sum() / w.sum())


def pivotal_and_fail_prob(domain: Domain, params: ModelParams, e,
                          event: EventSpec) -> float:
    """Pivotality joined with the event itself failing (e must be closed)."""
    _require_increasing(event)
    tab = _table(domain)
    bit = 1 << _edge_bit(domain, e)
    ind = event_indicator(domain, event)
    idx = np.arange(1 << tab.ne, dtype=np.int64)
    piv = (ind[idx | bit] == 1) & (ind[idx & ~bit] == 0) & (ind == 0)
    w = config_weights(domain, params)
    return float(w[piv].sum() / w.sum())


def expected_hamming(domain: Domain, params: ModelParams, event: EventSpec
                     ) -> float:
    """Mean over ω of the minimum Hamming distance from ω into the event.

    Multi-source BFS over the hypercube, layered and vectorized.
    """
    tab = _table(domain)
    ind = event_indicator(domain, event)
    if not ind.any():
        raise ValidationError("event is empty: Hamming distance is infinite")
    n_masks = 1 << tab.ne
    dist = np.full(n_masks, -1, dtype=np.int16)
    frontier = np.flatnonzero(ind).astype(np.int64)
    dist[frontier] = 0
    d = 0
    while frontier.size:
        d += 1
        nxt = []
        for b in range(tab.ne):
            nb = frontier ^ (1 << b)
            fresh = nb[dist[nb] < 0]
            dist[fresh] = d
            nxt.append(fresh)
        frontier = np.unique(np.concatenate(nxt)) if nxt else frontier[:0]
        frontier = frontier[dist[frontier] == d]
    w = config_weights(domain, params)
    return float((w * dist).sum() / w.sum())


def check_fkg(domain: Domain, params: ModelParams, a: EventSpec,
              b: EventSpec, tol: float = 1e-12):
    """Positive association of increasing events: returns (lhs, rhs, holds)
    with lhs = P(A and B) and rhs = P(A) P(B)."""
    _require_increasing(a)
    _require_increasing(b)
    w = config_weights(domain, params)
    ia = event_indicator(domain, a).astype(bool)
    ib = event_indicator(domain, b).astype(bool)
    z = w.sum()
    lhs = float(w[ia & ib].sum() / z)
    rhs = float(w[ia].sum() / z) * float(w[ib].sum() / z)
    return lhs, rhs, lhs >= rhs - tol


def _partition_ids(graph: Graph, bc: BoundarySpec) -> dict:
    ids = {}
    for i, block in enumerate(bc.blocks(graph)):
        for v in block:
            ids[v] = i
    nxt = len(ids)
    for v in graph.boundary:
        if v not in ids:
            ids[v] = nxt
            nxt += 1
    return ids


def check_domination(graph: Graph, xi: BoundarySpec, chi: BoundarySpec,
                     params: ModelParams, event: EventSpec,
                     tol: float = 1e-12) -> bool:
    """Check P^xi(A) >= P^chi(A) where xi coarsens chi as partitions."""
    _require_increasing(event)
    xi_ids = _partition_ids(graph, xi)
    chi_ids = _partition_ids(graph, chi)
    by_chi: dict = {}
    for v, cid in chi_ids.items():
        by_chi.setdefault(cid, set()).add(xi_ids[v])
    if any(len(s) > 1 for s in by_chi.values()):
        raise ValidationError("partition mismatch: xi does not coarsen chi")
    p_xi = event_prob(Domain(graph, xi), params, event)
    p_chi = event_prob(Domain(graph, chi), params, event)
    return p_xi >= p_chi - tol


@dataclass(frozen=True)
class FiniteEnergyReport:
    lower: float
    upper: float
    min_ratio: float
    max_ratio: float
    holds: bool


def check_finite_energy(domain: Domain, params: ModelParams, e,
                        tol: float = 1e-12) -> FiniteEnergyReport:
    """Bound the single-edge conditional odds uniformly over configurations.

    For every ω the ratio w(ω with e open)/w(ω with e closed) must lie in
    [p/(q(1-p)), p/(1-p)]; this is the finite-energy property that feeds
    the comparison-to-product-measure arguments.
    """
    tab = _table(domain)
    bit = 1 << _edge_bit(domain, e)
    w = config_weights(domain, params)
    idx = np.arange(1 << tab.ne, dtype=np.int64)
    closed = idx[(idx & bit) == 0]
    ratios = w[closed | bit] / w[closed]
    p, q = params.p, params.q
    lower = p / (q * (1.0 - p))
    upper = p / (1.0 - p)
    lo, hi = float(ratios.min()), float(ratios.max())
    holds = (lower - tol <= lo) and (hi <= upper + tol)
    return FiniteEnergyReport(lower, upper, lo, hi, holds)


def audit_increasing(domain: Domain, event: EventSpec, cap: int = 12) -> bool:
    """Brute-force monotonicity scan: flipping any edge open never destroys
    the event. Only meant for graphs with at most `cap` edges."""
    tab = _table(domain)
    if tab.ne > cap:
        raise TooLargeError(
            f"monotonicity audit capped at {cap} edges, got {tab.ne}")
    ind = event_indicator(domain, event)
    idx = np.arange(1 << tab.ne, dtype=np.int64)
    for b in range(tab.ne):
        bit = 1 << b
        if np.any(ind[idx | bit] < ind[idx & ~bit]):
            return False
    return True
