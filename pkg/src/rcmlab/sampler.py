"""Markov chain Monte Carlo for random-cluster measures.

Two dynamics: single-edge heat-bath resampling, valid under any boundary
condition, and a cluster-activation move (each cluster declared active
with probability 1/q, active-active edges resampled as Bernoulli(p))
restricted to free and wired boundary conditions. Neither dynamics has an
analytic reference here, so both are validated against exact enumeration
in the test suite, plus exact one-step transition matrices on tiny graphs.

All randomness flows through one numpy Generator per chain; fixed edge
scan order and fixed draw order make trajectories bit-reproducible for a
given (seed, domain, params, schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import TooLargeError, UnsupportedDomainError, ValidationError
from .exact import EventSpec, ModelParams
from .lattice import Domain

__all__ = [
    "ChainState",
    "Estimate",
    "init_chain",
    "heat_bath_step",
    "sweep",
    "run_chain",
    "chayes_machta_step",
    "estimate_event",
    "estimate_events",
    "merge_estimates",
    "exact_sweep_matrix",
    "exact_cluster_matrix",
    "write_samples",
]

# sweeps per kernel call; chunking never changes the uniform stream because
# rng.random((a, ne)) then ((b, ne)) equals one ((a+b, ne)) draw row-major
_CHUNK = 4096

_MATRIX_CAP = 10


@dataclass
class ChainState:
    """Mutable chain state: per-edge open flags plus the generator."""

    edge_states: np.ndarray
    rng: np.random.Generator
    sweeps_done: int = 0

    @property
    def current(self) -> int:
        bits = 0
        for e in np.flatnonzero(self.edge_states):
            bits |= 1 << int(e)
        return bits


@dataclass(frozen=True)
class Estimate:
    """Batch-means estimate of an event probability."""

    mean: float
    stderr: float
    n_samples: int
    n_batches: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValidationError("stderr must be nonnegative")


class _SamplerCtx:
    """Rep-space arrays shared by every chain on one domain.

    Unlike the enumeration tables this has no edge cap; sampling is the
    whole point for graphs too large to enumerate.
    """

    def __init__(self, domain: Domain):
        g = domain.graph
        reps, n_reps = domain.vertex_reps()
        ne = g.n_edges
        self.domain = domain
        self.ne = ne
        self.n_reps = n_reps
        self.reps = reps
        self.eu = np.array([reps[u] for u, v in g.edges], dtype=np.int32)
        self.ev = np.array([reps[v] for u, v in g.edges], dtype=np.int32)
        deg = np.zeros(n_reps, dtype=np.int64)
        for a, b in zip(self.eu, self.ev):
            deg[a] += 1
            deg[b] += 1
        self.indptr = np.zeros(n_reps + 1, dtype=np.int64)
        np.cumsum(deg, out=self.indptr[1:])
        self.nbr = np.empty(2 * ne, dtype=np.int32)
        self.nbr_eid = np.empty(2 * ne, dtype=np.int32)
        cursor = self.indptr[:-1].copy()
        for eid, (a, b) in enumerate(zip(self.eu, self.ev)):
            self.nbr[cursor[a]] = b
            self.nbr_eid[cursor[a]] = eid
            cursor[a] += 1
            self.nbr[cursor[b]] = a
            self.nbr_eid[cursor[b]] = eid
            cursor[b] += 1

    def resolve_flags(self, vertices) -> np.ndarray:
        g = self.domain.graph
        flags = np.zeros(self.n_reps, dtype=np.uint8)
        for v in vertices:
            flags[self.reps[g.vid(v)]] = 1
        return flags


_ctxs: dict = {}


def _ctx(domain: Domain) -> _SamplerCtx:
    key = domain.key()
    ctx = _ctxs.get(key)
    if ctx is None:
        ctx = _SamplerCtx(domain)
        _ctxs[key] = ctx
    return ctx


def _odds(params: ModelParams):
    """(P(open | endpoints joined off e), P(open | not joined))."""
    p, q = params.p, params.q
    return p, p / (p + q * (1.0 - p))


def init_chain(domain: Domain, seed: int,
               start: str = "open") -> ChainState:
    """Fresh chain in the all-open (default) or all-closed state."""
    if start not in ("open", "closed"):
        raise ValidationError(f"unknown start state {start!r}")
    ctx = _ctx(domain)
    fill = 1 if start == "open" else 0
    states = np.full(ctx.ne, fill, dtype=np.uint8)
    return ChainState(edge_states=states, rng=np.random.default_rng(seed))


def heat_bath_step(domain: Domain, params: ModelParams, state: ChainState,
                   e: int) -> ChainState:
    """Resample one edge from its exact conditional law.

    P(open) = p when the endpoints of e are joined in the configuration
    with e removed (boundary contractions included), else p/(p + q(1-p)).
    """
    ctx = _ctx(domain)
    if not (0 <= e < ctx.ne):
        raise ValidationError(f"edge id {e} out of range")
    src, dst = int(ctx.eu[e]), int(ctx.ev[e])
    joined = src == dst
    if not joined:
        seen = {src}
        stack = [src]
        while stack and not joined:
            v = stack.pop()
            for i in range(ctx.indptr[v], ctx.indptr[v + 1]):
                eid = ctx.nbr_eid[i]
                if eid == e or not state.edge_states[eid]:
                    continue
                w = int(ctx.nbr[i])
                if w == dst:
                    joined = True
                    break
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    p_same, p_diff = _odds(params)
    p_open = p_same if joined else p_diff
    state.edge_states[e] = 1 if state.rng.random() < p_open else 0
    return state


def _run_kernel(ctx: _SamplerCtx, params: ModelParams, state: ChainState,
                n_sweeps: int, ev_sources: np.ndarray, ev_targets: np.ndarray,
                want_bits: bool):
    """One kernel call: n_sweeps full sweeps, returning per-sweep outputs."""
    p_same, p_diff = _odds(params)
    uniforms = state.rng.random((n_sweeps, ctx.ne))
    n_events = ev_sources.shape[0]
    out_ind = np.empty((n_sweeps, n_events), dtype=np.uint8)
    out_bits = np.empty(n_sweeps if want_bits else 0, dtype=np.int64)
    _kernels.hb_run(state.edge_states, ctx.eu, ctx.ev, ctx.indptr, ctx.nbr,
                    ctx.nbr_eid, p_same, p_diff, uniforms, ev_sources,
                    ev_targets, out_ind, out_bits)
    state.sweeps_done += n_sweeps
    return out_ind, out_bits


def _no_events(ctx: _SamplerCtx):
    z = np.zeros((0, ctx.n_reps), dtype=np.uint8)
    return z, z


def sweep(domain: Domain, params: ModelParams,
          state: ChainState) -> ChainState:
    """Apply heat_bath_step to every edge in index order."""
    ctx = _ctx(domain)
    src, tgt = _no_events(ctx)
    _run_kernel(ctx, params, state, 1, src, tgt, want_bits=False)
    return state


def run_chain(domain: Domain, params: ModelParams, seed: int, burn_in: int,
              n_sweeps: int) -> Iterator[int]:
    """Yield one packed configuration per sweep after burn_in sweeps."""
    if burn_in < 0 or n_sweeps < 0:
        raise ValidationError("burn_in and n_sweeps must be nonnegative")
    ctx = _ctx(domain)
    if ctx.ne > 63:
        raise TooLargeError("packed streams need <= 63 edges")
    state = init_chain(domain, seed)
    src, tgt = _no_events(ctx)
    done = 0
    while done < burn_in:
        n = min(_CHUNK, burn_in - done)
        _run_kernel(ctx, params, state, n, src, tgt, want_bits=False)
        done += n
    done = 0
    while done < n_sweeps:
        n = min(_CHUNK, n_sweeps - done)
        _, bits = _run_kernel(ctx, params, state, n, src, tgt,
                              want_bits=True)
        for b in bits:
            yield int(b)
        done += n


def _require_cluster_bc(domain: Domain):
    if domain.bc.kind not in ("free", "wired"):
        raise UnsupportedDomainError(
            "cluster moves support free or wired boundary conditions only; "
            f"got {domain.bc.kind!r}")


def _open_components(ctx: _SamplerCtx, edge_states: np.ndarray):
    mask = edge_states.view(bool)
    rows = ctx.eu[mask]
    cols = ctx.ev[mask]
    graph = csr_matrix((np.ones(rows.shape[0], dtype=np.uint8),
                        (rows, cols)),
                       shape=(ctx.n_reps, ctx.n_reps))
    return connected_components(graph, directed=False)


def chayes_machta_step(domain: Domain, params: ModelParams,
                       state: ChainState) -> ChainState:
    """One cluster-activation move.

    Each open cluster (bc contractions included) turns active with
    probability 1/q; every edge with both endpoints in active clusters is
    redrawn as Bernoulli(p); all other edges keep their state. Draw order
    is fixed: cluster coins first, then one uniform per edge.
    """
    _require_cluster_bc(domain)
    ctx = _ctx(domain)
    n_comp, labels = _open_components(ctx, state.edge_states)
    active = state.rng.random(n_comp) < 1.0 / params.q
    u = state.rng.random(ctx.ne)
    both = active[labels[ctx.eu]] & active[labels[ctx.ev]]
    state.edge_states[both] = (u[both] < params.p).astype(np.uint8)
    state.sweeps_done += 1
    return state


def _classify_events(ctx: _SamplerCtx, events: Sequence[EventSpec]):
    """Split events into kernel-friendly connections and everything else.

    Returns (flag matrices for connection events, positions of connection
    events, positions of predicate events, constant values by position).
    """
    conn_pos: List[int] = []
    pred_pos: List[int] = []
    const: dict = {}
    src_rows = []
    tgt_rows = []
    for j, ev in enumerate(events):
        if ev.kind == "always":
            const[j] = 1.0
        elif ev.kind == "connect":
            conn_pos.append(j)
            src_rows.append(ctx.resolve_flags(ev.sources))
            tgt_rows.append(ctx.resolve_flags(ev.targets))
        elif ev.kind == "predicate":
            pred_pos.append(j)
        else:
            raise ValidationError(f"unknown event kind {ev.kind!r}")
    if src_rows:
        ev_sources = np.stack(src_rows).astype(np.uint8)
        ev_targets = np.stack(tgt_rows).astype(np.uint8)
    else:
        ev_sources, ev_targets = _no_events(ctx)
    return ev_sources, ev_targets, conn_pos, pred_pos, const


def _batch_schedule(budget: int, n_batches: int):
    if budget < 10_000:
        raise ValidationError(
            f"budget must be at least 10000 sweeps, got {budget}")
    if n_batches < 100:
        raise ValidationError(
            f"need at least 100 batches for error bars, got {n_batches}")
    batch_size = budget // n_batches
    if batch_size < 1:
        raise ValidationError(
            f"budget {budget} cannot fill {n_batches} batches")
    return batch_size


def _finish(indicator_sums: np.ndarray, batch_size: int) -> List[Estimate]:
    """Batch means -> (mean, stderr) per event column."""
    n_batches = indicator_sums.shape[0]
    means = indicator_sums / batch_size
    mean = means.mean(axis=0)
    stderr = means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    n_samples = n_batches * batch_size
    return [Estimate(mean=float(m), stderr=float(s), n_samples=n_samples,
                     n_batches=n_batches)
            for m, s in zip(mean, stderr)]


def estimate_events(domain: Domain, params: ModelParams,
                    events: Sequence[EventSpec], seed: int, budget: int,
                    method: str = "heat_bath",
                    burn_in: Optional[int] = None,
                    n_batches: int = 100) -> List[Estimate]:
    """Estimate several event probabilities from one shared chain."""
    if not events:
        raise ValidationError("no events given")
    batch_size = _batch_schedule(budget, n_batches)
    ctx = _ctx(domain)
    ev_sources, ev_targets, conn_pos, pred_pos, const = _classify_events(
        ctx, events)
    if pred_pos and ctx.ne > 63:
        raise TooLargeError("predicate events need <= 63 edges")
    if burn_in is None:
        burn_in = max(budget // 10, 100)
    if method == "heat_bath":
        sums = _heat_bath_sums(ctx, params, seed, burn_in, n_batches,
                               batch_size, events, ev_sources, ev_targets,
                               conn_pos, pred_pos)
    elif method == "cluster":
        _require_cluster_bc(domain)
        sums = _cluster_sums(ctx, domain, params, seed, burn_in, n_batches,
                             batch_size, events, conn_pos, pred_pos)
    else:
        raise ValidationError(f"unknown method {method!r}")
    out = _finish(sums, batch_size)
    n_samples = n_batches * batch_size
    for j, val in const.items():
        out[j] = Estimate(mean=val, stderr=0.0, n_samples=n_samples,
                          n_batches=n_batches)
    return out


def _heat_bath_sums(ctx, params, seed, burn_in, n_batches, batch_size,
                    events, ev_sources, ev_targets, conn_pos, pred_pos):
    state = init_chain(ctx.domain, seed)
    nul_src, nul_tgt = _no_events(ctx)
    done = 0
    while done < burn_in:
        n = min(_CHUNK, burn_in - done)
        _run_kernel(ctx, params, state, n, nul_src, nul_tgt, want_bits=False)
        done += n
    sums = np.zeros((n_batches, len(events)), dtype=np.float64)
    preds = [(j, events[j].predicate) for j in pred_pos]
    for b in range(n_batches):
        done = 0
        while done < batch_size:
            n = min(_CHUNK, batch_size - done)
            out_ind, out_bits = _run_kernel(ctx, params, state, n,
                                            ev_sources, ev_targets,
                                            want_bits=bool(preds))
            for i, j in enumerate(conn_pos):
                sums[b, j] += out_ind[:, i].sum()
            for j, fn in preds:
                sums[b, j] += sum(1 for m in out_bits if fn(int(m)))
            done += n
    return sums


def _cluster_sums(ctx, domain, params, seed, burn_in, n_batches, batch_size,
                  events, conn_pos, pred_pos):
    state = init_chain(domain, seed)
    for _ in range(burn_in):
        chayes_machta_step(domain, params, state)
    conn_reps = [(j, np.flatnonzero(ctx.resolve_flags(events[j].sources)),
                  np.flatnonzero(ctx.resolve_flags(events[j].targets)))
                 for j in conn_pos]
    preds = [(j, events[j].predicate) for j in pred_pos]
    sums = np.zeros((n_batches, len(events)), dtype=np.float64)
    for b in range(n_batches):
        for _ in range(batch_size):
            chayes_machta_step(domain, params, state)
            if conn_reps:
                _, labels = _open_components(ctx, state.edge_states)
                for j, srcs, tgts in conn_reps:
                    if np.isin(labels[tgts], labels[srcs]).any():
                        sums[b, j] += 1.0
            if preds:
                bits = state.current
                for j, fn in preds:
                    if fn(bits):
                        sums[b, j] += 1.0
    return sums


def estimate_event(domain: Domain, params: ModelParams, event: EventSpec,
                   seed: int, budget: int, method: str = "heat_bath",
                   burn_in: Optional[int] = None,
                   n_batches: int = 100) -> Estimate:
    """Batch-means estimate of one event probability."""
    return estimate_events(domain, params, [event], seed, budget,
                           method=method, burn_in=burn_in,
                           n_batches=n_batches)[0]


def merge_estimates(estimates: Iterable[Estimate]) -> Estimate:
    """Combine independent estimates by inverse-variance weighting.

    Degenerate (stderr 0) inputs carry infinite weight: if any are present
    only they contribute, averaged evenly.
    """
    ests = list(estimates)
    if not ests:
        raise ValidationError("nothing to merge")
    n_samples = sum(e.n_samples for e in ests)
    n_batches = sum(e.n_batches for e in ests)
    exact_hits = [e for e in ests if e.stderr == 0.0]
    if exact_hits:
        mean = sum(e.mean for e in exact_hits) / len(exact_hits)
        return Estimate(mean=mean, stderr=0.0, n_samples=n_samples,
                        n_batches=n_batches)
    wsum = sum(1.0 / e.stderr**2 for e in ests)
    mean = sum(e.mean / e.stderr**2 for e in ests) / wsum
    return Estimate(mean=mean, stderr=math.sqrt(1.0 / wsum),
                    n_samples=n_samples, n_batches=n_batches)


def _joined_off_edge(ctx: _SamplerCtx, mask: int, e: int) -> bool:
    parent = list(range(ctx.n_reps))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in range(ctx.ne):
        if eid != e and (mask >> eid) & 1:
            ra, rb = find(int(ctx.eu[eid])), find(int(ctx.ev[eid]))
            if ra != rb:
                parent[ra] = rb
    return find(int(ctx.eu[e])) == find(int(ctx.ev[e]))


def exact_sweep_matrix(domain: Domain, params: ModelParams) -> np.ndarray:
    """Transition matrix of one full heat-bath sweep, by enumeration.

    Row-stochastic over all 2^ne configurations; row convention, so a
    distribution row vector pi maps to pi @ T. Tiny graphs only.
    """
    ctx = _ctx(domain)
    if ctx.ne > _MATRIX_CAP:
        raise TooLargeError(
            f"transition matrices need <= {_MATRIX_CAP} edges, got {ctx.ne}")
    n_masks = 1 << ctx.ne
    p_same, p_diff = _odds(params)
    T = np.eye(n_masks)
    for e in range(ctx.ne):
        step = np.zeros((n_masks, n_masks))
        bit = 1 << e
        for m in range(n_masks):
            p_open = p_same if _joined_off_edge(ctx, m, e) else p_diff
            step[m, m | bit] += p_open
            step[m, m & ~bit] += 1.0 - p_open
        T = T @ step
    return T


def _mask_components(ctx: _SamplerCtx, mask: int):
    parent = list(range(ctx.n_reps))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in range(ctx.ne):
        if (mask >> eid) & 1:
            ra, rb = find(int(ctx.eu[eid])), find(int(ctx.ev[eid]))
            if ra != rb:
                parent[ra] = rb
    roots = sorted({find(r) for r in range(ctx.n_reps)})
    index = {r: i for i, r in enumerate(roots)}
    labels = [index[find(r)] for r in range(ctx.n_reps)]
    return len(roots), labels


def exact_cluster_matrix(domain: Domain, params: ModelParams) -> np.ndarray:
    """Transition matrix of one cluster-activation move, by enumeration."""
    _require_cluster_bc(domain)
    ctx = _ctx(domain)
    if ctx.ne > _MATRIX_CAP:
        raise TooLargeError(
            f"transition matrices need <= {_MATRIX_CAP} edges, got {ctx.ne}")
    n_masks = 1 << ctx.ne
    p, q = params.p, params.q
    T = np.zeros((n_masks, n_masks))
    for m in range(n_masks):
        k, labels = _mask_components(ctx, m)
        for act_bits in range(1 << k):
            n_act = act_bits.bit_count()
            p_act = (1.0 / q) ** n_act * (1.0 - 1.0 / q) ** (k - n_act)
            resample = 0
            for eid in range(ctx.ne):
                la = labels[int(ctx.eu[eid])]
                lb = labels[int(ctx.ev[eid])]
                if (act_bits >> la) & 1 and (act_bits >> lb) & 1:
                    resample |= 1 << eid
            base = m & ~resample
            sub = resample
            while True:
                n_open = sub.bit_count()
                n_res = resample.bit_count()
                w = p ** n_open * (1.0 - p) ** (n_res - n_open)
                T[m, base | sub] += p_act * w
                if sub == 0:
                    break
                sub = (sub - 1) & resample
    return T


def write_samples(path, stream: Iterable[int]) -> int:
    """Write one packed configuration per line; returns the line count."""
    n = 0
    with open(path, "w", encoding="ascii") as fh:
        for bits in stream:
            fh.write(f"{bits}\n")
            n += 1
    return n
