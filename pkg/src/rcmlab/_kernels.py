"""Hot loops: per-configuration cluster counts, connectivity indicators,
and the heat-bath chain. Compiled with numba when available; the pure
Python fallbacks keep the package importable (slowly) without it.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def k_per_mask(ne, n_reps, eu, ev):
    """Cluster count (after bc contraction) for every configuration mask."""
    n_masks = 1 << ne
    out = np.empty(n_masks, dtype=np.int8)
    parent = np.empty(n_reps, dtype=np.int32)
    for mask in range(n_masks):
        for r in range(n_reps):
            parent[r] = r
        k = n_reps
        for e in range(ne):
            if (mask >> e) & 1:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
                    k -= 1
        out[mask] = k
    return out


@njit(cache=True)
def ko_histogram(ne, n_reps, eu, ev):
    """Joint (cluster count, open count) tally over all masks, streaming."""
    hist = np.zeros((n_reps + 1, ne + 1), dtype=np.float64)
    parent = np.empty(n_reps, dtype=np.int32)
    for mask in range(1 << ne):
        for r in range(n_reps):
            parent[r] = r
        k = n_reps
        o = 0
        for e in range(ne):
            if (mask >> e) & 1:
                o += 1
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
                    k -= 1
        hist[k, o] += 1.0
    return hist


@njit(cache=True)
def connect_per_mask(ne, n_reps, eu, ev, src, targets):
    """Indicator of {src connected to any flagged target rep}, per mask."""
    n_masks = 1 << ne
    out = np.empty(n_masks, dtype=np.uint8)
    parent = np.empty(n_reps, dtype=np.int32)
    for mask in range(n_masks):
        for r in range(n_reps):
            parent[r] = r
        for e in range(ne):
            if (mask >> e) & 1:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
        hit = 0
        rs = _find(parent, src)
        for r in range(n_reps):
            if targets[r] and _find(parent, r) == rs:
                hit = 1
                break
        out[mask] = hit
    return out


@njit(cache=True)
def setconnect_per_mask(ne, n_reps, eu, ev, src_flags, dst_flags):
    """Indicator of {some flagged source rep ~ some flagged target rep}."""
    n_masks = 1 << ne
    out = np.empty(n_masks, dtype=np.uint8)
    parent = np.empty(n_reps, dtype=np.int32)
    for mask in range(n_masks):
        for r in range(n_reps):
            parent[r] = r
        for e in range(ne):
            if (mask >> e) & 1:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
        hit = 0
        for r in range(n_reps):
            if not src_flags[r]:
                continue
            rr = _find(parent, r)
            for s in range(n_reps):
                if dst_flags[s] and _find(parent, s) == rr:
                    hit = 1
                    break
            if hit:
                break
        out[mask] = hit
    return out


@njit(cache=True)
def setconnect_weighted_stream(ne, n_reps, eu, ev, src_flags, dst_flags,
                               log_q, log_p, log_c):
    """Streaming (numerator, Z) for a set-connection event; no mask array.

    Kahan-compensated sums of w = exp(k log_q + o log_p + c log_c).
    """
    num = 0.0
    num_c = 0.0
    den = 0.0
    den_c = 0.0
    parent = np.empty(n_reps, dtype=np.int32)
    for mask in range(1 << ne):
        for r in range(n_reps):
            parent[r] = r
        k = n_reps
        o = 0
        for e in range(ne):
            if (mask >> e) & 1:
                o += 1
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
                    k -= 1
        w = np.exp(k * log_q + o * log_p + (ne - o) * log_c)
        y = w - den_c
        t = den + y
        den_c = (t - den) - y
        den = t
        hit = 0
        for r in range(n_reps):
            if not src_flags[r]:
                continue
            rr = _find(parent, r)
            for s in range(n_reps):
                if dst_flags[s] and _find(parent, s) == rr:
                    hit = 1
                    break
            if hit:
                break
        if hit:
            y = w - num_c
            t = num + y
            num_c = (t - num) - y
            num = t
    return num, den


@njit(cache=True)
def _connected_off_edge(e, state, eu, ev, indptr, nbr, nbr_eid, stamp,
                        stamp_val, queue):
    """BFS over open edges excluding e, from eu[e]; True if ev[e] reached."""
    src, dst = eu[e], ev[e]
    if src == dst:
        return True
    head, tail = 0, 0
    queue[tail] = src
    tail += 1
    stamp[src] = stamp_val
    while head < tail:
        v = queue[head]
        head += 1
        for i in range(indptr[v], indptr[v + 1]):
            ee = nbr_eid[i]
            if ee == e or state[ee] == 0:
                continue
            w = nbr[i]
            if stamp[w] != stamp_val:
                if w == dst:
                    return True
                stamp[w] = stamp_val
                queue[tail] = w
                tail += 1
    return False


@njit(cache=True)
def hb_run(state, eu, ev, indptr, nbr, nbr_eid, p_same, p_diff, uniforms,
           ev_sources, ev_targets, out_ind, out_bits):
    """Heat-bath sweeps in fixed edge order with per-sweep outputs.

    state: uint8[ne], mutated in place. uniforms: float64[n_sweeps, ne].
    ev_sources, ev_targets: uint8[n_events, n_reps] flag matrices; event j
    fires when some flagged source shares a cluster with some flagged target.
    out_ind: uint8[n_sweeps, n_events] (0 events to skip);
    out_bits: int64[n_sweeps] packed configuration after each sweep
    (length-0 array to skip).
    """
    n_sweeps, ne = uniforms.shape
    n_reps = indptr.shape[0] - 1
    n_events = ev_sources.shape[0]
    want_bits = out_bits.shape[0] > 0
    stamp = np.zeros(n_reps, dtype=np.int64)
    queue = np.empty(n_reps, dtype=np.int32)
    comp = np.empty(n_reps, dtype=np.int32)
    mark = np.empty(n_reps, dtype=np.uint8)
    stamp_val = 0
    for s in range(n_sweeps):
        for e in range(ne):
            stamp_val += 1
            joined = _connected_off_edge(e, state, eu, ev, indptr, nbr,
                                         nbr_eid, stamp, stamp_val, queue)
            p_open = p_same if joined else p_diff
            state[e] = 1 if uniforms[s, e] < p_open else 0
        if want_bits:
            bits = 0
            for e in range(ne):
                if state[e]:
                    bits |= 1 << e
            out_bits[s] = bits
        if n_events > 0:
            for r in range(n_reps):
                comp[r] = -1
            cid = 0
            for r in range(n_reps):
                if comp[r] >= 0:
                    continue
                comp[r] = cid
                head, tail = 0, 1
                queue[0] = r
                while head < tail:
                    v = queue[head]
                    head += 1
                    for i in range(indptr[v], indptr[v + 1]):
                        if state[nbr_eid[i]] == 0:
                            continue
                        w = nbr[i]
                        if comp[w] < 0:
                            comp[w] = cid
                            queue[tail] = w
                            tail += 1
                cid += 1
            for j in range(n_events):
                for c in range(cid):
                    mark[c] = 0
                for r in range(n_reps):
                    if ev_sources[j, r]:
                        mark[comp[r]] = 1
                hit = 0
                for r in range(n_reps):
                    if ev_targets[j, r] and mark[comp[r]]:
                        hit = 1
                        break
                out_ind[s, j] = hit
    return state
