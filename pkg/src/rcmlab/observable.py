"""Parafermionic observable on interface-pair domains.

F(e) is the expectation of exp(i*sigma*W(e, e_b)) on the event that the
interface walk traverses the directed medial edge e, with W the winding
accumulated between e and the final edge e_b and sigma determined by q
through cos(sigma*pi/2) = sqrt(q)/2. Signed sums of F over the edge
boundaries of admissible medial vertex sets vanish at the self-dual point;
this module computes the field exactly by enumeration (sharing the walk per
configuration across q values), builds contour specifications, and provides
a Monte Carlo estimator for larger domains.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .exact import ModelParams, config_weights, self_dual_point
from .lattice import Domain
from .medial import MedialGraph, ExplorationPath, explore

__all__ = [
    "sigma_hat",
    "observable_field",
    "observable_exact",
    "ContourSpec",
    "contour_spec",
    "admissible_vertices",
    "contour_sum",
    "contour_report",
    "MCObservable",
    "observable_mc",
]


def sigma_hat(q: float) -> float:
    """The spin exponent: (2/pi) * arccos(sqrt(q)/2), in [0, 2/3]."""
    if not (1.0 <= q <= 4.0):
        raise ValidationError(f"q must lie in [1,4], got {q}")
    return (2.0 / math.pi) * math.acos(math.sqrt(q) / 2.0)


_medials: dict = {}
_fields: dict = {}


def _medial(domain: Domain) -> MedialGraph:
    key = domain.key()
    m = _medials.get(key)
    if m is None:
        m = MedialGraph(domain)
        _medials[key] = m
    return m


def _path(M: MedialGraph, config: int) -> ExplorationPath:
    config |= M.forced_mask
    p = M._path_cache.get(config)
    if p is None:
        p = explore(M, config)
        M._path_cache[config] = p
    return p


def _to_doubled_point(pt):
    x, y = pt
    if float(x).is_integer() and float(y).is_integer():
        return (int(x), int(y))
    return (int(round(2 * x)), int(round(2 * y)))


def as_doubled_segment(seg):
    """Accept a directed medial edge in doubled-integer or half-integer
    coordinates and return the doubled form."""
    a, b = seg
    return (_to_doubled_point(a), _to_doubled_point(b))


def observable_field(domain: Domain, q: float, p: float = None) -> dict:
    """F(e) for every medial edge of the domain (plus e_a, e_b) by exact
    enumeration. p defaults to the self-dual point; passing another p is an
    off-critical diagnostic."""
    if p is None:
        p = self_dual_point(q)
    key = (domain.key(), q, p)
    cached = _fields.get(key)
    if cached is not None:
        return cached
    M = _medial(domain)
    sigma = sigma_hat(q)
    params = ModelParams(p, q)
    w = config_weights(domain, params)
    z = float(w.sum())
    acc = {}
    phase = {}
    for mask in range(w.shape[0]):
        wm = float(w[mask])
        path = _path(M, mask)
        suffix = path._suffix
        for i, seg in enumerate(path.segments):
            k = suffix[i]
            ph = phase.get(k)
            if ph is None:
                ph = cmath.exp(1j * sigma * k * math.pi / 2.0)
                phase[k] = ph
            acc[seg] = acc.get(seg, 0.0) + wm * ph
    field = {s: 0.0 + 0.0j for s in M.oriented_edges}
    field[M.e_a] = 0.0 + 0.0j
    field[M.e_b] = 0.0 + 0.0j
    for seg, val in acc.items():
        field[seg] = val / z
    _fields[key] = field
    return field


def observable_exact(domain: Domain, q: float, e, p: float = None) -> complex:
    field = observable_field(domain, q, p)
    seg = as_doubled_segment(e)
    if seg not in field:
        raise ValidationError(f"{e!r} is not a medial edge of the domain")
    return field[seg]


def admissible_vertices(M: MedialGraph) -> tuple:
    """Midpoints whose four incident medial edges all belong to the domain's
    medial edge set or to {e_a, e_b}; interface-arc midpoints excluded."""
    real = set(M.mids)
    oriented = set(M.oriented_edges)
    special = {M.e_a, M.e_b}
    out = []
    for m in sorted(M.mids):
        if M.mids[m] in M.forced_eids:
            continue
        ok = True
        for d in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            m2 = (m[0] + d[0], m[1] + d[1])
            seg = M.canonical_segment(m, m2)
            if seg in special:
                continue
            if m2 not in real or seg not in oriented:
                ok = False
                break
        if ok:
            out.append(m)
    return tuple(out)


@dataclass(frozen=True)
class ContourSpec:
    """A vertex set V with its edge boundary and pointing signs.

    boundary holds the directed medial edges with exactly one endpoint
    midpoint in V; signs[i] is +1 when boundary[i] points into V (its head
    lies in V) and -1 when it points out.
    """

    vertices: tuple
    boundary: tuple
    signs: tuple


def contour_spec(M: MedialGraph, V) -> ContourSpec:
    vset = {_to_doubled_point(v) for v in V}
    admissible = set(admissible_vertices(M))
    bad = vset - admissible
    if bad:
        raise ValidationError(
            "vertices %r lack four domain medial edges" % (sorted(bad),))
    candidates = []
    seen = set()
    for m in sorted(vset):
        for d in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            seg = M.canonical_segment(m, (m[0] + d[0], m[1] + d[1]))
            if seg not in seen:
                seen.add(seg)
                candidates.append(seg)
    boundary = []
    signs = []
    for seg in candidates:
        tail_in = seg[0] in vset
        head_in = seg[1] in vset
        if tail_in == head_in:
            continue
        boundary.append(seg)
        signs.append(1 if head_in else -1)
    return ContourSpec(tuple(sorted(vset)), tuple(boundary), tuple(signs))


def contour_sum(domain: Domain, q: float, spec: ContourSpec,
                p: float = None) -> complex:
    """Signed sum of the observable over the contour boundary; vanishes at
    the self-dual point."""
    field = observable_field(domain, q, p)
    total = 0.0 + 0.0j
    for seg, sign in zip(spec.boundary, spec.signs):
        total += sign * field.get(seg, 0.0 + 0.0j)
    return total


def contour_report(domain: Domain, q: float, p: float = None) -> dict:
    """JSON-ready report: per-vertex contour sums and the maximum modulus
    over all admissible singleton contours."""
    if p is None:
        p_used = self_dual_point(q)
        at_sd = True
    else:
        p_used = p
        at_sd = abs(p - self_dual_point(q)) < 1e-15
    M = _medial(domain)
    rows = []
    max_mod = 0.0
    for v in admissible_vertices(M):
        spec = contour_spec(M, [v])
        s = contour_sum(domain, q, spec, p)
        mod = abs(s)
        max_mod = max(max_mod, mod)
        rows.append({"vertex": list(v), "sum_re": s.real, "sum_im": s.imag,
                     "modulus": mod})
    g = domain.graph
    return {
        "domain": {"n_vertices": g.n_vertices, "n_edges": g.n_edges,
                   "bc": repr(domain.bc)},
        "q": q,
        "p": p_used,
        "at_self_dual_point": at_sd,
        "contours": rows,
        "max_modulus": max_mod,
    }


@dataclass(frozen=True)
class MCObservable:
    mean: complex
    stderr_re: float
    stderr_im: float
    n_samples: int
    n_batches: int


def observable_mc(domain: Domain, q: float, e, seed: int, budget: int,
                  p: float = None, burn_in: int = None) -> MCObservable:
    """Monte Carlo estimate of F(e) from a heat-bath chain."""
    from .sampler import run_chain

    if p is None:
        p = self_dual_point(q)
    if budget < 10_000:
        raise ValidationError("budget must be at least 10^4 sweeps")
    seg = as_doubled_segment(e)
    M = _medial(domain)
    sigma = sigma_hat(q)
    params = ModelParams(p, q)
    if burn_in is None:
        burn_in = max(1000, budget // 20)
    vals = np.zeros(budget, dtype=np.complex128)
    for i, config in enumerate(run_chain(domain, params, seed, burn_in,
                                         budget)):
        path = _path(M, config)
        k = path.quarter_winding(seg)
        if seg in path:
            vals[i] = cmath.exp(1j * sigma * k * math.pi / 2.0)
    n_batches = 100
    bs = budget // n_batches
    batches = vals[:n_batches * bs].reshape(n_batches, bs).mean(axis=1)
    mean = complex(vals.mean())
    err_re = float(batches.real.std(ddof=1) / math.sqrt(n_batches))
    err_im = float(batches.imag.std(ddof=1) / math.sqrt(n_batches))
    return MCObservable(mean, err_re, err_im, budget, n_batches)
