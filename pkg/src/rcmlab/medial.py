"""Oriented medial graph and the deterministic interface walk.

Medial vertices sit on primal edge midpoints, stored in doubled integer
coordinates (the midpoint of edge (u, v) is u + v componentwise), so a
horizontal primal edge has odd doubled-x and a vertical one odd doubled-y.
Medial edges join diagonally adjacent midpoints and carry the canonical
orientation: counterclockwise around primal-vertex faces, clockwise around
dual-vertex faces.

The walk starts at a directed edge leaving the gap next to the marked vertex
a and ends on the directed edge entering the gap next to b. At each midpoint
it turns right (-pi/2) if the primal edge there is effectively open and left
(+pi/2) if closed, where "effectively" means: interface-arc edges count as
open, edges absent from the domain count as closed, and everything else
follows the configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConstructionBugError, ValidationError
from .lattice import Domain
from .planar import _require_planar_coords, dobrushin_arcs

__all__ = ["MedialGraph", "ExplorationPath", "medial_graph", "explore"]

# lattice directions in counterclockwise order: E, N, W, S
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


class MedialGraph:
    """Medial graph of an interface-pair domain, with successor tables.

    Public attributes: domain; mids (midpoint -> primal edge id);
    forced_eids (arc edges treated as open by the walk); e_a / e_b (start
    and end directed edges); oriented_edges (canonical directed medial edges
    between real midpoints); open_succ / closed_succ (successor tables over
    oriented_edges plus e_a, e_b).
    """

    def __init__(self, domain: Domain):
        g = domain.graph
        bc = domain.bc
        _require_planar_coords(g)
        if bc.kind != "dobrushin":
            raise ValidationError(
                "medial graphs need an interface pair (possibly collapsed)")
        self.domain = domain
        self.mids = {}
        for eid, (u, v) in enumerate(g.edges):
            ux, uy = g.coords[u]
            vx, vy = g.coords[v]
            self.mids[(ux + vx, uy + vy)] = eid

        a_id, b_id = g.vid(bc.a), g.vid(bc.b)
        if a_id == b_id:
            self.forced_eids = frozenset()
        else:
            arcs = dobrushin_arcs(g, bc.a, bc.b)
            self.forced_eids = frozenset(arcs.wired_edges)

        dir_a = self._gap_dir(g, a_id, bc.gap_a)
        dir_b = dir_a if a_id == b_id and bc.gap_b is None \
            else self._gap_dir(g, b_id, bc.gap_b)
        ax, ay = g.coords[a_id]
        bx, by = g.coords[b_id]
        g_a = (2 * ax + dir_a[0], 2 * ay + dir_a[1])
        g_b = (2 * bx + dir_b[0], 2 * by + dir_b[1])
        nxt = _DIRS[(_DIRS.index(dir_a) + 1) % 4]
        prv = _DIRS[(_DIRS.index(dir_b) - 1) % 4]
        m_next = (2 * ax + nxt[0], 2 * ay + nxt[1])
        m_prev = (2 * bx + prv[0], 2 * by + prv[1])
        for m, mark in ((m_next, bc.a), (m_prev, bc.b)):
            if m not in self.mids:
                raise ValidationError(
                    "no domain edge to anchor the walk at mark %r; pass a "
                    "different gap direction" % (mark,))
        self.gap_a, self.gap_b = g_a, g_b
        self.e_a = (g_a, m_next)
        self.e_b = (m_prev, g_b)

        self.oriented_edges = self._orient_real_segments()
        table = self.oriented_edges + (self.e_a, self.e_b)
        self.open_succ = {s: self.step(s, True) for s in table}
        self.closed_succ = {s: self.step(s, False) for s in table}
        self.forced_mask = 0
        for eid in self.forced_eids:
            self.forced_mask |= 1 << eid
        self._path_cache = {}

    @staticmethod
    def _gap_dir(g, vid, override):
        x, y = g.coords[vid]
        present = set()
        for w, _ in g.adj[vid]:
            wx, wy = g.coords[w]
            present.add((wx - x, wy - y))
        missing = [d for d in _DIRS if d not in present]
        if override is not None:
            override = tuple(override)
            if override not in missing:
                raise ValidationError(
                    "gap %r at %r is not a missing direction"
                    % (override, (x, y)))
            return override
        if len(missing) != 1:
            raise ValidationError(
                "vertex %r has %d missing directions; pass the gap "
                "explicitly" % ((x, y), len(missing)))
        return missing[0]

    def _orient_real_segments(self):
        segs = []
        for m in self.mids:
            for d in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                m2 = (m[0] + d[0], m[1] + d[1])
                if m2 not in self.mids:
                    continue
                if self.canonical_segment(m, m2) == (m, m2):
                    segs.append((m, m2))
        segs.sort()
        return tuple(segs)

    @staticmethod
    def primal_corner(m1, m2):
        """The shared primal-vertex face corner (both coords even)."""
        c1 = (m1[0], m2[1])
        c2 = (m2[0], m1[1])
        return c1 if c1[0] % 2 == 0 and c1[1] % 2 == 0 else c2

    @staticmethod
    def dual_corner(m1, m2):
        """The shared dual-vertex face corner (both coords odd)."""
        c1 = (m1[0], m2[1])
        c2 = (m2[0], m1[1])
        return c1 if c1[0] % 2 == 1 and c1[1] % 2 == 1 else c2

    @classmethod
    def canonical_segment(cls, m1, m2):
        """Direction counterclockwise around the shared primal corner."""
        u2 = cls.primal_corner(m1, m2)
        d = (m2[0] - m1[0], m2[1] - m1[1])
        rel = (m1[0] - u2[0], m1[1] - u2[1])
        return (m1, m2) if _cross(rel, d) > 0 else (m2, m1)

    @staticmethod
    def step(seg, is_open):
        """Geometric successor of a directed medial edge given the state of
        the primal edge under its head midpoint."""
        tail, m = seg
        vx, vy = m[0] - tail[0], m[1] - tail[1]
        horizontal = m[0] % 2 == 1
        if is_open == horizontal:
            v2 = (vx, -vy)
        else:
            v2 = (-vx, vy)
        return (m, (m[0] + v2[0], m[1] + v2[1]))

    def effective_state(self, mid, config):
        """Walk-facing edge state: forced arc edges open, absent edges
        closed, domain edges per configuration."""
        eid = self.mids.get(mid)
        if eid is None:
            return False
        if eid in self.forced_eids:
            return True
        return bool((config >> eid) & 1)

    def walk_successor(self, seg, config):
        return self.step(seg, self.effective_state(seg[1], config))

    def __repr__(self):
        return "MedialGraph(%d midpoints, %d oriented edges)" % (
            len(self.mids), len(self.oriented_edges))


def medial_graph(domain: Domain) -> MedialGraph:
    return MedialGraph(domain)


@dataclass(frozen=True)
class ExplorationPath:
    """Directed medial walk from e_a to e_b with quarter-turn bookkeeping.

    turns[i] is the signed quarter turn (+1 left, -1 right) taken between
    segments[i] and segments[i+1]. Windings are stored as integer quarter
    turns and converted to radians on demand.
    """

    segments: tuple
    turns: tuple
    closure_turn: int
    collapsed: bool

    def __len__(self):
        return len(self.segments)

    def __contains__(self, seg):
        return seg in self._index

    @property
    def _index(self):
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.segments)}
            self.__dict__["_index_cache"] = idx
        return idx

    @property
    def _suffix(self):
        suf = self.__dict__.get("_suffix_cache")
        if suf is None:
            suf = [0] * (len(self.turns) + 1)
            for i in range(len(self.turns) - 1, -1, -1):
                suf[i] = suf[i + 1] + self.turns[i]
            self.__dict__["_suffix_cache"] = suf
        return suf

    def quarter_winding(self, seg) -> int:
        """Quarter turns accumulated strictly between seg and the final
        edge; 0 if seg is not on the path."""
        i = self._index.get(seg)
        if i is None:
            return 0
        return self._suffix[i]

    def winding(self, seg) -> float:
        import math
        return self.quarter_winding(seg) * math.pi / 2.0

    @property
    def loop_turning(self):
        """Total turning of the closed interface loop (radians), defined in
        the collapsed case where the walk returns to its starting gap."""
        import math
        if not self.collapsed:
            return None
        return (sum(self.turns) + self.closure_turn) * math.pi / 2.0

    def reconstructed_states(self):
        """Edge states at visited midpoints implied by the turn directions:
        right turns mean open, left turns mean closed."""
        out = {}
        for i, t in enumerate(self.turns):
            out[self.segments[i][1]] = (t < 0)
        return out


def explore(M: MedialGraph, config: int) -> ExplorationPath:
    """Trace the interface from M.e_a to M.e_b under the configuration."""
    cap = 64 * (len(M.mids) + 4)
    seg = M.e_a
    segments = [seg]
    turns = []
    seen = {seg}
    while seg != M.e_b:
        nxt = M.walk_successor(seg, config)
        v1 = (seg[1][0] - seg[0][0], seg[1][1] - seg[0][1])
        v2 = (nxt[1][0] - nxt[0][0], nxt[1][1] - nxt[0][1])
        turns.append(1 if _cross(v1, v2) > 0 else -1)
        if nxt in seen or len(segments) > cap:
            raise ConstructionBugError(
                "interface walk failed to reach the final edge")
        seg = nxt
        segments.append(seg)
        seen.add(seg)
    va = (M.e_a[1][0] - M.e_a[0][0], M.e_a[1][1] - M.e_a[0][1])
    vb = (M.e_b[1][0] - M.e_b[0][0], M.e_b[1][1] - M.e_b[0][1])
    closure = 1 if _cross(vb, va) > 0 else -1
    g = M.domain.graph
    collapsed = g.vid(M.domain.bc.a) == g.vid(M.domain.bc.b)
    return ExplorationPath(tuple(segments), tuple(turns), closure, collapsed)
