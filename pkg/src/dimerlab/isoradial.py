"""Isoradial embeddings and the critical dimer model on them.

An embedding is isoradial when every bounded face is inscribed in a circle
of radius 1 containing its centre. Each edge e = wb then sits in a rhombus
w, p*, b, q* with unit sides whose other two corners are the centres of the
faces on either side; theta_e in (0, pi/2) is half the rhombus angle at w
(so |b - w| = 2 cos theta and |p* - q*| = 2 sin theta). Here p* is the centre
on the right of w -> b and q* the one on the left. For an edge on the outer
face the missing centre is the fourth corner of the rhombus.
"""
from __future__ import annotations

import cmath
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graphs import (BLACK, WHITE, PlanarGraph, bipartite_from_positions, graph_from_json,
                     graph_from_positions, graph_to_json)

TOL = 1e-9


class IsoradialError(ValueError):
    """The input is not a valid isoradial embedding for the requested use."""


def _c(p) -> complex:
    return complex(p[0], p[1])


# ---------------------------------------------------------------------------
# Embedding


@dataclass(frozen=True, eq=False)
class IsoradialEmbedding:
    """A planar graph drawn with straight edges, plus derived rhombus data.

    ``pstar[e]`` / ``qstar[e]`` are the rhombus corners right / left of the
    stored orientation u -> v of edge e; ``theta[e]`` its half-angle.
    """

    graph: PlanarGraph
    pstar: tuple = field(init=False)
    qstar: tuple = field(init=False)
    theta: tuple = field(init=False)

    def __post_init__(self):
        g = self.graph
        if g.positions is None:
            raise IsoradialError("an isoradial embedding needs vertex positions")
        ps, qs, th = [], [], []
        for e, (u, v) in enumerate(g.edges):
            a, b = _c(g.positions[u]), _c(g.positions[v])
            L = abs(b - a)
            if not 0 < L < 2:
                ps.append(None)
                qs.append(None)
                th.append(float("nan"))
                continue
            d = (b - a) / L
            h = math.sqrt(max(0.0, 1 - L * L / 4))
            mid = (a + b) / 2
            ps.append(mid - 1j * d * h)
            qs.append(mid + 1j * d * h)
            th.append(math.acos(L / 2))
        object.__setattr__(self, "pstar", tuple(ps))
        object.__setattr__(self, "qstar", tuple(qs))
        object.__setattr__(self, "theta", tuple(th))

    def position(self, v: int) -> complex:
        return _c(self.graph.positions[v])

    def face_center(self, f: int) -> complex | None:
        """Circumcentre of an inner face (None for the outer face)."""
        if f == 0:
            return None
        d = self.graph.faces[f][0]
        e = d >> 1
        # the face lies left of dart d: left of u->v is q*, left of v->u is p*
        return self.qstar[e] if d % 2 == 0 else self.pstar[e]

    def nu(self, e: int) -> float:
        """Probability weight sin(2 theta)."""
        return math.sin(2 * self.theta[e])

    def kasteleyn_modulus(self, e: int) -> float:
        return 2 * math.sin(self.theta[e])


def embedding_from_points(points, pairs, colors=None) -> IsoradialEmbedding:
    """Embedding from complex (or (x, y)) points and vertex pairs; with
    colors, edges are re-oriented white -> black."""
    pos = [(float(complex(p).real), float(complex(p).imag)) if not isinstance(p, tuple) else p for p in points]
    if colors is None:
        g = graph_from_positions(pos, pairs)
    else:
        g = bipartite_from_positions(pos, colors, pairs)
    return IsoradialEmbedding(g)


# ---------------------------------------------------------------------------
# Generators


def grid_embedding(alphas, betas) -> IsoradialEmbedding:
    """Rhombic tiling of two crossing families of train tracks.

    Track k of the first family has direction e^{i alphas[k]}, track l of
    the second e^{i betas[l]}; the corner (k, l) sits at
    sum_{k'<k} e^{i alpha} + sum_{l'<l} e^{i beta}. Corners with k + l even
    are the graph's vertices (white when k is even), the others are face
    centres. Every rhombus is positively oriented when
    0 < betas[l] - alphas[k] < pi for all k, l.
    """
    A = np.concatenate([[0], np.cumsum(np.exp(1j * np.asarray(alphas, float)))])
    B = np.concatenate([[0], np.cumsum(np.exp(1j * np.asarray(betas, float)))])
    K, L = len(alphas), len(betas)
    index, pts, colors = {}, [], []
    for k in range(K + 1):
        for l in range(L + 1):
            if (k + l) % 2 == 0:
                index[(k, l)] = len(pts)
                pts.append(A[k] + B[l])
                colors.append(WHITE if k % 2 == 0 else BLACK)
    pairs = []
    for k in range(K):
        for l in range(L):
            if (k + l) % 2 == 0:
                pairs.append((index[(k, l)], index[(k + 1, l + 1)]))
            else:
                pairs.append((index[(k + 1, l)], index[(k, l + 1)]))
    return embedding_from_points(pts, pairs, colors)


def square_patch(m: int, n: int) -> IsoradialEmbedding:
    """Square lattice (side sqrt 2, all theta = pi/4) from an m x n track grid."""
    return grid_embedding([-math.pi / 4] * m, [math.pi / 4] * n)


HEX_W1 = cmath.exp(2j * math.pi / 3) - 1
HEX_W2 = cmath.exp(4j * math.pi / 3) - 1


def honeycomb_patch(n: int) -> IsoradialEmbedding:
    """Honeycomb with unit edges (all theta = pi/3): whites at i w1 + j w2,
    blacks one unit to their right, 0 <= i, j < n."""
    pts, colors, idx = [], [], {}
    for i in range(n):
        for j in range(n):
            idx[("w", i, j)] = len(pts)
            pts.append(i * HEX_W1 + j * HEX_W2)
            colors.append(WHITE)
    for i in range(n + 1):
        for j in range(n + 1):
            idx[("b", i, j)] = len(pts)
            pts.append(i * HEX_W1 + j * HEX_W2 + 1)
            colors.append(BLACK)
    pairs = []
    for i in range(n):
        for j in range(n):
            w = idx[("w", i, j)]
            pairs += [(w, idx[("b", i, j)]), (w, idx[("b", i + 1, j)]), (w, idx[("b", i, j + 1)])]
    used = sorted({v for p in pairs for v in p})
    remap = {v: k for k, v in enumerate(used)}
    return embedding_from_points([pts[v] for v in used], [(remap[a], remap[b]) for a, b in pairs],
                                 [colors[v] for v in used])


def triangular_patch(n: int) -> IsoradialEmbedding:
    """Triangular lattice with side sqrt 3 (unit circumradius, all theta = pi/6);
    not bipartite, so only the geometric checks apply."""
    r = math.sqrt(3)
    w = cmath.exp(1j * math.pi / 3)
    idx, pts = {}, []
    for i in range(n):
        for j in range(n - i):
            idx[(i, j)] = len(pts)
            pts.append(r * (i + j * w))
    pairs = []
    for (i, j), a in idx.items():
        for di, dj in ((1, 0), (0, 1), (-1, 1)):
            if (i + di, j + dj) in idx:
                pairs.append((a, idx[(i + di, j + dj)]))
    return embedding_from_points(pts, pairs)


def square_rectangle(m: int, n: int) -> IsoradialEmbedding:
    """The m x n grid graph with spacing sqrt 2 (cell (i, j) white when i + j is odd)."""
    r = math.sqrt(2)
    pts, colors, idx = [], [], {}
    for i in range(m):
        for j in range(n):
            idx[(i, j)] = len(pts)
            pts.append(complex(r * i, r * j))
            colors.append(WHITE if (i + j) % 2 else BLACK)
    pairs = []
    for i in range(m):
        for j in range(n):
            for di, dj in ((1, 0), (0, 1)):
                if (i + di, j + dj) in idx:
                    a, b = idx[(i, j)], idx[(i + di, j + dj)]
                    pairs.append((a, b) if colors[a] == WHITE else (b, a))
    return embedding_from_points(pts, pairs, colors)


def subpiece(emb: IsoradialEmbedding, vertices) -> IsoradialEmbedding:
    """Induced subgraph on the given vertices, with the same positions."""
    g = emb.graph
    keep = sorted(set(vertices))
    remap = {v: k for k, v in enumerate(keep)}
    pts = [emb.position(v) for v in keep]
    pairs = [(remap[u], remap[v]) for u, v in g.edges if u in remap and v in remap]
    colors = None if g.colors is None else [g.colors[v] for v in keep]
    return embedding_from_points(pts, pairs, colors)


# ---------------------------------------------------------------------------
# Train tracks (zig-zag paths)


@dataclass(frozen=True)
class Track:
    """A rhombus chain: its crossings (edge, side pair) in order, and whether
    it closes up. Pair 0 joins the corner (u, left) to (v, right) of the
    stored edge u -> v, pair 1 joins (v, left) to (u, right)."""

    crossings: tuple
    closed: bool

    @property
    def edges(self) -> tuple:
        return tuple(e for e, _ in self.crossings)


def _face_positions(g: PlanarGraph) -> dict:
    """dart -> (face, index in that face's dart cycle)."""
    out = {}
    for f, cyc in enumerate(g.faces):
        for i, d in enumerate(cyc):
            out[d] = (f, i)
    return out


def _crossing_corners(g: PlanarGraph) -> dict:
    """(e, k) -> its two corners. Inner corners are (face, index) and are
    shared by exactly two crossings; outer-face corners end a chain."""
    fp = _face_positions(g)

    def corner(f, i, e, k):
        return (f, i % len(g.faces[f])) if f != 0 else ("outer", e, k)

    out = {}
    for e in range(g.n_edges):
        fl, i = fp[2 * e]      # face left of u -> v; corner i-1 at u, corner i at v
        fr, j = fp[2 * e + 1]  # face left of v -> u; corner j-1 at v, corner j at u
        out[(e, 0)] = (corner(fl, i - 1, e, 0), corner(fr, j - 1, e, 0))
        out[(e, 1)] = (corner(fl, i, e, 1), corner(fr, j, e, 1))
    return out


def train_tracks(g: PlanarGraph) -> list[Track]:
    """Zig-zag paths of a planar map, as chains of rhombi joined through the
    face corners they share."""
    ends = _crossing_corners(g)
    at: dict = {}
    for x, cs in ends.items():
        for c in cs:
            at.setdefault(c, []).append(x)

    def step(x, c):
        """Crossing on the other side of corner c, if any."""
        nb = [y for y in at[c] if y != x]
        return nb[0] if nb else None

    def other(x, c):
        a, b = ends[x]
        return b if c == a else a

    used = set()
    tracks = []
    for start in sorted(ends):
        if start in used:
            continue
        used.add(start)
        seq = deque([start])
        closed = False
        for side in (1, 0):
            x, c = start, ends[start][side]
            while True:
                y = step(x, c)
                if y is None:
                    break
                if y == start:
                    closed = True
                    break
                if y in used:  # a corner shared by more than two crossings
                    break
                used.add(y)
                if side == 1:
                    seq.append(y)
                else:
                    seq.appendleft(y)
                x, c = y, other(y, c)
            if closed:
                break
        tracks.append(Track(tuple(seq), closed))
    return tracks


# ---------------------------------------------------------------------------
# Validation


@dataclass
class IsoradialReport:
    ok: bool
    violations: list
    tracks: list

    def __bool__(self):
        return self.ok


def _boundary_vertices(g: PlanarGraph) -> set:
    return set(g.face_vertices(0)) if g.n_faces > 1 else set(range(g.n_vertices))


def validate_isoradial(emb: IsoradialEmbedding, tol: float = TOL) -> IsoradialReport:
    """Check unit circumradius of inner faces, angle closure at vertices and
    centres, and the two zig-zag conditions (no self-crossing, no two
    chains crossing twice)."""
    g = emb.graph
    bad = []
    problems = g.validate()
    bad += [f"map: {p}" for p in problems]
    for e in range(g.n_edges):
        if emb.pstar[e] is None:
            bad.append(f"edge {e}: length not in (0, 2), no unit rhombus")
    if not bad:
        for f in range(1, g.n_faces):
            c = emb.face_center(f)
            for d in g.faces[f]:
                e = d >> 1
                cand = emb.qstar[e] if d % 2 == 0 else emb.pstar[e]
                if abs(cand - c) > tol:
                    bad.append(f"face {f}: not inscribed in a unit circle around an interior centre")
                    break
        boundary = _boundary_vertices(g)
        inc: dict = {v: [] for v in range(g.n_vertices)}
        for e, (u, v) in enumerate(g.edges):
            inc[u].append(e)
            inc[v].append(e)
        for v in range(g.n_vertices):
            if v in boundary:
                continue
            s = sum(emb.theta[e] for e in inc[v])
            if abs(s - math.pi) > 1e-7:
                bad.append(f"vertex {v}: half-angles sum to {s:.9f}, not pi")
        for f in range(1, g.n_faces):
            s = sum(math.pi / 2 - emb.theta[d >> 1] for d in g.faces[f])
            if abs(s - math.pi) > 1e-7:
                bad.append(f"face {f}: centre angles sum to {s:.9f}, not pi")
    tracks = train_tracks(g)
    owner: dict = {}
    for t_id, t in enumerate(tracks):
        seen = set()
        for e in t.edges:
            if e in seen:
                bad.append(f"zig-zag path {t_id} crosses itself at edge {e}")
            seen.add(e)
            owner.setdefault(e, []).append(t_id)
    meet: dict = {}
    for e, ts in owner.items():
        if len(ts) == 2 and ts[0] != ts[1]:
            key = tuple(sorted(ts))
            meet.setdefault(key, []).append(e)
    for (a, b), es in sorted(meet.items()):
        if len(es) > 1:
            bad.append(f"zig-zag paths {a} and {b} cross {len(es)} times (edges {sorted(es)})")
    return IsoradialReport(not bad, bad, tracks)


def _side(emb: IsoradialEmbedding, x) -> tuple[complex, complex]:
    """The two rhombus sides (vertex, centre) joined by crossing x."""
    e, k = x
    u, v = emb.graph.edges[e]
    a, b = emb.position(u), emb.position(v)
    p, q = emb.pstar[e], emb.qstar[e]
    return ((a, q), (b, p)) if k == 0 else ((b, q), (a, p))


def chains_monotone(emb: IsoradialEmbedding, tol: float = 1e-7) -> bool:
    """Rhombus-chain form of the zig-zag conditions.

    Every edge must carry a unit rhombus; two crossings meeting at a corner
    must agree on the shared side; and along each chain all sides are
    translates of one vector t while every rhombus steps to the same side
    of t (and no edge is crossed twice).
    """
    if any(p is None for p in emb.pstar):
        return False
    g = emb.graph
    for t in train_tracks(g):
        if len(set(t.edges)) != len(t.edges):
            return False
        ref = None
        sign = 0
        prev_end = None
        for n, x in enumerate(t.crossings):
            s1, s2 = _side(emb, x)
            if n == 0 and len(t.crossings) > 1 and any(
                    max(abs(s1[0] - o[0]), abs(s1[1] - o[1])) < tol for o in _side(emb, t.crossings[1])):
                s1, s2 = s2, s1
            if prev_end is not None:
                # orient the crossing so it starts at the side shared with its predecessor
                if max(abs(s2[0] - prev_end[0]), abs(s2[1] - prev_end[1])) < tol:
                    s1, s2 = s2, s1
                elif max(abs(s1[0] - prev_end[0]), abs(s1[1] - prev_end[1])) >= tol:
                    return False
            for s in (s1, s2):
                vec = s[1] - s[0]
                if ref is None:
                    ref = vec
                if abs((vec * ref.conjugate()).imag) > tol:
                    return False
            m1, m2 = (s1[0] + s1[1]) / 2, (s2[0] + s2[1]) / 2
            c = ((m2 - m1) * ref.conjugate()).imag
            sg = 1 if c > tol else (-1 if c < -tol else 0)
            if sg == 0 or (sign and sg != sign):
                return False
            sign = sg
            prev_end = s2
    return True


# ---------------------------------------------------------------------------
# Kasteleyn matrix


def _require_valid(emb: IsoradialEmbedding):
    rep = validate_isoradial(emb)
    if not rep.ok:
        raise IsoradialError("invalid isoradial embedding: " + "; ".join(rep.violations[:3]))


def _require_bipartite(g: PlanarGraph):
    if not g.is_bipartite:
        raise IsoradialError("the graph must be bipartite with edges stored white -> black")
    for w, b in g.edges:
        if g.colors[w] != WHITE or g.colors[b] != BLACK:
            raise IsoradialError("edges must be stored white -> black")


def isoradial_kasteleyn(emb: IsoradialEmbedding, check: bool = True):
    """K(w, b) = i (p* - q*), of modulus 2 sin theta and direction b - w."""
    from .kasteleyn import from_edge_values

    g = emb.graph
    _require_bipartite(g)
    if check:
        _require_valid(emb)
    vals = [1j * (emb.pstar[e] - emb.qstar[e]) for e in range(g.n_edges)]
    return from_edge_values(g, vals, "isoradial")


def gauge_factor(emb: IsoradialEmbedding, matching_edges) -> float:
    """prod over the matching of (2 sin theta) / (sin 2 theta) = 1 / cos theta."""
    return math.prod(1 / math.cos(emb.theta[e]) for e in matching_edges)


# ---------------------------------------------------------------------------
# Discrete exponentials
#
# The rhombic graph has the primal vertices and the face centres as nodes and
# the rhombus sides as edges. Outer-face corners are separate nodes per edge.
# Each side carries a unit vector e^{i alpha}: centre - vertex when the vertex
# is white, vertex - centre when it is black. Moving along a side divides by
# (z - e^{i alpha}) when leaving a white or arriving at a black vertex and
# multiplies by it otherwise, so f_v(z) is a product of powers of
# (z - e^{i alpha}) over a finite set of directions.


@dataclass(frozen=True)
class Pole:
    """f_v has a pole of the given order at z."""

    z: complex
    order: int


def _rhombic_graph(emb: IsoradialEmbedding):
    """nodes -> position, and adjacency node -> [(node, direction)]."""
    g = emb.graph
    fp = _face_positions(g)
    pos: dict = {("v", v): emb.position(v) for v in range(g.n_vertices)}
    adj: dict = {n: [] for n in pos}
    for e, (u, v) in enumerate(g.edges):
        fl = fp[2 * e][0]
        fr = fp[2 * e + 1][0]
        corners = (("c", fl) if fl else ("x", e, "q"), emb.qstar[e]), (("c", fr) if fr else ("x", e, "p"), emb.pstar[e])
        for node, z in corners:
            pos.setdefault(node, z)
            adj.setdefault(node, [])
            for x in (u, v):
                if any(n == node for n, _ in adj[("v", x)]):
                    continue
                white = g.colors[x] == WHITE
                d = (z - pos[("v", x)]) if white else (pos[("v", x)] - z)
                adj[("v", x)].append((node, d))
                adj[node].append((("v", x), d))
    return pos, adj


def _exponent_step(emb: IsoradialEmbedding, a, b) -> int:
    """Power of (z - e^{i alpha}) gained moving from node a to node b."""
    g = emb.graph
    if a[0] == "v":
        return -1 if g.colors[a[1]] == WHITE else 1
    return -1 if g.colors[b[1]] == BLACK else 1


class DiscreteExponential:
    """f_v(z) for all vertices and centres, normalized by f_{w0} = 1.

    Directions equal up to ``tol`` are merged so that cancellation is exact;
    ``exponents[node]`` maps a direction index to its (integer) power.
    """

    def __init__(self, emb: IsoradialEmbedding, w0: int, tol: float = 1e-9):
        g = emb.graph
        _require_bipartite(g)
        if g.colors[w0] != WHITE:
            raise IsoradialError("the base vertex must be white")
        self.embedding = emb
        self.w0 = w0
        self.tol = tol
        self.pos, self.adj = _rhombic_graph(emb)
        self.directions: list[complex] = []
        self.exponents: dict = {("v", w0): {}}
        queue = deque([("v", w0)])
        while queue:
            a = queue.popleft()
            for b, d in self.adj[a]:
                ex = self._add(self.exponents[a], self.direction_index(d), _exponent_step(emb, a, b))
                if b not in self.exponents:
                    self.exponents[b] = ex
                    queue.append(b)
        bad = self.inconsistent_sides()
        if bad:
            raise IsoradialError(f"discrete exponential is path dependent on {len(bad)} rhombus sides")

    def direction_index(self, d: complex) -> int:
        d = d / abs(d)
        for k, x in enumerate(self.directions):
            if abs(x - d) < self.tol:
                return k
        self.directions.append(d)
        return len(self.directions) - 1

    @staticmethod
    def _add(ex: dict, k: int, m: int) -> dict:
        out = dict(ex)
        out[k] = out.get(k, 0) + m
        if out[k] == 0:
            del out[k]
        return out

    def inconsistent_sides(self) -> list:
        """Sides along which the two end values disagree (empty when well defined)."""
        bad = []
        for a, nbrs in self.adj.items():
            if a not in self.exponents:
                continue
            for b, d in nbrs:
                if b not in self.exponents:
                    continue
                k = self.direction_index(d)
                if self._add(self.exponents[a], k, _exponent_step(self.embedding, a, b)) != self.exponents[b]:
                    bad.append((a, b))
        return bad

    def exponents_along(self, path) -> dict:
        """Exponents accumulated along an explicit node path from ("v", w0)."""
        if path[0] != ("v", self.w0):
            raise ValueError("paths start at the base vertex")
        ex: dict = {}
        for a, b in zip(path, path[1:]):
            d = dict(self.adj[a]).get(b)
            if d is None:
                raise ValueError(f"{a} and {b} are not adjacent in the rhombic graph")
            ex = self._add(ex, self.direction_index(d), _exponent_step(self.embedding, a, b))
        return ex

    def poles(self, v) -> list[tuple[complex, int]]:
        node = ("v", v) if isinstance(v, int) else v
        return [(self.directions[k], -m) for k, m in self.exponents[node].items() if m < 0]

    def value(self, v, z: complex):
        """f_v(z), or a Pole record when z is a pole of f_v."""
        node = ("v", v) if isinstance(v, int) else v
        out = complex(1)
        for k, m in self.exponents[node].items():
            d = z - self.directions[k]
            if abs(d) < self.tol:
                if m < 0:
                    return Pole(self.directions[k], -m)
                return 0j
            out *= d ** m
        return out


def discrete_exponential(emb: IsoradialEmbedding, w0: int) -> DiscreteExponential:
    return DiscreteExponential(emb, w0)


# ---------------------------------------------------------------------------
# Inverse Kasteleyn matrix by residues


def _binomial_series(D: complex, m: int, n: int) -> np.ndarray:
    """Coefficients of (D + t)^m up to t^(n-1)."""
    out = np.zeros(n, dtype=complex)
    c = D ** m
    for k in range(n):
        out[k] = c
        c = c * (m - k) / ((k + 1) * D)
    return out


def _log_residue(f: DiscreteExponential, ex: dict, k: int, theta: float) -> complex:
    """Residue at a = directions[k] of prod (z - a_j)^{m_j} * log z, with the
    branch log a = i theta. For a simple pole this is i theta Res f; for
    higher orders the derivatives of log z contribute as well."""
    r = -ex[k]
    series = np.zeros(r, dtype=complex)
    series[0] = 1
    a = f.directions[k]
    for j, m in ex.items():
        if j == k:
            continue
        s = _binomial_series(a - f.directions[j], m, r)
        series = np.convolve(series, s)[:r]
    # log(a + t) = i theta + sum_n (-1)^(n+1) (t / a)^n / n
    log_s = np.zeros(r, dtype=complex)
    log_s[0] = 1j * theta
    for n in range(1, r):
        log_s[n] = (-1) ** (n + 1) / (n * a ** n)
    return complex(np.convolve(series, log_s)[r - 1])


def pole_angles(f: DiscreteExponential, b: int) -> dict:
    """Lifted angles of the poles of f_b, in the window of width 2 pi centred
    on the direction of b - w0 (adjacent b: the two sides at w0)."""
    emb = f.embedding
    ex = f.exponents[("v", b)]
    theta0 = cmath.phase(emb.position(b) - emb.position(f.w0))
    out = {}
    for k, m in ex.items():
        if m >= 0:
            continue
        dphi = math.remainder(cmath.phase(f.directions[k]) - theta0, 2 * math.pi)
        if abs(abs(dphi) - math.pi) < 1e-9:
            raise IsoradialError(f"pole of f_{b} points away from b - w0; the angle lift is ambiguous")
        out[k] = theta0 + dphi
    return out


def inverse_contour(emb: IsoradialEmbedding, b: int, w0: int, f: DiscreteExponential | None = None) -> complex:
    """K^{-1}(b, w0) = (1 / 2 pi) sum over poles of Res(f_b(z) log z).

    For simple poles the summand is i theta Res f_b, i.e. the sum
    -(1 / 2 pi i) sum theta Res f_b.
    """
    if f is None or f.w0 != w0 or f.embedding is not emb:
        f = DiscreteExponential(emb, w0)
    if emb.graph.colors[b] != BLACK:
        raise IsoradialError("the first argument must be a black vertex")
    if ("v", b) not in f.exponents:
        raise IsoradialError("b and w0 lie in different components")
    ex = f.exponents[("v", b)]
    total = 0j
    for k, th in pole_angles(f, b).items():
        total += _log_residue(f, ex, k, th)
    return total / (2 * math.pi)


# ---------------------------------------------------------------------------
# Periodic embeddings


@dataclass(frozen=True)
class PeriodicEmbedding:
    """A doubly periodic isoradial graph given by one fundamental domain.

    ``edges`` holds (white index, black index, (s1, s2)): the white at
    ``whites[w]`` is joined to the black at ``blacks[b] + s1 omega1 + s2 omega2``.
    """

    whites: tuple
    blacks: tuple
    edges: tuple
    omega1: complex
    omega2: complex

    def edge_vector(self, k: int) -> complex:
        w, b, (s1, s2) = self.edges[k]
        return self.blacks[b] + s1 * self.omega1 + s2 * self.omega2 - self.whites[w]

    @property
    def thetas(self) -> np.ndarray:
        return np.array([math.acos(min(1.0, abs(self.edge_vector(k)) / 2)) for k in range(len(self.edges))])

    @property
    def n_sites(self) -> int:
        return len(self.whites) + len(self.blacks)

    def kasteleyn_values(self) -> np.ndarray:
        """i (p* - q*) = 2 sin theta (b - w) / |b - w| for each edge."""
        out = []
        for k, th in enumerate(self.thetas):
            d = self.edge_vector(k)
            out.append(2 * math.sin(th) * d / abs(d))
        return np.array(out)

    def patch(self, n: int) -> tuple[IsoradialEmbedding, dict]:
        """Finite n x n block of fundamental domains, and the map
        (kind, index, i, j) -> vertex of the patch (kind 'w' or 'b')."""
        pts, colors, idx = [], [], {}
        for i in range(n):
            for j in range(n):
                sh = i * self.omega1 + j * self.omega2
                for k, p in enumerate(self.whites):
                    idx[("w", k, i, j)] = len(pts)
                    pts.append(p + sh)
                    colors.append(WHITE)
                for k, p in enumerate(self.blacks):
                    idx[("b", k, i, j)] = len(pts)
                    pts.append(p + sh)
                    colors.append(BLACK)
        pairs = []
        for i in range(n):
            for j in range(n):
                for w, b, (s1, s2) in self.edges:
                    key = ("b", b, i + s1, j + s2)
                    if key in idx:
                        pairs.append((idx[("w", w, i, j)], idx[key]))
        return embedding_from_points(pts, pairs, colors), idx

    def validate(self, n: int = 3) -> IsoradialReport:
        """Validation of a 3 x 3 block (interior vertices see full stars)."""
        emb, _ = self.patch(n)
        return validate_isoradial(emb)


def periodic_square() -> PeriodicEmbedding:
    r = math.sqrt(2)
    return PeriodicEmbedding((0j,), (complex(r, 0),),
                             ((0, 0, (0, 0)), (0, 0, (-1, -1)), (0, 0, (0, -1)), (0, 0, (-1, 0))),
                             complex(r, r), complex(r, -r))


def periodic_honeycomb() -> PeriodicEmbedding:
    return PeriodicEmbedding((0j,), (1 + 0j,), ((0, 0, (0, 0)), (0, 0, (1, 0)), (0, 0, (0, 1))),
                             HEX_W1, HEX_W2)


def periodic_grid(alphas, betas) -> PeriodicEmbedding:
    """Periodic version of ``grid_embedding``: the two track families repeat
    with periods len(alphas) and len(betas), both even."""
    K, L = len(alphas), len(betas)
    if K % 2 or L % 2 or K == 0 or L == 0:
        raise IsoradialError("track periods must be even and positive")
    ea = np.exp(1j * np.asarray(alphas, float))
    eb = np.exp(1j * np.asarray(betas, float))
    A = np.concatenate([[0], np.cumsum(ea)])
    B = np.concatenate([[0], np.cumsum(eb)])
    om1, om2 = complex(A[K]), complex(B[L])
    whites, blacks, widx, bidx = [], [], {}, {}
    for k in range(K):
        for l in range(L):
            if (k + l) % 2 == 0:
                p = complex(A[k] + B[l])
                if k % 2 == 0:
                    widx[(k, l)] = len(whites)
                    whites.append(p)
                else:
                    bidx[(k, l)] = len(blacks)
                    blacks.append(p)

    def locate(k, l):
        s1, k0 = divmod(k, K)
        s2, l0 = divmod(l, L)
        return (k0, l0), (s1, s2)

    edges = []
    for k in range(K):
        for l in range(L):
            if (k + l) % 2 == 0:
                p, q = (k, l), (k + 1, l + 1)
            else:
                p, q = (k + 1, l), (k, l + 1)
            (pk, ps), (qk, qs) = locate(*p), locate(*q)
            if pk in widx:
                w, wsh, bb, bsh = widx[pk], ps, bidx[qk], qs
            else:
                w, wsh, bb, bsh = widx[qk], qs, bidx[pk], ps
            edges.append((w, bb, (bsh[0] - wsh[0], bsh[1] - wsh[1])))
    return PeriodicEmbedding(tuple(whites), tuple(blacks), tuple(edges), om1, om2)


def _lob(x: float) -> float:
    from .entropy import lobachevsky

    return lobachevsky(x)


def logZ_per_site(p: PeriodicEmbedding) -> float:
    """(1 / N) sum over the edges of a fundamental domain of
    L(theta) / pi + (theta / pi) log(2 sin theta), N vertices per domain."""
    if not isinstance(p, PeriodicEmbedding):
        raise IsoradialError("logZ_per_site needs a periodic embedding")
    total = 0.0
    for th in p.thetas:
        total += _lob(th) / math.pi + (th / math.pi) * math.log(2 * math.sin(th))
    return total / p.n_sites


def torus_quotient_matrix(p: PeriodicEmbedding, n: int, sigma: int = 0, tau: int = 0) -> np.ndarray:
    """White-by-black isoradial K on the n x n quotient, edges crossing the
    first (second) seam multiplied by (-1)^sigma ((-1)^tau)."""
    nw, nb = len(p.whites), len(p.blacks)
    vals = p.kasteleyn_values()
    K = np.zeros((nw * n * n, nb * n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k, (w, b, (s1, s2)) in enumerate(p.edges):
                bi, bj = i + s1, j + s2
                sgn = (-1) ** (sigma * (bi // n != 0) + tau * (bj // n != 0))
                r = (i * n + j) * nw + w
                c = ((bi % n) * n + (bj % n)) * nb + b
                K[r, c] += sgn * vals[k]
    return K


def det1_torus(p: PeriodicEmbedding, n: int) -> float:
    """log |det K|^(1/|G|) on the n x n quotient, maximized over the four
    seam twists (some twists are singular on small tori). K is the
    white-by-black block and |G| counts all vertices of the quotient."""
    best = -math.inf
    for s, t in ((0, 0), (0, 1), (1, 0), (1, 1)):
        # Householder QR: LU with partial pivoting shows huge pivot growth on
        # these banded periodic matrices and returns meaningless determinants.
        r = np.abs(np.diag(np.linalg.qr(torus_quotient_matrix(p, n, s, t), mode="r")))
        if np.all(r > 1e-12 * r.max()):
            best = max(best, float(np.sum(np.log(r))))
    return best / (p.n_sites * n * n)


@dataclass(frozen=True)
class VolumeReport:
    """Per fundamental domain: sum L(theta), sum (theta / pi) log 2 sin theta,
    the edge probabilities used, and the residual of
    Vol / pi = log Z - sum Pr(e) log nu(e) with nu = 2 sin theta."""

    volume: float
    mean_curvature_term: float
    probabilities: tuple
    residual: float


def periodic_edge_probabilities(p: PeriodicEmbedding) -> tuple:
    """Pr(e) = |K(w, b) K^{-1}(b, w)| for the edges of the central domain of
    a 3 x 3 block, with K^{-1} from the residue formula."""
    emb, idx = p.patch(3)
    K = isoradial_kasteleyn(emb, check=False)
    lookup = {pair: e for e, pair in enumerate(emb.graph.edges)}
    out = []
    cache: dict = {}
    for w, b, (s1, s2) in p.edges:
        wv, bv = idx[("w", w, 1, 1)], idx[("b", b, 1 + s1, 1 + s2)]
        if wv not in cache:
            cache[wv] = DiscreteExponential(emb, wv)
        e = lookup[(wv, bv)]
        out.append(abs(K.edge_values[e] * inverse_contour(emb, bv, wv, cache[wv])))
    return tuple(out)


def hyperbolic_volume(p: PeriodicEmbedding) -> VolumeReport:
    th = p.thetas
    vol = float(sum(_lob(t) for t in th))
    curv = float(sum((t / math.pi) * math.log(2 * math.sin(t)) for t in th))
    probs = periodic_edge_probabilities(p)
    logz = p.n_sites * logZ_per_site(p)
    resid = vol / math.pi - (logz - sum(pr * math.log(2 * math.sin(t)) for pr, t in zip(probs, th)))
    return VolumeReport(vol, curv, probs, float(resid))


# ---------------------------------------------------------------------------
# Serialization


def embedding_to_json(emb: IsoradialEmbedding) -> str:
    """Graph JSON plus per-edge theta, pstar and qstar."""
    doc = json.loads(graph_to_json(emb.graph))
    doc["schema"] = "dimerlab.isoradial/1"
    for rec in doc["edges"]:
        e = rec["id"]
        p, q = emb.pstar[e], emb.qstar[e]
        rec["theta"] = emb.theta[e]
        rec["pstar"] = None if p is None else [p.real, p.imag]
        rec["qstar"] = None if q is None else [q.real, q.imag]
    return json.dumps(doc, sort_keys=True)


def embedding_from_json(text: str) -> IsoradialEmbedding:
    """Inverse of ``embedding_to_json``; the rhombus data is recomputed from
    the positions and must agree with any values stored in the file."""
    g = graph_from_json(text)
    emb = IsoradialEmbedding(g)
    for rec in json.loads(text)["edges"]:
        e = rec["id"]
        for key, val in (("pstar", emb.pstar[e]), ("qstar", emb.qstar[e])):
            if rec.get(key) is not None and val is not None and abs(complex(*rec[key]) - val) > TOL:
                raise IsoradialError(f"edge {e}: stored {key} disagrees with the vertex positions")
    return emb
