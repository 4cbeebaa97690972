"""Embedded planar graphs, lattice regions and the graph constructors.

Conventions
-----------
* A lattice region is a set of unit cells ``(i, j)``, the cell being the square
  ``[i, i+1] x [j, j+1]``. Its dual graph has one vertex per cell, positioned at
  the integer cell index (the cell center is the index plus one half).
* Cells with ``i + j`` even are black (so (even, even) cells are black),
  the others white.
* Vertices are ordered row-major, i.e. lexicographically by ``(y, x)``.
* Edges of bipartite graphs are stored ``(white, black)``.
* Darts: edge ``e`` has darts ``2e`` (tail -> head as stored) and ``2e + 1``
  (reversed). ``rotation[v]`` lists the darts leaving ``v`` counterclockwise.
  Faces are dart cycles with the face on the left; ``faces[0]`` is the outer
  face.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

WHITE, BLACK = 0, 1


class GraphError(ValueError):
    """Invalid construction arguments or inconsistent embedding data."""


def cell_color(i: int, j: int) -> int:
    return BLACK if (i + j) % 2 == 0 else WHITE


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Region:
    """A finite set of unit lattice cells."""

    cells: frozenset

    def __post_init__(self):
        object.__setattr__(self, "cells", frozenset((int(i), int(j)) for i, j in self.cells))

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(sorted(self.cells, key=lambda c: (c[1], c[0])))

    def color(self, cell) -> int:
        return cell_color(*cell)

    def color_counts(self) -> tuple[int, int]:
        b = sum(1 for c in self.cells if cell_color(*c) == BLACK)
        return len(self.cells) - b, b

    def is_balanced(self) -> bool:
        w, b = self.color_counts()
        return w == b

    def is_connected(self) -> bool:
        if not self.cells:
            return False
        start = next(iter(self.cells))
        seen = {start}
        todo = [start]
        while todo:
            i, j = todo.pop()
            for n in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if n in self.cells and n not in seen:
                    seen.add(n)
                    todo.append(n)
        return len(seen) == len(self.cells)

    def is_simply_connected(self) -> bool:
        """Connected, without holes or diagonal pinch points."""
        if not self.is_connected():
            return False
        xs = [c[0] for c in self.cells]
        ys = [c[1] for c in self.cells]
        x0, x1, y0, y1 = min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1
        # Holes: empty cells not 4-connected to the frame. 4-connectivity of the
        # complement is the right notion because cells sharing only a corner do
        # not separate the plane.
        seen = {(x0, y0)}
        todo = [(x0, y0)]
        while todo:
            i, j = todo.pop()
            for n in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if x0 <= n[0] <= x1 and y0 <= n[1] <= y1 and n not in self.cells and n not in seen:
                    seen.add(n)
                    todo.append(n)
        empty = (x1 - x0 + 1) * (y1 - y0 + 1) - len(self.cells)
        if len(seen) != empty:
            return False
        # A pinch point (two cells touching diagonally with both other cells of the
        # 2x2 block empty) makes the boundary non-simple.
        for i, j in self.cells:
            for di, dj in ((1, 1), (1, -1)):
                if (i + di, j + dj) in self.cells and (i + di, j) not in self.cells and (i, j + dj) not in self.cells:
                    return False
        return True

    def corners(self) -> set:
        out = set()
        for i, j in self.cells:
            out.update(((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)))
        return out

    @classmethod
    def rectangle(cls, m: int, n: int) -> "Region":
        return cls(frozenset((i, j) for i in range(m) for j in range(n)))

    @classmethod
    def aztec(cls, n: int) -> "Region":
        cells = set()
        for x in range(-n, n):
            for y in range(-n, n):
                if abs(x + 0.5) + abs(y + 0.5) <= n:
                    cells.add((x, y))
        return cls(frozenset(cells))


# ---------------------------------------------------------------------------
# Embedded planar graphs


@dataclass(frozen=True, eq=False)
class PlanarGraph:
    """A connected graph with a rotation system (a combinatorial planar map).

    ``positions`` may be exact integers (lattice graphs), floats (isoradial
    embeddings) or None (purely combinatorial maps such as duals with
    parallel edges). ``colors`` is None for non-bipartite graphs.
    """

    n_vertices: int
    edges: tuple
    weights: tuple
    rotation: tuple
    positions: tuple | None = None
    colors: tuple | None = None
    faces: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.faces:
            object.__setattr__(self, "faces", _trace_faces(self))

    # -- darts -----------------------------------------------------------
    def tail(self, d: int) -> int:
        u, v = self.edges[d >> 1]
        return v if d & 1 else u

    def head(self, d: int) -> int:
        u, v = self.edges[d >> 1]
        return u if d & 1 else v

    def face_vertices(self, f: int) -> list[int]:
        return [self.tail(d) for d in self.faces[f]]

    def face_of_dart(self) -> list[int]:
        out = [0] * (2 * len(self.edges))
        for f, cyc in enumerate(self.faces):
            for d in cyc:
                out[d] = f
        return out

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    def neighbors(self, v: int) -> list[int]:
        return [self.head(d) for d in self.rotation[v]]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    # -- bipartite views -------------------------------------------------
    @property
    def is_bipartite(self) -> bool:
        return self.colors is not None

    def whites(self) -> list[int]:
        return [v for v in range(self.n_vertices) if self.colors[v] == WHITE]

    def blacks(self) -> list[int]:
        return [v for v in range(self.n_vertices) if self.colors[v] == BLACK]

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def validate(self) -> list[str]:
        """Embedding checks; returns a list of problems (empty when valid)."""
        problems = []
        if self.euler_characteristic() != 2:
            problems.append(f"Euler V-E+F = {self.euler_characteristic()} != 2")
        seen = [0] * (2 * self.n_edges)
        for cyc in self.faces:
            for d in cyc:
                seen[d] += 1
        if any(s != 1 for s in seen):
            problems.append("some dart is not on exactly one face")
        for e, w in enumerate(self.weights):
            if not w > 0:
                problems.append(f"edge {e} has non-positive weight {w}")
        if self.colors is not None:
            for e, (u, v) in enumerate(self.edges):
                if self.colors[u] != WHITE or self.colors[v] != BLACK:
                    problems.append(f"edge {e} is not stored white->black")
        if self.positions is not None and self.n_faces > 1:
            areas = [self.face_area(f) for f in range(self.n_faces)]
            if not areas[0] < 0 or any(a <= 0 for a in areas[1:]):
                problems.append("outer face is not face 0 or an inner face is not ccw")
        return problems

    def face_area(self, f: int):
        """Signed area of a face polygon (positive for counterclockwise)."""
        pts = [self.positions[v] for v in self.face_vertices(f)]
        a = 0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
            a += x0 * y1 - x1 * y0
        return Fraction(a, 2) if isinstance(a, int) else a / 2

    def with_weights(self, weights: Sequence) -> "PlanarGraph":
        if len(weights) != self.n_edges:
            raise GraphError("weight list length must equal the number of edges")
        return PlanarGraph(self.n_vertices, self.edges, tuple(weights), self.rotation,
                           self.positions, self.colors, self.faces)

    def edge_index(self) -> dict:
        """Map (u, v) vertex pair -> list of edge ids (either orientation)."""
        out: dict = {}
        for e, (u, v) in enumerate(self.edges):
            out.setdefault((u, v), []).append(e)
            out.setdefault((v, u), []).append(e)
        return out

    def to_networkx(self):
        import networkx as nx

        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n_vertices))
        for e, (u, v) in enumerate(self.edges):
            g.add_edge(u, v, key=e, weight=self.weights[e])
        return g


def _trace_faces(g: PlanarGraph) -> tuple:
    nd = 2 * len(g.edges)
    pos_in_rot = {}
    for v, rot in enumerate(g.rotation):
        for k, d in enumerate(rot):
            pos_in_rot[d] = (v, k)
    if len(pos_in_rot) != nd:
        raise GraphError("rotation system does not list every dart exactly once")
    used = [False] * nd
    faces = []
    for start in range(nd):
        if used[start]:
            continue
        cyc = []
        d = start
        while not used[d]:
            used[d] = True
            cyc.append(d)
            rev = d ^ 1
            v, k = pos_in_rot[rev]
            rot = g.rotation[v]
            d = rot[(k - 1) % len(rot)]
        faces.append(tuple(cyc))
    if g.positions is not None and len(faces) > 1:
        def area(cyc):
            pts = [g.positions[g.tail(d)] for d in cyc]
            return sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]))

        areas = [area(c) for c in faces]
        outer = min(range(len(faces)), key=lambda f: areas[f])
        faces.insert(0, faces.pop(outer))
    return tuple(faces)


def rotation_from_positions(n: int, edges: Sequence, positions: Sequence) -> tuple:
    """Counterclockwise dart order around each vertex of a straight-line drawing."""
    out = [[] for _ in range(n)]
    for e, (u, v) in enumerate(edges):
        out[u].append(2 * e)
        out[v].append(2 * e + 1)

    def angle(d):
        u, v = edges[d >> 1]
        a, b = (v, u) if d & 1 else (u, v)
        (x0, y0), (x1, y1) = positions[a], positions[b]
        return math.atan2(float(y1 - y0), float(x1 - x0))

    return tuple(tuple(sorted(ds, key=angle)) for ds in out)


def graph_from_positions(positions: Sequence, edges: Sequence, weights=None, colors=None) -> PlanarGraph:
    """Build a planar map from a straight-line drawing."""
    positions = tuple(tuple(p) for p in positions)
    edges = tuple((int(u), int(v)) for u, v in edges)
    if weights is None:
        weights = (1,) * len(edges)
    rot = rotation_from_positions(len(positions), edges, positions)
    return PlanarGraph(len(positions), edges, tuple(weights), rot, positions,
                       None if colors is None else tuple(colors))


def bipartite_from_positions(positions: Sequence, colors: Sequence, pairs: Sequence, weights=None) -> PlanarGraph:
    """Like graph_from_positions, re-orienting every edge white -> black."""
    edges = []
    for u, v in pairs:
        if colors[u] == colors[v]:
            raise GraphError(f"edge ({u},{v}) joins two vertices of the same color")
        edges.append((u, v) if colors[u] == WHITE else (v, u))
    return graph_from_positions(positions, edges, weights, colors)


# ---------------------------------------------------------------------------
# Lattice-region graphs


def region_graph(region: Region, weights=None) -> PlanarGraph:
    """Dual graph of a lattice region: one vertex per cell, edges between cells
    sharing a side. ``weights`` may map frozenset({cell, cell}) -> weight."""
    cells = sorted(region.cells, key=lambda c: (c[1], c[0]))
    if not cells:
        raise GraphError("empty region")
    index = {c: k for k, c in enumerate(cells)}
    colors = [cell_color(*c) for c in cells]
    edges, ws = [], []
    for c in cells:
        i, j = c
        for n in ((i + 1, j), (i, j + 1)):
            if n in index:
                u, v = index[c], index[n]
                if colors[u] == BLACK:
                    u, v = v, u
                edges.append((u, v))
                ws.append(1 if weights is None else weights.get(frozenset((c, n)), 1))
    return graph_from_positions(cells, edges, ws, colors)


def build_rectangle(m: int, n: int) -> PlanarGraph:
    """Grid graph {1..m} x {1..n} (m columns, n rows), unit weights."""
    if not (isinstance(m, int) and isinstance(n, int)) or m < 1 or n < 1:
        raise GraphError(f"rectangle dimensions must be positive integers, got {m}x{n}")
    cells = frozenset((i, j) for i in range(1, m + 1) for j in range(1, n + 1))
    return region_graph(Region(cells))


def build_aztec(n: int) -> PlanarGraph:
    """Dual graph of the order-n Aztec diamond (2n(n+1) cells)."""
    if not isinstance(n, int) or n < 1:
        raise GraphError(f"Aztec order must be a positive integer, got {n}")
    return region_graph(Region.aztec(n))


def is_horizontal(g: PlanarGraph, e: int) -> bool:
    u, v = g.edges[e]
    return g.positions[u][1] == g.positions[v][1]


# ---------------------------------------------------------------------------
# Temperley construction


def grid_cells(M: int, N: int) -> Region:
    """The M x N vertex grid graph as a region of (M-1) x (N-1) coarse cells."""
    if M < 2 or N < 2:
        raise GraphError("a grid graph needs at least 2x2 vertices")
    return Region.rectangle(M - 1, N - 1)


def coarse_graph(region: Region) -> tuple[list, list]:
    """Vertices and edges of the grid graph U_2eps made of the region's cells."""
    verts = sorted(region.corners(), key=lambda c: (c[1], c[0]))
    edges = set()
    for i, j in region.cells:
        edges.update((((i, j), (i + 1, j)), ((i, j + 1), (i + 1, j + 1)),
                      ((i, j), (i, j + 1)), ((i + 1, j), (i + 1, j + 1))))
    return verts, sorted(edges, key=lambda e: (e[0][1], e[0][0], e[1][1], e[1][0]))


def boundary_corners(region: Region) -> set:
    """Corners lying on the boundary of the region (touching an outside cell)."""
    out = set()
    for x, y in region.corners():
        around = ((x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1))
        if any(c not in region.cells for c in around):
            out.add((x, y))
    return out


def temperley_region(region: Region, removed_black=None) -> tuple[Region, tuple]:
    """Fine-lattice region of the superposition graph U_eps.

    Coarse vertex (X, Y) -> fine cell (2X, 2Y) (black), coarse face (X, Y) ->
    fine cell (2X+1, 2Y+1) (black), coarse edges -> their midpoints (white).
    Returns the fine region and the removed fine cell.
    """
    if not region.is_connected():
        raise GraphError("Temperley construction needs a connected region")
    verts, edges = coarse_graph(region)
    # V - E + F = 1 exactly when the region has no holes and no pinch points,
    # which is what makes |B| = |W| after one outer black vertex is removed
    V, E, F = len(verts), len(edges), len(region.cells)
    if V - E + F != 1:
        raise GraphError(f"Euler check V-E+F = {V - E + F} != 1: region is not simply connected")
    bnd = boundary_corners(region)
    if removed_black is None:
        removed_black = min(bnd, key=lambda c: (c[1], c[0]))
    removed_black = tuple(removed_black)
    if removed_black not in bnd:
        raise GraphError(f"removed vertex {removed_black} is not on the outer face")
    fine = set()
    for X, Y in verts:
        fine.add((2 * X, 2 * Y))
    for X, Y in region.cells:
        fine.add((2 * X + 1, 2 * Y + 1))
    for (a, b) in edges:
        fine.add((a[0] + b[0], a[1] + b[1]))
    fine.discard((2 * removed_black[0], 2 * removed_black[1]))
    return Region(frozenset(fine)), (2 * removed_black[0], 2 * removed_black[1])


def build_temperley(grid_region: Region, removed_black=None) -> PlanarGraph:
    """Superposition graph of a grid graph and its dual, minus one outer black vertex."""
    fine, _ = temperley_region(grid_region, removed_black)
    g = region_graph(fine)
    if len(g.whites()) != len(g.blacks()):
        raise GraphError("Temperley graph is unbalanced")
    return g


# ---------------------------------------------------------------------------
# Torus graphs


@dataclass(frozen=True)
class TorusGraph:
    """The m x n square-lattice torus with staggered weights.

    Vertex (x, y) has index ``y*m + x``; it is black when x + y is even.
    From a white vertex, the edge to the East carries weight ``a``, South ``b``,
    North ``c`` and West ``d``. With this labelling the characteristic factor of
    the one-white/one-black fundamental domain is a + i b z + i c w + d z w.
    """

    m: int
    n: int
    a: object = 1
    b: object = 1
    c: object = 1
    d: object = 1

    def __post_init__(self):
        if self.m < 2 or self.n < 2 or self.m % 2 or self.n % 2:
            raise GraphError(f"torus dimensions must be even and >= 2, got {self.m}x{self.n}")
        for w in (self.a, self.b, self.c, self.d):
            if not w > 0:
                raise GraphError("torus weights must be positive")

    @property
    def n_vertices(self) -> int:
        return self.m * self.n

    def vertex(self, x: int, y: int) -> int:
        return (y % self.n) * self.m + (x % self.m)

    def color(self, v: int) -> int:
        x, y = v % self.m, v // self.m
        return cell_color(x, y)

    def whites(self) -> list[int]:
        return [v for v in range(self.n_vertices) if self.color(v) == WHITE]

    def blacks(self) -> list[int]:
        return [v for v in range(self.n_vertices) if self.color(v) == BLACK]

    def edge_list(self) -> list[tuple]:
        """Edges as (white, black, direction, seam_x, seam_y).

        ``direction`` is one of 'E','S','N','W' seen from the white vertex;
        seam_x / seam_y flag edges crossing the x = m-1|0 or y = n-1|0 seam.
        Parallel edges on 2-wide tori appear as separate entries.
        """
        out = []
        for v in self.whites():
            x, y = v % self.m, v // self.m
            for dname, (dx, dy) in (("E", (1, 0)), ("S", (0, -1)), ("N", (0, 1)), ("W", (-1, 0))):
                bx, by = x + dx, y + dy
                out.append((v, self.vertex(bx, by), dname, not 0 <= bx < self.m, not 0 <= by < self.n))
        return out

    def weight(self, direction: str):
        return {"E": self.a, "S": self.b, "N": self.c, "W": self.d}[direction]

    @property
    def homology_basis(self) -> tuple:
        """Horizontal and vertical generating cycles as corner-path directions."""
        return ((1, 0), (0, 1))


def build_torus(m: int, n: int, a=1, b=1, c=1, d=1) -> TorusGraph:
    return TorusGraph(m, n, a, b, c, d)


# ---------------------------------------------------------------------------
# Duality


def planar_dual(g: PlanarGraph) -> PlanarGraph:
    """One vertex per face, one edge per primal edge.

    Dual edge e* joins the face left of dart 2e to the face left of dart 2e+1;
    the rotation at a dual vertex follows its face boundary.
    """
    if g.euler_characteristic() != 2:
        raise GraphError("inconsistent face data: Euler characteristic != 2")
    fod = g.face_of_dart()
    edges = tuple((fod[2 * e], fod[2 * e + 1]) for e in range(g.n_edges))
    rotation = tuple(tuple(cyc) for cyc in g.faces)
    # Face centroids do not give a straight-line dual in general, so the dual
    # is returned as a combinatorial map.
    return PlanarGraph(g.n_faces, edges, tuple(g.weights), rotation, None, None)


# ---------------------------------------------------------------------------
# Matchings


@dataclass(frozen=True, eq=False)
class Matching:
    """A perfect matching as a set of edge ids of ``graph``."""

    graph: object
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        problems = validate_matching(self.graph, self.edges)
        if problems:
            raise GraphError("; ".join(problems))

    def __eq__(self, other):
        return isinstance(other, Matching) and self.graph is other.graph and self.edges == other.edges

    def __hash__(self):
        return hash(self.edges)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.graph.edges[e] for e in self.edges)

    def partner(self) -> dict:
        out = {}
        for e in self.edges:
            u, v = self.graph.edges[e]
            out[u], out[v] = v, u
        return out

    def weight(self):
        w = 1
        for e in self.edges:
            w = w * self.graph.weights[e]
        return w


def validate_matching(g, edge_ids: Iterable[int]) -> list[str]:
    covered = [0] * g.n_vertices
    for e in edge_ids:
        u, v = g.edges[e]
        covered[u] += 1
        covered[v] += 1
    bad = [v for v, c in enumerate(covered) if c != 1]
    return [f"vertices covered {covered[v]} times: {v}" for v in bad[:5]]


def enumerate_matchings(n_vertices: int, edges: Sequence[tuple[int, int]]) -> Iterator[tuple[int, ...]]:
    """All perfect matchings by exhaustive search, as tuples of edge ids.

    Always extends the lowest-numbered uncovered vertex, so each matching is
    produced exactly once. Parallel edges give distinct matchings.
    """
    incident = [[] for _ in range(n_vertices)]
    for e, (u, v) in enumerate(edges):
        if u == v:
            continue
        incident[u].append((e, v))
        incident[v].append((e, u))
    covered = [False] * n_vertices
    chosen: list[int] = []

    def rec(start):
        v = start
        while v < n_vertices and covered[v]:
            v += 1
        if v == n_vertices:
            yield tuple(chosen)
            return
        covered[v] = True
        for e, u in incident[v]:
            if not covered[u]:
                covered[u] = True
                chosen.append(e)
                yield from rec(v + 1)
                chosen.pop()
                covered[u] = False
        covered[v] = False

    yield from rec(0)


def brute_force_matchings(g: PlanarGraph) -> list[Matching]:
    return [Matching(g, m) for m in enumerate_matchings(g.n_vertices, g.edges)]


def brute_force_partition(g, weights=None):
    """Sum over perfect matchings of the product of edge weights (exact if weights are)."""
    ws = g.weights if weights is None else weights
    total = 0
    for m in enumerate_matchings(g.n_vertices, g.edges):
        w = 1
        for e in m:
            w = w * ws[e]
        total = total + w
    return total


# ---------------------------------------------------------------------------
# Serialization


def graph_to_json(g: PlanarGraph) -> str:
    """JSON graph schema: {vertices:[{id,color,x,y}], edges:[{id,w,b,weight}], faces:[[ids]]}.

    Edge endpoints are named w/b for bipartite graphs (u/v otherwise). Exact
    rational weights and coordinates are written as "p/q" strings.
    """

    def num(x):
        if isinstance(x, Fraction) and x.denominator != 1:
            return f"{x.numerator}/{x.denominator}"
        if isinstance(x, Fraction):
            return x.numerator
        return x

    verts = []
    for v in range(g.n_vertices):
        rec = {"id": v}
        if g.colors is not None:
            rec["color"] = "white" if g.colors[v] == WHITE else "black"
        if g.positions is not None:
            rec["x"], rec["y"] = num(g.positions[v][0]), num(g.positions[v][1])
        verts.append(rec)
    key = ("w", "b") if g.colors is not None else ("u", "v")
    edges = [{"id": e, key[0]: u, key[1]: v, "weight": num(g.weights[e])} for e, (u, v) in enumerate(g.edges)]
    doc = {
        "schema": "dimerlab.graph/1",
        "vertices": verts,
        "edges": edges,
        "faces": [g.face_vertices(f) for f in range(g.n_faces)],
        "rotation": [list(r) for r in g.rotation],
    }
    return json.dumps(doc, sort_keys=True)


def _parse_num(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def graph_from_json(text: str) -> PlanarGraph:
    doc = json.loads(text)
    verts = sorted(doc["vertices"], key=lambda r: r["id"])
    n = len(verts)
    if [r["id"] for r in verts] != list(range(n)):
        raise GraphError("vertex ids must be 0..n-1")
    colors = None
    if verts and "color" in verts[0]:
        colors = tuple(WHITE if r["color"] == "white" else BLACK for r in verts)
    positions = None
    if verts and "x" in verts[0]:
        positions = tuple((_parse_num(r["x"]), _parse_num(r["y"])) for r in verts)
    erecs = sorted(doc["edges"], key=lambda r: r["id"])
    k0, k1 = ("w", "b") if erecs and "w" in erecs[0] else ("u", "v")
    edges = tuple((r[k0], r[k1]) for r in erecs)
    weights = tuple(_parse_num(r.get("weight", 1)) for r in erecs)
    if "rotation" in doc:
        rot = tuple(tuple(r) for r in doc["rotation"])
    elif positions is not None:
        rot = rotation_from_positions(n, edges, positions)
    else:
        raise GraphError("graph JSON needs either positions or a rotation system")
    g = PlanarGraph(n, edges, weights, rot, positions, colors)
    if "faces" in doc and len(doc["faces"]) != g.n_faces:
        raise GraphError("face list inconsistent with the rotation system")
    return g


def graphs_isomorphic(g: PlanarGraph, h: PlanarGraph) -> bool:
    import networkx as nx

    return nx.is_isomorphic(g.to_networkx(), h.to_networkx())


def bfs_order(g: PlanarGraph, root: int = 0) -> list[int]:
    seen = [False] * g.n_vertices
    seen[root] = True
    order, q = [], deque([root])
    while q:
        v = q.popleft()
        order.append(v)
        for u in g.neighbors(v):
            if not seen[u]:
                seen[u] = True
                q.append(u)
    return order
