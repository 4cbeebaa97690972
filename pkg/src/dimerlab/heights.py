"""Height functions of domino tilings.

Corners of the lattice carry heights. Walking along a lattice edge v -> w,
h(w) - h(v) is +1 when the cell on the left is black and -1 when it is
white, unless a domino crosses the edge, in which case it is -3 (left cell
black) or +3 (left cell white). Black cells are those with i + j even.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import BLACK, GraphError, Matching, TorusGraph, cell_color, region_graph, Region


@dataclass(frozen=True)
class HeightField:
    """Integer heights on lattice corners, with h(base) = 0.

    On a torus, ``heights`` holds the corners of one fundamental domain
    (a spanning-tree lift) and ``periods`` the changes (h_x, h_y) along the
    horizontal and vertical generating cycles.
    """

    heights: dict
    base: tuple
    periods: tuple | None = None

    def __getitem__(self, corner):
        return self.heights[tuple(corner)]

    def corners(self) -> list:
        return sorted(self.heights, key=lambda c: (c[1], c[0]))

    def to_csv(self) -> str:
        lines = ["x,y,h"]
        for x, y in self.corners():
            lines.append(f"{x},{y},{self.heights[(x, y)]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "HeightField":
        rows = text.strip().splitlines()
        if rows[0].strip() != "x,y,h":
            raise ValueError("height CSV must start with header x,y,h")
        h = {}
        for r in rows[1:]:
            x, y, v = (int(t) for t in r.split(","))
            h[(x, y)] = v
        base = min(h, key=lambda c: (c[1], c[0]))
        return cls(h, base)


def _edge_step(dx: int, dy: int, x: int, y: int):
    """Left cell and the two cells separated by the edge (x,y)->(x+dx,y+dy)."""
    if (dx, dy) == (1, 0):
        return (x, y), ((x, y), (x, y - 1))
    if (dx, dy) == (-1, 0):
        return (x - 1, y - 1), ((x - 1, y), (x - 1, y - 1))
    if (dx, dy) == (0, 1):
        return (x - 1, y), ((x - 1, y), (x, y))
    if (dx, dy) == (0, -1):
        return (x, y - 1), ((x - 1, y - 1), (x, y - 1))
    raise ValueError("not a unit step")


STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def one_form(left_cell, crossed: bool) -> int:
    black = cell_color(*left_cell) == BLACK
    if crossed:
        return -3 if black else 3
    return 1 if black else -1


def cell_pairs(m: Matching) -> set:
    """The dominoes of a matching as frozensets of two cells."""
    g = m.graph
    return {frozenset((tuple(g.positions[u]), tuple(g.positions[v]))) for u, v in m.pairs()}


def height_function(m: Matching, base=None) -> HeightField:
    """Height field of a matching of a lattice-region graph."""
    g = m.graph
    if isinstance(g, TorusGraph):
        raise GraphError("use torus_height_function for torus matchings")
    cells = {tuple(p) for p in g.positions}
    dominoes = cell_pairs(m)
    corners = set()
    for i, j in cells:
        corners.update(((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)))
    if base is None:
        base = min(corners, key=lambda c: (c[1], c[0]))
    h = {base: 0}
    todo = deque([base])
    while todo:
        x, y = todo.popleft()
        for dx, dy in STEPS:
            left, (c1, c2) = _edge_step(dx, dy, x, y)
            if c1 not in cells and c2 not in cells:
                continue
            w = (x + dx, y + dy)
            crossed = frozenset((c1, c2)) in dominoes
            val = h[(x, y)] + one_form(left, crossed)
            if w in h:
                if h[w] != val:
                    raise GraphError(f"height one-form not closed at corner {w}")
                continue
            h[w] = val
            todo.append(w)
    return HeightField(h, base)


def face_sums(hf: HeightField, cells) -> list[int]:
    """Sum of height differences around each cell (all zero for a valid field)."""
    out = []
    for i, j in cells:
        cyc = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
        out.append(sum(hf[cyc[(k + 1) % 4]] - hf[cyc[k]] for k in range(4)))
    return out


def matching_from_heights(hf: HeightField, g) -> Matching:
    """Inverse of height_function: edges with a height jump of 3 are crossed."""
    index = {tuple(p): v for v, p in enumerate(g.positions)}
    eidx = g.edge_index()
    chosen = set()
    for (x, y), hv in hf.heights.items():
        for dx, dy in ((1, 0), (0, 1)):
            w = (x + dx, y + dy)
            if w in hf.heights and abs(hf.heights[w] - hv) == 3:
                _, (c1, c2) = _edge_step(dx, dy, x, y)
                if c1 in index and c2 in index:
                    chosen.add(eidx[(index[c1], index[c2])][0])
    return Matching(g, frozenset(chosen))


def lipschitz_violations(hf: HeightField) -> int:
    """Number of corner pairs with even coordinate differences violating
    |h1 - h2| <= 2 max(|dx|, |dy|)."""
    pts = np.array(list(hf.heights.keys()))
    hv = np.array([hf.heights[tuple(p)] for p in pts])
    bad = 0
    for px in (0, 1):
        for py in (0, 1):
            sel = (pts[:, 0] % 2 == px) & (pts[:, 1] % 2 == py)
            p, v = pts[sel], hv[sel]
            if len(p) < 2:
                continue
            d = np.maximum(np.abs(p[:, None, 0] - p[None, :, 0]), np.abs(p[:, None, 1] - p[None, :, 1]))
            bad += int(np.sum(np.abs(v[:, None] - v[None, :]) > 2 * d)) // 2
    return bad


# ---------------------------------------------------------------------------
# Boundary heights


def boundary_heights(region: Region) -> HeightField:
    """Heights on the boundary corners; they do not depend on the tiling."""
    g = region_graph(region)
    from .graphs import enumerate_matchings, boundary_corners

    # Any tiling gives the same boundary values: use one found by search.
    first = next(iter(enumerate_matchings(g.n_vertices, g.edges)), None)
    if first is None:
        raise GraphError("region has no tiling")
    hf = height_function(Matching(g, first))
    bnd = boundary_corners(region)
    return HeightField({c: hf[c] for c in bnd}, hf.base)


# ---------------------------------------------------------------------------
# Tori


def torus_height_function(t: TorusGraph, matching_edges) -> HeightField:
    """Heights on the m x n corner torus, lifted along a BFS tree, plus periods."""
    el = t.edge_list()
    dominoes = set()
    for e in matching_edges:
        w, b = el[e][0], el[e][1]
        dominoes.add(frozenset(((w % t.m, w // t.m), (b % t.m, b // t.m))))
    m, n = t.m, t.n

    def wrap(c):
        return (c[0] % m, c[1] % n)

    def form(x, y, dx, dy):
        left, (c1, c2) = _edge_step(dx, dy, x, y)
        crossed = frozenset((wrap(c1), wrap(c2))) in dominoes
        return one_form(wrap(left), crossed)

    h = {(0, 0): 0}
    todo = deque([(0, 0)])
    while todo:
        x, y = todo.popleft()
        for dx, dy in STEPS:
            w = wrap((x + dx, y + dy))
            if w not in h:
                h[w] = h[(x, y)] + form(x, y, dx, dy)
                todo.append(w)
    hx = sum(form(x, 0, 1, 0) for x in range(m))
    hy = sum(form(0, y, 0, 1) for y in range(n))
    return HeightField(h, (0, 0), (hx, hy))
