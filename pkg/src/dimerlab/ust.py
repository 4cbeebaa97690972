"""Exact uniform sampling of Temperleyan domino tilings via spanning trees.

A Temperleyan region is the superposition of a grid graph G (coarse
vertices), its inner faces, and its edge midpoints, with one boundary vertex
b0 removed. Its tilings are in bijection with spanning trees of G: every
coarse vertex other than b0 is covered together with the midpoint of the
edge to its parent in the tree rooted at b0, and every inner face together
with the midpoint of the edge to its parent in the complementary dual tree
rooted at the outer face. Trees are drawn with Wilson's algorithm.

All randomness comes from one ``numpy.random.Generator`` (PCG64).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import GraphError, Matching, Region, boundary_corners, build_temperley, coarse_graph


def _jit(fn):
    import numba

    return numba.njit(cache=True)(fn)


def _wilson_py(indptr, nbr, nbr_edge, root, rng):
    n = len(indptr) - 1
    in_tree = np.zeros(n, dtype=np.bool_)
    in_tree[root] = True
    nxt = np.full(n, -1, dtype=np.int64)
    nxt_edge = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        u = start
        while not in_tree[u]:
            k = indptr[u] + rng.integers(0, indptr[u + 1] - indptr[u])
            nxt[u] = nbr[k]
            nxt_edge[u] = nbr_edge[k]
            u = nbr[k]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            parent_edge[u] = nxt_edge[u]
            u = nxt[u]
    return parent_edge


def _dual_parents_py(edge_faces, in_tree, dual_indptr, dual_nbr, dual_edge, outer):
    """BFS of the dual tree (edges not in the primal tree) from the outer face."""
    nf = len(dual_indptr) - 1
    parent = np.full(nf, -1, dtype=np.int64)
    seen = np.zeros(nf, dtype=np.bool_)
    queue = np.empty(nf, dtype=np.int64)
    queue[0] = outer
    seen[outer] = True
    head, tail = 0, 1
    while head < tail:
        f = queue[head]
        head += 1
        for k in range(dual_indptr[f], dual_indptr[f + 1]):
            e = dual_edge[k]
            if in_tree[e]:
                continue
            g = dual_nbr[k]
            if not seen[g]:
                seen[g] = True
                parent[g] = e
                queue[tail] = g
                tail += 1
    return parent, tail


_KERNELS: dict = {}


def _kernels():
    if not _KERNELS:
        try:
            _KERNELS["wilson"] = _jit(_wilson_py)
            _KERNELS["dual"] = _jit(_dual_parents_py)
        except ImportError:  # numba missing: same code, interpreted
            _KERNELS["wilson"] = _wilson_py
            _KERNELS["dual"] = _dual_parents_py
    return _KERNELS


def _csr(n: int, pairs: list[tuple[int, int]]):
    """Adjacency lists (in CSR form) of an undirected multigraph, with edge ids."""
    deg = np.zeros(n + 1, dtype=np.int64)
    for a, b in pairs:
        deg[a + 1] += 1
        deg[b + 1] += 1
    indptr = np.cumsum(deg)
    nbr = np.empty(indptr[-1], dtype=np.int64)
    eid = np.empty(indptr[-1], dtype=np.int64)
    fill = indptr[:-1].copy()
    for e, (a, b) in enumerate(pairs):
        nbr[fill[a]], eid[fill[a]] = b, e
        fill[a] += 1
        nbr[fill[b]], eid[fill[b]] = a, e
        fill[b] += 1
    return indptr, nbr, eid


@dataclass
class TemperleySampler:
    """Spanning-tree sampler for the Temperleyan region of a coarse region.

    Coarse vertex (X, Y) is fine cell (2X, 2Y), coarse face (X, Y) is fine
    cell (2X + 1, 2Y + 1), and the midpoint of a coarse edge is the sum of
    its endpoints.
    """

    region: Region
    root: tuple
    vertices: list = field(init=False)
    edges: list = field(init=False)
    faces: list = field(init=False)

    def __post_init__(self):
        self.root = tuple(self.root)
        if self.root not in boundary_corners(self.region):
            raise GraphError(f"root {self.root} is not a boundary corner")
        self.vertices, self.edges = coarse_graph(self.region)
        self.vindex = {v: k for k, v in enumerate(self.vertices)}
        pairs = [(self.vindex[a], self.vindex[b]) for a, b in self.edges]
        self.indptr, self.nbr, self.nbr_edge = _csr(len(self.vertices), pairs)
        self.faces = sorted(self.region.cells, key=lambda c: (c[1], c[0]))
        self.findex = {f: k for k, f in enumerate(self.faces)}
        self.outer = len(self.faces)
        ef = []
        for a, b in self.edges:
            if a[1] == b[1]:  # horizontal edge: faces above and below
                x, y = min(a[0], b[0]), a[1]
                sides = ((x, y), (x, y - 1))
            else:
                x, y = a[0], min(a[1], b[1])
                sides = ((x, y), (x - 1, y))
            ef.append(tuple(self.findex.get(s, self.outer) for s in sides))
        self.edge_faces = np.array(ef, dtype=np.int64)
        self.dual_indptr, self.dual_nbr, self.dual_edge = _csr(self.outer + 1, [tuple(p) for p in ef])
        self.midpoint_edge = {(a[0] + b[0], a[1] + b[1]): e for e, (a, b) in enumerate(self.edges)}

    @property
    def root_index(self) -> int:
        return self.vindex[self.root]

    def sample_tree(self, rng: np.random.Generator) -> np.ndarray:
        """parent_edge[v]: edge from v towards the root (-1 at the root)."""
        return _kernels()["wilson"](self.indptr, self.nbr, self.nbr_edge, self.root_index, rng)

    def partners(self, parent_edge: np.ndarray) -> np.ndarray:
        """For each coarse edge, the cell covered together with its midpoint:
        a vertex index v, or len(vertices) + face index."""
        in_tree = np.zeros(len(self.edges), dtype=np.bool_)
        has = parent_edge >= 0
        in_tree[parent_edge[has]] = True
        dparent, reached = _kernels()["dual"](self.edge_faces, in_tree, self.dual_indptr,
                                              self.dual_nbr, self.dual_edge, self.outer)
        if reached != self.outer + 1:
            raise GraphError("complement of the tree is not a spanning dual tree")
        out = np.full(len(self.edges), -1, dtype=np.int64)
        out[parent_edge[has]] = np.nonzero(has)[0]
        fh = dparent[: self.outer] >= 0
        out[dparent[: self.outer][fh]] = len(self.vertices) + np.nonzero(fh)[0]
        return out

    def cell_of(self, token: int) -> tuple:
        nv = len(self.vertices)
        if token < nv:
            X, Y = self.vertices[token]
            return (2 * X, 2 * Y)
        X, Y = self.faces[token - nv]
        return (2 * X + 1, 2 * Y + 1)

    def fine_graph(self):
        return build_temperley(self.region, self.root)

    def matching(self, parent_edge: np.ndarray, g=None) -> Matching:
        """The tiling of ``fine_graph()`` corresponding to a tree."""
        g = g if g is not None else self.fine_graph()
        cell_index = {tuple(p): v for v, p in enumerate(g.positions)}
        lookup = g.edge_index()
        chosen = []
        for e, tok in enumerate(self.partners(parent_edge)):
            a, b = self.edges[e]
            mid = cell_index[(a[0] + b[0], a[1] + b[1])]
            other = cell_index[self.cell_of(int(tok))]
            chosen.append(lookup[(mid, other)][0])
        return Matching(g, frozenset(chosen))

    def height_probe(self, corner: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Crossings on the vertical corner path from the lowest corner of the
        column up to ``corner``: (edge ids, partner tokens, signs). The height
        at the corner is a constant plus sum of sign * [partner[edge] == token]."""
        x, y1 = corner
        cells = {c for c in self._fine_cells()}
        col = [j for (i, j) in cells if i in (x - 1, x)]
        if not col:
            raise GraphError(f"corner {corner} is outside the region")
        y0 = min(col)
        eids, toks, signs = [], [], []
        for y in range(y0, y1):
            c1, c2 = (x - 1, y), (x, y)
            if c1 not in cells or c2 not in cells:
                if c1 not in cells and c2 not in cells:
                    raise GraphError(f"vertical path to {corner} leaves the region")
                continue
            mid, other = (c1, c2) if (c1[0] + c1[1]) % 2 else (c2, c1)
            eids.append(self.midpoint_edge[mid])
            toks.append(self._token(other))
            # crossing changes the step from +-1 to -+3: left cell black (even) -> -4
            signs.append(-4 if (c1[0] + c1[1]) % 2 == 0 else 4)
        return np.array(eids, dtype=np.int64), np.array(toks, dtype=np.int64), np.array(signs, dtype=np.int64)

    def _token(self, cell: tuple) -> int:
        i, j = cell
        if i % 2 == 0:
            return self.vindex[(i // 2, j // 2)]
        return len(self.vertices) + self.findex[((i - 1) // 2, (j - 1) // 2)]

    def _fine_cells(self) -> set:
        if not hasattr(self, "_cells"):
            cells = {(2 * X, 2 * Y) for X, Y in self.vertices if (X, Y) != self.root}
            cells |= {(2 * X + 1, 2 * Y + 1) for X, Y in self.faces}
            cells |= set(self.midpoint_edge)
            self._cells = cells
        return self._cells


def domain_sampler(domain: str, eps: float) -> TemperleySampler:
    """Sampler for the Temperleyan discretization used by ``temperley_domain``
    (root at the boundary corner nearest z = 1)."""
    from .localstats import domain_cells

    region = domain_cells(domain, eps)
    h = 2 * eps
    root = min(boundary_corners(region), key=lambda c: (abs(complex(c[0] * h, c[1] * h) - 1), c[1], c[0]))
    return TemperleySampler(region, root)


@dataclass(frozen=True)
class CovarianceEstimate:
    p: complex
    q: complex
    samples: int
    covariance: float
    stderr: float
    predicted: float
    variance_p: float
    variance_q: float

    @property
    def relative_error(self) -> float:
        return abs(self.covariance - self.predicted) / abs(self.predicted)


def height_covariance_mc(domain: str, eps: float, p: complex, q: complex, samples: int = 10_000,
                         seed: int = 0) -> CovarianceEstimate:
    """Monte Carlo covariance of the height at two interior points of a
    Temperleyan discretization, compared with the conformally invariant limit.

    Heights use the +-1 / -+3 convention; points are snapped to the nearest
    fine-lattice corner (fine cell (i, j) sits at eps (i, j)).
    """
    from .entropy import halfdisc_height_covariance, halfplane_height_covariance

    predictors = {"halfdisc": halfdisc_height_covariance, "halfplane": halfplane_height_covariance}
    if domain not in predictors:
        raise ValueError(f"no covariance prediction for domain {domain!r}")
    s = domain_sampler(domain, eps)
    probes = []
    for z in (p, q):
        corner = (int(round(z.real / eps + 0.5)), int(round(z.imag / eps + 0.5)))
        probes.append(s.height_probe(corner))
    rng = np.random.default_rng(seed)
    hp = np.empty(samples)
    hq = np.empty(samples)
    for k in range(samples):
        part = s.partners(s.sample_tree(rng))
        for arr, (eids, toks, signs) in zip((hp, hq), probes):
            arr[k] = float(np.sum(signs * (part[eids] == toks)))
    cov = float(np.cov(hp, hq)[0, 1])
    # delta-method standard error of the sample covariance
    dp, dq = hp - hp.mean(), hq - hq.mean()
    se = float(np.std(dp * dq, ddof=1) / math.sqrt(samples))
    return CovarianceEstimate(complex(p), complex(q), samples, cov, se, predictors[domain](p, q),
                              float(np.var(hp, ddof=1)), float(np.var(hq, ddof=1)))
