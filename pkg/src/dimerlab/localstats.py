"""Inverse Kasteleyn matrices, local dimer statistics and exact sampling.

The Kasteleyn matrix K is indexed (white, black); its inverse is indexed
(black, white), so ``inv[b, w]`` multiplies ``K[w, b]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import exact
from .exact import QI
from .graphs import GraphError, Matching
from .kasteleyn import FlatnessError, KasteleynMatrix, validate_flatness

EXACT_INVERSE_LIMIT = 200


class SingularError(ValueError):
    """det K = 0: the graph has no perfect matching."""


class SamplerError(RuntimeError):
    """A conditional probability left [0, 1] beyond round-off."""


@dataclass(frozen=True, eq=False)
class InverseKasteleyn:
    """K^{-1} as a black-by-white array (list of QI rows when exact)."""

    kmat: KasteleynMatrix
    values: object
    exact: bool
    residual: float = 0.0

    def __call__(self, b: int, w: int):
        r, c = self.kmat.col_of[b], self.kmat.row_of[w]
        return self.values[r][c] if self.exact else self.values[r, c]

    def to_numpy(self) -> np.ndarray:
        if not self.exact:
            return self.values
        return np.array([[complex(x) for x in row] for row in self.values])


def invert_kasteleyn(k: KasteleynMatrix, mode: str = "auto") -> InverseKasteleyn:
    """Full inverse of K: exact for at most 200 vertices, floating otherwise."""
    if not k.is_square:
        raise SingularError("unbalanced coloring: no perfect matching")
    nv = 2 * len(k.whites)
    if mode == "auto":
        mode = "exact" if k.is_exact and nv <= EXACT_INVERSE_LIMIT else "floating"
    if mode == "exact":
        if not k.is_exact:
            raise ValueError("exact inversion needs exact entries")
        try:
            inv = exact.inverse(k.rows())
        except ZeroDivisionError:
            raise SingularError("det K = 0: no perfect matching") from None
        return InverseKasteleyn(k, inv, True)
    if mode != "floating":
        raise ValueError(f"unknown mode {mode!r}")
    a = k.to_numpy()
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise SingularError("det K = 0: no perfect matching") from None
    res = float(np.max(np.abs(a @ inv - np.eye(len(a))))) if len(a) else 0.0
    if not res <= 1e-10:
        raise SingularError(f"inverse residual {res:.3g} exceeds 1e-10 (near-singular matrix)")
    return InverseKasteleyn(k, inv, False, res)


def _pair_value(k: KasteleynMatrix, w: int, b: int):
    v = k.entry(w, b)
    if v == 0:
        raise GraphError(f"({w}, {b}) is not an edge")
    return v


def dimer_probability(inv: InverseKasteleyn, T: Sequence[tuple[int, int]]):
    """Probability that all dimers (w_i, b_i) of T appear.

    Pr(T) = |prod K(w_i, b_i)| * |det K^{-1}(b_i, w_j)|. Exact (Fraction)
    for exact inverses.
    """
    T = [tuple(p) for p in T]
    if not T:
        return 1
    ws = [w for w, _ in T]
    bs = [b for _, b in T]
    if len(set(ws)) < len(ws) or len(set(bs)) < len(bs):
        return 0
    k = inv.kmat
    kv = [_pair_value(k, w, b) for w, b in T]
    if inv.exact:
        sub = [[inv(bi, wj) for wj in ws] for bi in bs]
        p = exact.prod(kv) * exact.det(sub)
        if p.im == 0:
            return abs(p.re)
        r = exact.exact_sqrt(p.norm())
        return r if r is not None else abs(p)
    sub = np.array([[inv(bi, wj) for wj in ws] for bi in bs])
    return float(abs(np.prod([complex(x) for x in kv])) * abs(np.linalg.det(sub)))


def edge_probabilities(inv: InverseKasteleyn) -> list:
    """Pr(edge e) for every edge, in edge order."""
    k = inv.kmat
    out = []
    for e, (w, b) in enumerate(k.graph.edges):
        if inv.exact:
            out.append((QI.coerce(k.edge_values[e]) * inv(b, w)).re)
        else:
            out.append(float((complex(k.edge_values[e]) * inv(b, w)).real))
    return out


# ---------------------------------------------------------------------------
# Sampling


def _check_sampleable(k: KasteleynMatrix):
    if not k.is_square:
        raise SingularError("unbalanced coloring: no perfect matching")
    if validate_flatness(k):
        raise FlatnessError("sampling needs a Kasteleyn-flat matrix")


def sample_matchings(k: KasteleynMatrix, count: int, seed: int = 0, batch: int = 64,
                     tol: float = 1e-9) -> list[Matching]:
    """Independent exact samples from the weighted matching measure.

    White vertices are fixed in increasing order. With M the current inverse,
    white w picks black b with probability K(w,b) M(b,w); then row b and
    column w are eliminated, M <- M - M[:, w] M[b, :] / M[b, w], which is the
    inverse of K with row w and column b removed. Sample s draws its uniforms
    from its own child of ``SeedSequence(seed)``, so results do not depend on
    the batch size.
    """
    _check_sampleable(k)
    g = k.graph
    n = len(k.whites)
    a = k.to_numpy()
    try:
        inv0 = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise SingularError("det K = 0: no perfect matching") from None
    nbrs = []  # per white row: (edge ids, black cols, K values)
    for r, w in enumerate(k.whites):
        es = [e for e, (u, _) in enumerate(g.edges) if u == w]
        nbrs.append((es, np.array([k.col_of[g.edges[e][1]] for e in es]),
                     np.array([complex(k.edge_values[e]) for e in es])))
    children = np.random.SeedSequence(seed).spawn(count)
    uniforms = np.array([np.random.default_rng(c).random(n) for c in children]) if count else np.zeros((0, n))
    out = []
    for start in range(0, count, batch):
        u = uniforms[start:start + batch]
        S = len(u)
        M = np.broadcast_to(inv0, (S, n, n)).copy()
        chosen = np.zeros((S, n), dtype=np.int64)
        for r in range(n):
            es, cols, kv = nbrs[r]
            p = (kv[None, :] * M[:, cols, r]).real
            if np.any(p < -tol) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-6):
                raise SamplerError(f"conditional probabilities out of range at white row {r}: {p.min():.3g}")
            p = np.clip(p, 0, None)
            cdf = np.cumsum(p, axis=1)
            cdf /= cdf[:, -1:]
            pick = np.minimum((u[:, r:r + 1] > cdf).sum(axis=1), len(es) - 1)
            chosen[:, r] = np.array(es)[pick]
            bcol = cols[pick]
            idx = np.arange(S)
            piv = M[idx, bcol, r]
            colw = M[:, :, r].copy()
            rowb = M[idx, bcol, :].copy()
            M -= colw[:, :, None] * rowb[:, None, :] / piv[:, None, None]
        for s in range(S):
            out.append(Matching(g, frozenset(int(e) for e in chosen[s])))
    return out


def sample_matching(k: KasteleynMatrix, seed: int = 0) -> Matching:
    return sample_matchings(k, 1, seed)[0]


# ---------------------------------------------------------------------------
# Whole-plane inverse for the direction-phase weighting


def _plane_inner(x: int, phi: float) -> complex:
    """(1/2pi)-free inner theta-integral of e^{i x theta} / (2i sin theta - 2 sin phi).

    Residue calculus: the poles in z = e^{i theta} are the roots of
    z^2 - 2 s z - 1 with s = sin phi; only the root inside the unit disc
    contributes (for x < 0 one uses the outer root instead).
    """
    s = math.sin(phi)
    if s == 0.0:
        return 0.0
    sg = 1.0 if s > 0 else -1.0
    r = math.sqrt(1 + s * s)
    zin = s - sg * r
    c = 1.0 if x >= 0 or x % 2 == 0 else -1.0
    return -math.pi * sg * c * zin ** abs(x) / r


def plane_inverse(x: int, y: int, tol: float = 1e-10) -> complex:
    """Whole-plane K^{-1}(b, w) for b - w = (x, y), direction-phase weights.

    Evaluates (1/4pi^2) int int e^{i(x theta + y phi)} / (2i sin theta - 2 sin phi)
    by doing the theta-integral in closed form and the phi-integral by
    adaptive quadrature split at the sign changes of sin phi. Same-color
    displacements (x + y even) give exactly 0.
    """
    from scipy.integrate import quad

    if (x + y) % 2 == 0:
        return 0j
    re = im = 0.0
    for lo, hi in ((0.0, math.pi / 2), (math.pi / 2, math.pi), (math.pi, 1.5 * math.pi), (1.5 * math.pi, 2 * math.pi)):
        re += quad(lambda p: math.cos(y * p) * _plane_inner(x, p), lo, hi, epsabs=tol, limit=400)[0]
        im += quad(lambda p: math.sin(y * p) * _plane_inner(x, p), lo, hi, epsabs=tol, limit=400)[0]
    v = complex(re, im) / (4 * math.pi ** 2)
    # Parity: exactly one of the real/imaginary parts survives.
    return complex(v.real, 0.0) if x % 2 else complex(0.0, v.imag)


def rectangle_inverse_columns(m: int, n: int, whites: Sequence[tuple[int, int]]) -> tuple[dict, object]:
    """Columns K^{-1}(., w) of the direction-phase matrix of the m x n grid graph.

    ``whites`` are cell coordinates (1-based). Uses a sparse LU factorization.
    Returns ({white cell: {black cell: value}}, graph).
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import splu

    from .graphs import build_rectangle
    from .kasteleyn import build_kasteleyn

    g = build_rectangle(m, n)
    k = build_kasteleyn(g, "iwts")
    nw = len(k.whites)
    rows, cols, vals = [], [], []
    for e, (w, b) in enumerate(g.edges):
        rows.append(k.row_of[w])
        cols.append(k.col_of[b])
        vals.append(complex(k.edge_values[e]))
    A = sp.csc_matrix((vals, (rows, cols)), shape=(nw, nw))
    lu = splu(A)
    index = {tuple(g.positions[v]): v for v in range(g.n_vertices)}
    out = {}
    for cell in whites:
        w = index[tuple(cell)]
        e = np.zeros(nw, dtype=complex)
        e[k.row_of[w]] = 1
        col = lu.solve(e)  # A^{-1} e_w : entries indexed by black columns
        out[tuple(cell)] = {tuple(g.positions[b]): col[k.col_of[b]] for b in k.blacks}
    return out, g


# ---------------------------------------------------------------------------
# Continuum coupling functions and Temperleyan discretizations


@dataclass(frozen=True)
class CouplingFunctions:
    """F_+ and F_- of a simply connected domain; F_0, F_1 derived from them."""

    domain: str
    fplus: object
    fminus: object

    def F0(self, u: complex, v: complex) -> complex:
        return 0.5 * (self.fplus(u, v) + self.fminus(u, v))

    def F1(self, u: complex, v: complex) -> complex:
        return 0.5 * (self.fplus(u, v) - self.fminus(u, v))

    def pullback(self, name: str, phi, dphi) -> "CouplingFunctions":
        """Coupling functions of V for a conformal map phi: V -> (this domain)."""
        fp, fm = self.fplus, self.fminus
        return CouplingFunctions(
            name,
            lambda u, v: fp(phi(u), phi(v)) * dphi(u),
            lambda u, v: fm(phi(u), phi(v)) * np.conj(dphi(u)),
        )


def halfplane_coupling() -> CouplingFunctions:
    return CouplingFunctions(
        "halfplane",
        lambda u, v: 2 / (math.pi * (v - u)),
        lambda u, v: -2 / (math.pi * (v - np.conj(u))),
    )


def plane_coupling() -> CouplingFunctions:
    return CouplingFunctions("plane", lambda u, v: 2 / (math.pi * (v - u)), lambda u, v: 0j)


def disc_map(z):
    """Unit disc -> upper half-plane."""
    return 1j * (1 + z) / (1 - z)


def disc_map_derivative(z):
    return 2j / (1 - z) ** 2


def halfdisc_map(z):
    """Upper half of the unit disc -> upper half-plane."""
    return ((1 + z) / (1 - z)) ** 2


def halfdisc_map_derivative(z):
    return 4 * (1 + z) / (1 - z) ** 3


def coupling_functions(domain: str) -> CouplingFunctions:
    h = halfplane_coupling()
    if domain == "halfplane":
        return h
    if domain == "plane":
        return plane_coupling()
    if domain == "disc":
        return h.pullback("disc", disc_map, disc_map_derivative)
    if domain == "halfdisc":
        return h.pullback("halfdisc", halfdisc_map, halfdisc_map_derivative)
    raise ValueError(f"unknown domain {domain!r}")


DOMAIN_TESTS = {
    "disc": lambda x, y: x * x + y * y < 1,
    "halfdisc": lambda x, y: x * x + y * y < 1 and y > 0,
}


def domain_cells(domain: str, eps: float):
    """Coarse cells (side 2 eps) whose closed square lies in the closed domain.

    Coarse vertex (X, Y) sits at 2 eps (X, Y); the fine lattice has spacing eps.
    """
    from .graphs import Region

    if domain not in DOMAIN_TESTS:
        raise ValueError(f"unknown domain {domain!r}; choose from {sorted(DOMAIN_TESTS)}")
    inside = DOMAIN_TESTS[domain]
    h = 2 * eps
    R = int(math.ceil(1 / h)) + 1
    cells = set()
    shrink = 1e-12
    for X in range(-R, R):
        for Y in range(-R, R):
            corners = [((X + dx) * h, (Y + dy) * h) for dx in (0, 1) for dy in (0, 1)]
            # Points on the straight part of the boundary count as inside.
            if all(inside(x * (1 - shrink), y + shrink) for x, y in corners):
                cells.add((X, Y))
    return Region(frozenset(cells))


@dataclass
class TemperleyDomain:
    """Temperleyan graph of a domain with a sparse LU of its Kasteleyn matrix."""

    domain: str
    eps: float
    graph: object
    kmat: KasteleynMatrix
    lu: object
    index: dict

    def position(self, v: int) -> complex:
        x, y = self.graph.positions[v]
        return complex(x * self.eps, y * self.eps)

    def nearest(self, z: complex, cls: str) -> int:
        """Nearest fine vertex of class W0, W1, B0 or B1 to the point z."""
        par = {"W0": (1, 0), "W1": (0, 1), "B0": (0, 0), "B1": (1, 1)}[cls]
        i0, j0 = round(z.real / self.eps), round(z.imag / self.eps)
        best = None
        for di in range(-3, 4):
            for dj in range(-3, 4):
                c = (i0 + di, j0 + dj)
                if (c[0] % 2, c[1] % 2) == par and c in self.index:
                    d = abs(complex(*c) * self.eps - z)
                    if best is None or d < best[0]:
                        best = (d, self.index[c])
        if best is None:
            raise ValueError(f"no {cls} vertex near {z}")
        return best[1]

    def inverse_column(self, w: int) -> np.ndarray:
        e = np.zeros(len(self.kmat.whites), dtype=complex)
        e[self.kmat.row_of[w]] = 1
        return self.lu.solve(e)


def temperley_domain(domain: str, eps: float) -> TemperleyDomain:
    import scipy.sparse as sp
    from scipy.sparse.linalg import splu

    from .graphs import build_temperley
    from .kasteleyn import build_kasteleyn

    from .graphs import boundary_corners

    region = domain_cells(domain, eps)
    # The half-plane formulas correspond to the root at infinity, whose
    # preimage under the maps above is z = 1.
    h = 2 * eps
    b0 = min(boundary_corners(region), key=lambda c: (abs(complex(c[0] * h, c[1] * h) - 1), c[1], c[0]))
    g = build_temperley(region, b0)
    k = build_kasteleyn(g, "iwts")
    n = len(k.whites)
    rows = [k.row_of[w] for w, _ in g.edges]
    cols = [k.col_of[b] for _, b in g.edges]
    vals = [complex(x) for x in k.edge_values]
    lu = splu(sp.csc_matrix((vals, (rows, cols)), shape=(n, n)))
    index = {tuple(g.positions[v]): v for v in range(g.n_vertices)}
    return TemperleyDomain(domain, eps, g, k, lu, index)


def predicted_inverse(F: CouplingFunctions, eps: float, w: complex, b: complex, wcls: str, bcls: str) -> complex:
    """eps times the projection of F_1 (w in W0) or F_0 (w in W1).

    The real part is kept when b - w has odd x-coordinate (W0-B0 and W1-B1
    pairs), i times the imaginary part otherwise, as in the whole plane.
    """
    f = F.F1(w, b) if wcls == "W0" else F.F0(w, b)
    same = (wcls, bcls) in (("W0", "B0"), ("W1", "B1"))
    return eps * (complex(f.real, 0) if same else complex(0, f.imag))


def coupling_compare(domain: str, eps: float, w: complex, b: complex, wcls: str = "W0",
                     bcls: str = "B0", td: TemperleyDomain | None = None) -> dict:
    """Discrete K^{-1}(b, w) on a Temperleyan discretization vs its continuum prediction."""
    if abs(w - b) < 10 * eps:
        raise ValueError("|w - b| < 10 eps: points too close for the scaling regime")
    F = coupling_functions(domain)
    td = td or temperley_domain(domain, eps)
    wv, bv = td.nearest(w, wcls), td.nearest(b, bcls)
    col = td.inverse_column(wv)
    disc = complex(col[td.kmat.col_of[bv]])
    pred = predicted_inverse(F, eps, td.position(wv), td.position(bv), wcls, bcls)
    return {"discrete": disc, "continuum": pred, "error": abs(disc - pred),
            "w": td.position(wv), "b": td.position(bv)}
