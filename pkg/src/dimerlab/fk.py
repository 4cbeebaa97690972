"""FK random-cluster model on small planar graphs.

A configuration is a set A of open edges with weight q^c(A) prod_{e in A} nu(e),
where c(A) counts connected components of (V, A), isolated vertices included.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .graphs import GraphError, PlanarGraph, planar_dual

MAX_EDGES = 24


class FKError(ValueError):
    """Raised for inputs outside the supported range."""


class CriticalityError(FKError):
    """A Y-Delta transform was requested for non-critical weights."""


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def _num(x):
    """Keep ints and Fractions exact, everything else becomes float."""
    if isinstance(x, bool):
        raise FKError("weights must be numbers")
    if _is_exact(x):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class FKModel:
    graph: PlanarGraph
    weights: tuple
    q: object

    def __post_init__(self):
        w = tuple(_num(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "q", _num(self.q))
        if len(w) != self.graph.n_edges:
            raise FKError(f"{len(w)} weights for {self.graph.n_edges} edges")
        if any(x <= 0 for x in w) or self.q <= 0:
            raise FKError("edge weights and q must be positive")
        problems = self.graph.validate()
        if problems:
            raise GraphError("; ".join(problems))

    @classmethod
    def from_graph(cls, g: PlanarGraph, q, weights=None) -> "FKModel":
        return cls(g, tuple(g.weights if weights is None else weights), q)

    @property
    def n_vertices(self) -> int:
        return self.graph.n_vertices

    @property
    def edges(self) -> tuple:
        return tuple(self.graph.edges)

    @property
    def exact(self) -> bool:
        return _is_exact(self.q) and all(_is_exact(w) for w in self.weights)

    def weight_product(self):
        return _prod(self.weights, Fraction(1) if self.exact else 1.0)


def _prod(xs, one):
    out = one
    for x in xs:
        out = out * x
    return out


# ---------------------------------------------------------------------------
# Enumeration


@dataclass(frozen=True)
class FKPartition:
    value: object
    histogram: dict  # number of components -> number of configurations
    exact: bool

    def __float__(self):
        return float(self.value)


def _split_order(n: int, edges) -> list:
    """Edge order (by breadth-first layers) that keeps the separator between
    the first and second half small for lattice-like graphs."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    rank = [-1] * n
    k = 0
    for root in range(n):
        if rank[root] >= 0:
            continue
        rank[root] = k
        k += 1
        queue = [root]
        for v in queue:
            for u in adj[v]:
                if rank[u] < 0:
                    rank[u] = k
                    k += 1
                    queue.append(u)
    return sorted(range(len(edges)), key=lambda e: (max(rank[x] for x in edges[e]), min(rank[x] for x in edges[e])))


def _half_states(n: int, edges, weights, sep: list, one) -> dict:
    """Group the subsets of one half by their effect on the rest.

    A subset is summarized by the partition it induces on the separator
    (each separator vertex labelled by the first separator vertex of its
    block) and by the number of its components avoiding the separator,
    counted among the vertices this half touches. Returns
    {(labels, inner): (total weight, number of subsets)}.
    """
    touched = sorted({x for e in edges for x in e})
    sep_set = set(sep)
    groups: dict = {}
    m = len(edges)
    for mask in range(1 << m):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        w = one
        for i in range(m):
            if mask >> i & 1:
                u, v = edges[i]
                parent[find(u)] = find(v)
                w = w * weights[i]
        first: dict = {}
        labels = []
        for idx, x in enumerate(sep):
            labels.append(first.setdefault(find(x), idx))
        roots_sep = set(first)
        inner = len({find(x) for x in touched if x not in sep_set} - roots_sep)
        key = (tuple(labels), inner)
        tw, cnt = groups.get(key, (0 * one, 0))
        groups[key] = (tw + w, cnt + 1)
    return groups


def _join_blocks(a: tuple, b: tuple) -> int:
    parent = list(range(len(a)))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for lab in (a, b):
        for i, r in enumerate(lab):
            parent[find(i)] = find(r)
    return len({find(i) for i in range(len(a))})


def _enumerate(n: int, edges, weights, q, exact: bool) -> FKPartition:
    one = Fraction(1) if exact else 1.0
    order = _split_order(n, edges)
    edges = [tuple(edges[e]) for e in order]
    weights = [weights[e] for e in order]
    h = len(edges) // 2
    e1, e2 = edges[:h], edges[h:]
    t1 = {x for e in e1 for x in e}
    t2 = {x for e in e2 for x in e}
    sep = sorted(t1 & t2)
    isolated = n - len(t1 | t2)
    g1 = _half_states(n, e1, weights[:h], sep, one)
    g2 = _half_states(n, e2, weights[h:], sep, one)
    # fold the inner component counts into polynomials in q per separator partition
    P1: dict = {}
    P2: dict = {}
    H1: dict = {}
    H2: dict = {}
    for g, P, H in ((g1, P1, H1), (g2, P2, H2)):
        for (lab, inner), (w, cnt) in g.items():
            P[lab] = P.get(lab, 0 * one) + w * q ** inner
            H.setdefault(lab, Counter())[inner] += cnt
    Z = 0 * one
    hist: Counter = Counter()
    for a, wa in P1.items():
        for b, wb in P2.items():
            c = _join_blocks(a, b) + isolated
            Z = Z + wa * wb * q ** c
            for i1, n1 in H1[a].items():
                for i2, n2 in H2[b].items():
                    hist[c + i1 + i2] += n1 * n2
    return FKPartition(Z, dict(sorted(hist.items())), exact)


def fk_partition(model: FKModel) -> FKPartition:
    """Z = sum over all 2^E configurations of q^c prod nu(e).

    The edge set is split into two halves; subsets of each half are grouped
    by the vertex partition they induce, and every pair of groups is joined.
    This visits every configuration once while doing the expensive
    component count only per pair of distinct partitions.
    """
    E = model.graph.n_edges
    if E > MAX_EDGES:
        raise FKError(f"exhaustive enumeration is limited to {MAX_EDGES} edges, got {E}")
    return _enumerate(model.n_vertices, model.edges, model.weights, model.q, model.exact)


def fk_partition_dc(n_vertices: int, edges, weights, q):
    """Second oracle: deletion-contraction, Z(G) = Z(G - e) + nu(e) Z(G / e).

    Loops contribute a factor (1 + nu); the empty graph gives q^V.
    """
    edges = [tuple(e) for e in edges]
    weights = list(weights)
    if not edges:
        return q ** n_vertices
    (u, v), w = edges[-1], weights[-1]
    rest_w = weights[:-1]
    deleted = fk_partition_dc(n_vertices, edges[:-1], rest_w, q)
    if u == v:
        return deleted * (1 + w)
    return deleted + w * fk_partition_dc(n_vertices - 1, _contract(n_vertices, edges, len(edges) - 1), rest_w, q)


def _contract(n: int, edges, e: int):
    """Edges of G / e (the last vertex takes the freed label)."""
    u, v = edges[e]
    last = n - 1

    def relabel(x):
        x = u if x == v else x
        return v if x == last and v != last else x

    return [(relabel(a), relabel(b)) for i, (a, b) in enumerate(edges) if i != e]


def fk_edge_marginals(model: FKModel) -> list:
    """P(e open) for every edge, as nu(e) Z(G / e) / Z(G) (loops: nu / (1 + nu))."""
    Z = fk_partition(model).value
    out = []
    for e, (u, v) in enumerate(model.edges):
        w = model.weights[e]
        if u == v:
            out.append(w / (1 + w))
            continue
        rw = [x for i, x in enumerate(model.weights) if i != e]
        Zc = _enumerate(model.n_vertices - 1, _contract(model.n_vertices, model.edges, e), rw, model.q,
                        model.exact).value
        out.append(w * Zc / Z)
    return out


# ---------------------------------------------------------------------------
# Duality


@dataclass(frozen=True)
class DualResult:
    dual: FKModel
    constant: object   # lambda with Z* = lambda Z, measured by enumeration
    predicted: object  # q^(E - V + 1) / W
    Z: object
    Z_dual: object
    exponent: int      # E - V + 1


def fk_dual_model(model: FKModel) -> DualResult:
    """Dual graph with weights q / nu(e), and the measured constant Z* / Z.

    For a connected planar graph a configuration A with c components,
    k edges and r independent cycles has c - r + k = V, and its dual
    complement has r + 1 components (one more than the number of bounded
    faces it encloses); so Z* = q^(E - V + 1) Z / W. The enumeration result
    must equal this exactly for exact inputs (or to 1e-10 relative otherwise).
    """
    g = model.graph
    dg = planar_dual(g)
    q = model.q
    dual = FKModel(dg, tuple(q / w for w in model.weights), q)
    Z = fk_partition(model).value
    Zd = fk_partition(dual).value
    lam = Zd / Z
    E, V = g.n_edges, g.n_vertices
    pred = q ** (E - V + 1) / model.weight_product()
    if model.exact:
        if lam != pred:
            raise FKError(f"duality constant {lam} differs from q^(E-V+1)/W = {pred}")
    elif abs(lam - pred) > 1e-10 * abs(pred):
        raise FKError(f"duality constant {lam} differs from q^(E-V+1)/W = {pred}")
    return DualResult(dual, lam, pred, Z, Zd, E - V + 1)


# ---------------------------------------------------------------------------
# Y-Delta


def critq1_residual(a, b, c, q):
    """-q + ab + ac + bc + abc (zero for a critical triangle)."""
    return -q + a * b + a * c + b * c + a * b * c


def critq2_residual(A, B, C, q):
    """-q^2 - q (A + B + C) + ABC (zero for a critical star)."""
    return -q * q - q * (A + B + C) + A * B * C


def _residual_ok(r, tol: float) -> bool:
    if _is_exact(r):
        return r == 0
    return abs(complex(r)) <= tol


@dataclass(frozen=True)
class YDeltaTriple:
    """Triangle weights (a, b, c) on edges v2v3, v1v3, v1v2, or star weights
    (A, B, C) on the edges from the centre to v1, v2, v3."""

    kind: str  # "delta" or "y"
    w1: object
    w2: object
    w3: object
    q: object

    def __post_init__(self):
        if self.kind not in ("delta", "y"):
            raise FKError("kind must be 'delta' or 'y'")

    def residual(self):
        f = critq1_residual if self.kind == "delta" else critq2_residual
        return f(self.w1, self.w2, self.w3, self.q)

    def is_critical(self, tol: float = 1e-12) -> bool:
        return _residual_ok(self.residual(), tol)


def critical_third(a, b, q):
    """The c making (a, b, c) a critical triangle: c = (q - ab) / (a + b + ab)."""
    c = (q - a * b) / (a + b + a * b)
    if c <= 0:
        raise CriticalityError("no positive critical third weight for these a, b")
    return c


def ydelta_transform(t: YDeltaTriple, tol: float = 1e-12) -> YDeltaTriple:
    """Delta -> Y or Y -> Delta with A = q/a, B = q/b, C = q/c (an involution)."""
    if not t.is_critical(tol):
        raise CriticalityError(f"weights are not critical: residual {t.residual()}")
    q = t.q
    other = "y" if t.kind == "delta" else "delta"
    return YDeltaTriple(other, q / t.w1, q / t.w2, q / t.w3, q)


EVENTS = ("123", "12", "13", "23", "none")


def event_weights_delta(a, b, c, q) -> tuple:
    """Extra weight from the triangle's own edges, given how v1, v2, v3 are
    connected outside it (events in the order of EVENTS)."""
    return (
        (1 + a) * (1 + b) * (1 + c),
        (1 + c) * (1 + (a + b + a * b) / q),
        (1 + b) * (1 + (a + c + a * c) / q),
        (1 + a) * (1 + (b + c + b * c) / q),
        1 + (a + b + c) / q + (a * b + a * c + b * c + a * b * c) / q ** 2,
    )


def event_weights_y(A, B, C, q) -> tuple:
    """Extra weight from the star's edges and centre, same events."""
    base = q + A + B + C
    return (
        base + A * B + B * C + A * C + A * B * C,
        base + A * B + (A * C + B * C + A * B * C) / q,
        base + A * C + (A * B + B * C + A * B * C) / q,
        base + B * C + (A * B + A * C + A * B * C) / q,
        base + (A * B + A * C + B * C) / q + A * B * C / q ** 2,
    )


_EVENT_PARTITIONS = {
    "123": ((0, 1, 2),),
    "12": ((0, 1), (2,)),
    "13": ((0, 2), (1,)),
    "23": ((1, 2), (0,)),
    "none": ((0,), (1,), (2,)),
}


def event_weights_bruteforce(kind: str, w, q) -> tuple:
    """Same table by summing over the 8 subsets of the three gadget edges.

    Each merge of two outside blocks costs a factor 1/q; in the star the
    centre vertex is a new component (factor q) unless joined to a block.
    """
    if kind == "delta":
        gadget = [((1, 2), w[0]), ((0, 2), w[1]), ((0, 1), w[2])]
        n = 3
    else:
        gadget = [((3, 0), w[0]), ((3, 1), w[1]), ((3, 2), w[2])]
        n = 4
    one = Fraction(1) if _is_exact(q) else 1.0
    out = []
    for ev in EVENTS:
        blocks = _EVENT_PARTITIONS[ev]
        total = 0
        for r in range(4):
            for sub in combinations(gadget, r):
                parent = list(range(n))

                def find(x):
                    while parent[x] != x:
                        x = parent[x]
                    return x

                for blk in blocks:
                    for x in blk[1:]:
                        parent[find(x)] = find(blk[0])
                wt = 1
                for (u, v), x in sub:
                    parent[find(u)] = find(v)
                    wt = wt * x
                comps = len({find(x) for x in range(n)})
                k = comps - len(blocks)
                total = total + wt * (q ** k if k >= 0 else one / q ** -k)
        out.append(total)
    return tuple(out)


def ydelta_ratios(t: YDeltaTriple) -> tuple:
    """Y-weight / Delta-weight for each event; all equal iff the measures agree."""
    d = t if t.kind == "delta" else ydelta_transform(t)
    y = ydelta_transform(d)
    wd = event_weights_delta(d.w1, d.w2, d.w3, d.q)
    wy = event_weights_y(y.w1, y.w2, y.w3, y.q)
    return tuple(b / a for a, b in zip(wd, wy))


# ---------------------------------------------------------------------------
# Isoradial weights and Baxter's integral


def _r_of_q(q: float) -> float:
    q = float(q)
    if not 0 < q < 4:
        raise FKError(f"q must lie in (0, 4), got {q}")
    return math.acos(math.sqrt(q) / 2)


def fk_isoradial_weight(theta: float, q: float) -> float:
    """nu = sqrt(q) sin(2 r theta / pi) / sin(2 r (pi/2 - theta) / pi), r = arccos(sqrt(q)/2)."""
    r = _r_of_q(q)
    theta = float(theta)
    if not 0 < theta < math.pi / 2:
        raise FKError(f"rhombus half-angle must lie in (0, pi/2), got {theta}")
    k = 2 * r / math.pi
    return math.sqrt(q) * math.sin(k * theta) / math.sin(k * (math.pi / 2 - theta))


def critical_probability(theta: float, q: float = 1.0) -> float:
    """p = nu / (1 + nu) for the isoradial weight."""
    nu = fk_isoradial_weight(theta, q)
    return nu / (1 + nu)


def _baxter_integrand(t: float, r: float, theta: float) -> float:
    k = 4 * r * theta / math.pi
    x, y, z, w = (math.pi - r) * t, k * t, math.pi * t, r * t
    if t < 1e-8:
        # limit t -> 0 of sinh(x) sinh(y) / (t sinh(z) cosh(w)) is x y / (t z) -> O(t)
        return (math.pi - r) * k * t / math.pi
    # sinh(x) sinh(y) / (sinh(z) cosh(w)) = e^{x+y-z-w} (1-e^{-2x})(1-e^{-2y}) / ((1-e^{-2z})(1+e^{-2w}))
    num = -math.expm1(-2 * x) * -math.expm1(-2 * y)
    den = -math.expm1(-2 * z) * (1 + math.exp(-2 * w))
    return math.exp(x + y - z - w) * num / (den * t)


def baxter_Fq(theta: float, q: float, tol: float = 1e-10) -> float:
    """F_q(theta) = -(1/2) int_R sinh((pi-r)t) sinh(4 r theta t/pi) / (t sinh(pi t) cosh(r t)) dt.

    The integrand is even, so this is minus the half-line integral. It decays
    like exp(-2 r (1 - 2 theta/pi) t) / t, so the integral diverges at
    theta = pi/2 and only [0, pi/2) is supported. The half line is cut at T
    where the tail bound drops below 1e-14.
    """
    from scipy.integrate import quad

    r = _r_of_q(q)
    theta = float(theta)
    if not 0 <= theta < math.pi / 2:
        raise FKError("baxter_Fq needs theta in [0, pi/2); the integral diverges at pi/2")
    if theta == 0:
        return 0.0
    decay = 2 * r * (1 - 2 * theta / math.pi)
    # tail: int_T^inf 4 e^{-decay t} / t dt <= 4 e^{-decay T} / (decay T)
    T = 1.0
    while 4 * math.exp(-decay * T) / (decay * T) > 1e-14:
        T *= 1.5
    edges = [0.0]
    step = max(1.0 / decay, 1.0)
    while edges[-1] < T:
        edges.append(min(T, edges[-1] + step))
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        total += quad(_baxter_integrand, lo, hi, args=(r, theta), epsabs=tol / len(edges), epsrel=tol, limit=200)[0]
    return -total


def rect_hex_ratio(q: float) -> float:
    """Z_rect / Z_hex = 2 cos((2/3) arccos(sqrt(q)/2)) / q^(1/6)."""
    r = _r_of_q(q)
    return 2 * math.cos(2 * r / 3) / float(q) ** (1 / 6)


def fk_report(model: FKModel) -> dict:
    """Summary used by the command line: Z, dual Z, duality constant."""
    part = fk_partition(model)
    dual = fk_dual_model(model)

    def out(x):
        return str(x) if isinstance(x, Fraction) else float(x)

    return {
        "Z": out(part.value),
        "Z_dual": out(dual.Z_dual),
        "duality_constant": out(dual.constant),
        "duality_exponent": dual.exponent,
        "component_histogram": {str(k): v for k, v in part.histogram.items()},
        "exact": part.exact,
    }
