"""Valid and invalid embeddings for the isoradial validation tests."""
from __future__ import annotations

import math

import numpy as np

from dimerlab.isoradial import (
    IsoradialEmbedding,
    embedding_from_points,
    grid_embedding,
    honeycomb_patch,
    square_patch,
    square_rectangle,
    triangular_patch,
)


def _points(emb: IsoradialEmbedding) -> list[complex]:
    return [emb.position(v) for v in range(emb.graph.n_vertices)]


def _rebuild(emb: IsoradialEmbedding, pts, pairs=None, colors="same") -> IsoradialEmbedding:
    g = emb.graph
    if colors == "same":
        colors = None if g.colors is None else list(g.colors)
    return embedding_from_points(pts, list(g.edges) if pairs is None else pairs, colors)


def _interior_vertex(emb: IsoradialEmbedding) -> int:
    g = emb.graph
    outer = set(g.face_vertices(0))
    c = sum(_points(emb)) / g.n_vertices
    return min((v for v in range(g.n_vertices) if v not in outer), key=lambda v: abs(emb.position(v) - c))


def valid_corpus(seed: int = 0) -> list[tuple[str, IsoradialEmbedding]]:
    rng = np.random.default_rng(seed)
    out = [
        ("square 2x2 tracks", square_patch(2, 2)),
        ("square 4x4 tracks", square_patch(4, 4)),
        ("square 5x3 tracks", square_patch(5, 3)),
        ("square rectangle 4x5", square_rectangle(4, 5)),
        ("square rectangle 6x6", square_rectangle(6, 6)),
        ("honeycomb 2", honeycomb_patch(2)),
        ("honeycomb 4", honeycomb_patch(4)),
        ("triangular 4", triangular_patch(4)),
        ("triangular 6", triangular_patch(6)),
    ]
    while len(out) < 20:
        k, l = (int(x) for x in rng.integers(2, 8, size=2))
        al = rng.uniform(-0.6, 0.6, k)
        be = rng.uniform(1.0, 2.1, l)
        emb = grid_embedding(al, be)
        rot = complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
        shift = complex(rng.normal(), rng.normal())
        out.append((f"random grid {k}x{l}", _rebuild(emb, [rot * p + shift for p in _points(emb)])))
    return out


def invalid_corpus(seed: int = 0) -> list[tuple[str, IsoradialEmbedding]]:
    rng = np.random.default_rng(seed)
    out = []
    sq = square_rectangle(4, 4)
    pts = _points(sq)
    v = _interior_vertex(sq)
    moved = list(pts)
    moved[v] += 0.1 + 0.05j
    out.append(("moved interior vertex", _rebuild(sq, moved)))
    out.append(("scaled by 1.1", _rebuild(sq, [1.1 * p for p in pts])))
    out.append(("scaled by 0.9", _rebuild(sq, [0.9 * p for p in pts])))
    hx = honeycomb_patch(3)
    hp = _points(hx)
    hv = _interior_vertex(hx)
    hp[hv] += 0.07j
    out.append(("honeycomb with moved vertex", _rebuild(hx, hp)))
    gr = grid_embedding(rng.uniform(-0.5, 0.5, 5), rng.uniform(1.1, 2.0, 5))
    out.append(("jittered random grid", _rebuild(gr, [p + 1e-3 * complex(*rng.normal(size=2)) for p in _points(gr)])))
    # a rhombus turned inside out: one track crosses back over the others
    out.append(("flipped rhombus", grid_embedding([-0.3, 0.2, 2.0, -0.1], [1.2, 1.5, 1.7, 1.4])))
    # two parallel tracks: degenerate rhombi of edge length 2
    out.append(("degenerate rhombus", grid_embedding([0.0, 0.0, 0.0], [0.0, 1.5, 1.5])))
    # a pendant edge inside a face: its zig-zag path crosses itself
    c = pts[0] + (pts[1] - pts[0]) / 2 + (pts[4] - pts[0]) / 2
    color = 1 - sq.graph.colors[0]
    pend_pts = pts + [c]
    pend_colors = list(sq.graph.colors) + [color]
    pend_pairs = list(sq.graph.edges) + [(0, len(pts)) if sq.graph.colors[0] == 0 else (len(pts), 0)]
    out.append(("pendant edge inside a face", embedding_from_points(pend_pts, pend_pairs, pend_colors)))
    # a subdivided edge: degree-2 vertex, two zig-zag paths cross twice
    fod = sq.graph.face_of_dart()
    k = next(e for e in range(sq.graph.n_edges) if fod[2 * e] and fod[2 * e + 1])
    a, b = sq.graph.edges[k]
    mid = (pts[a] + pts[b]) / 2 + 0.3j * (pts[b] - pts[a]) / abs(pts[b] - pts[a])
    sub_pairs = [e for i, e in enumerate(sq.graph.edges) if i != k] + [(a, len(pts)), (len(pts), b)]
    out.append(("degree-two vertex", embedding_from_points(pts + [mid], sub_pairs, None)))
    tri = triangular_patch(4)
    out.append(("triangular scaled by 1.2", _rebuild(tri, [1.2 * p for p in _points(tri)])))
    return out


def central_white(emb: IsoradialEmbedding) -> int:
    from dimerlab.graphs import WHITE

    g = emb.graph
    c = sum(_points(emb)) / g.n_vertices
    return min((v for v in range(g.n_vertices) if g.colors[v] == WHITE), key=lambda v: abs(emb.position(v) - c))


def kk_inverse_residual(emb: IsoradialEmbedding, w0: int) -> float:
    """max over interior whites w of |sum_b K(w, b) K^{-1}(b, w0) - delta(w, w0)|.

    Whites on the outer face miss some of their neighbours in a finite patch,
    so the identity is only checked at the others.
    """
    from dimerlab.isoradial import discrete_exponential, inverse_contour, isoradial_kasteleyn

    g = emb.graph
    k = isoradial_kasteleyn(emb)
    f = discrete_exponential(emb, w0)
    inv = {b: inverse_contour(emb, b, w0, f) for b in g.blacks()}
    outer = set(g.face_vertices(0))
    acc = {w: 0j for w in g.whites() if w not in outer}
    for e, (w, b) in enumerate(g.edges):
        if w in acc:
            acc[w] += complex(k.edge_values[e]) * inv[b]
    return max(abs(v - (1 if w == w0 else 0)) for w, v in acc.items())
