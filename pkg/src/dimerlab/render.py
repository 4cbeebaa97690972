"""SVG rendering and (de)serialization of graphs, embeddings, matchings,
height fields and limit-shape surfaces.

Output is byte-for-byte deterministic: coordinates are printed with a fixed
number of decimals and elements are emitted in a fixed order.
"""
from __future__ import annotations

import json
import math
from xml.sax.saxutils import escape

import numpy as np

from .graphs import BLACK, GraphError, Matching, PlanarGraph, cell_color, graph_from_json, graph_to_json
from .heights import HeightField

SCALE = 20
# fill colours of the four domino classes
TYPE_COLORS = {"a": "#d95f02", "b": "#1b9e77", "c": "#7570b3", "d": "#e6ab02"}


def _f(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _svg(width: float, height: float, body: list[str]) -> str:
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" height="{_f(height)}" '
            f'viewBox="0 0 {_f(width)} {_f(height)}">\n')
    return head + "\n".join(body) + "\n</svg>\n"


def domino_type(c1: tuple, c2: tuple) -> str:
    """Class of the domino covering cells c1, c2: 'a' / 'b' horizontal with
    the black cell on the west / east, 'c' / 'd' vertical with the black cell
    on the south / north."""
    black, white = (c1, c2) if cell_color(*c1) == BLACK else (c2, c1)
    if black[1] == white[1]:
        return "a" if black[0] < white[0] else "b"
    return "c" if black[1] < white[1] else "d"


def _lattice_cells(g: PlanarGraph) -> list[tuple]:
    if g.positions is None:
        raise GraphError("rendering needs cell positions")
    cells = [tuple(p) for p in g.positions]
    if not all(isinstance(x, (int, np.integer)) for c in cells for x in c):
        raise GraphError("rendering needs integer lattice cells")
    return cells


def render_matching(m: Matching) -> str:
    cells = _lattice_cells(m.graph)
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, y1 = min(xs), max(ys) + 1
    W, H = (max(xs) + 1 - x0) * SCALE, (y1 - min(ys)) * SCALE
    body = []
    for u, v in sorted(m.pairs()):
        c1, c2 = cells[u], cells[v]
        lo_x, lo_y = min(c1[0], c2[0]), min(c1[1], c2[1])
        w = (abs(c1[0] - c2[0]) + 1) * SCALE
        h = (abs(c1[1] - c2[1]) + 1) * SCALE
        X = (lo_x - x0) * SCALE
        Y = (y1 - lo_y) * SCALE - h
        t = domino_type(c1, c2)
        body.append(f'<rect x="{_f(X)}" y="{_f(Y)}" width="{_f(w)}" height="{_f(h)}" '
                    f'fill="{TYPE_COLORS[t]}" stroke="#000000" stroke-width="1" class="domino-{t}"/>')
    return _svg(W, H, body)


def render_heights(hf: HeightField) -> str:
    corners = hf.corners()
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    x0, y1 = min(xs), max(ys)
    W, H = (max(xs) - x0 + 2) * SCALE, (y1 - min(ys) + 2) * SCALE
    body = []
    for x, y in corners:
        X, Y = (x - x0 + 1) * SCALE, (y1 - y + 1) * SCALE
        body.append(f'<circle cx="{_f(X)}" cy="{_f(Y)}" r="1.5" fill="#000000"/>')
        body.append(f'<text x="{_f(X + 2)}" y="{_f(Y - 2)}" font-size="8">{escape(str(hf[(x, y)]))}</text>')
    return _svg(W, H, body)


def _level_segments(px: np.ndarray, py: np.ndarray, f: np.ndarray, tris: np.ndarray, level: float) -> list:
    """Pieces of the level set {f = level} of a piecewise-linear function."""
    segs = []
    for t in tris:
        pts = []
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            fa, fb = f[a] - level, f[b] - level
            if (fa < 0) != (fb < 0):
                s = fa / (fa - fb)
                pts.append((px[a] + s * (px[b] - px[a]), py[a] + s * (py[b] - py[a])))
        if len(pts) == 2:
            segs.append(pts)
    return segs


def render_surface(surf, levels: int = 16, size: float = 400.0) -> str:
    """Level sets of a limit-shape surface on the diamond |x| + |y| <= 1,
    with the inscribed circle (radius 1/sqrt 2) drawn on top."""
    mesh = surf.mesh
    half = size / 2

    def X(x):
        return half + x * (half - 10)

    def Y(y):
        return half - y * (half - 10)

    body = [f'<polygon points="{_f(X(1))},{_f(Y(0))} {_f(X(0))},{_f(Y(1))} {_f(X(-1))},{_f(Y(0))} '
            f'{_f(X(0))},{_f(Y(-1))}" fill="none" stroke="#000000" stroke-width="1"/>']
    lo, hi = float(surf.f.min()), float(surf.f.max())
    for k in range(1, levels):
        lev = lo + (hi - lo) * k / levels
        for (ax, ay), (bx, by) in _level_segments(mesh.x, mesh.y, surf.f, mesh.tris, lev):
            body.append(f'<line x1="{_f(X(ax))}" y1="{_f(Y(ay))}" x2="{_f(X(bx))}" y2="{_f(Y(by))}" '
                        'stroke="#1f78b4" stroke-width="0.6"/>')
    r = (half - 10) / math.sqrt(2)
    body.append(f'<circle cx="{_f(half)}" cy="{_f(half)}" r="{_f(r)}" fill="none" stroke="#e31a1c" '
                'stroke-width="1.5" class="inscribed-circle"/>')
    return _svg(size, size, body)


def render_svg(obj) -> str:
    from .limitshape import ContinuumSurface

    if isinstance(obj, Matching):
        return render_matching(obj)
    if isinstance(obj, HeightField):
        return render_heights(obj)
    if isinstance(obj, ContinuumSurface):
        return render_surface(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Serialization

MATCHING_SCHEMA = "dimerlab.matching/1"


def matching_to_json(m: Matching) -> str:
    doc = {"schema": MATCHING_SCHEMA, "graph": json.loads(graph_to_json(m.graph)), "edges": sorted(m.edges)}
    return json.dumps(doc, sort_keys=True)


def matching_from_json(text: str) -> Matching:
    doc = json.loads(text)
    if doc.get("schema") != MATCHING_SCHEMA:
        raise ValueError("not a matching document")
    g = graph_from_json(json.dumps(doc["graph"]))
    return Matching(g, frozenset(doc["edges"]))


def serialize(obj, fmt: str) -> bytes:
    """Bytes of ``obj`` in format 'json', 'csv' or 'svg'."""
    from .isoradial import IsoradialEmbedding, embedding_to_json
    from .limitshape import ContinuumSurface

    fmt = fmt.lower()
    if fmt == "svg" and isinstance(obj, (Matching, HeightField, ContinuumSurface)):
        return render_svg(obj).encode("utf-8")
    if fmt == "json":
        if isinstance(obj, PlanarGraph):
            return graph_to_json(obj).encode("utf-8")
        if isinstance(obj, IsoradialEmbedding):
            return embedding_to_json(obj).encode("utf-8")
        if isinstance(obj, Matching):
            return matching_to_json(obj).encode("utf-8")
    if fmt == "csv":
        if isinstance(obj, (HeightField, ContinuumSurface)):
            return obj.to_csv().encode("utf-8")
    raise ValueError(f"unsupported serialization: {type(obj).__name__} as {fmt}")


def deserialize(data: bytes, fmt: str, kind: str):
    """Inverse of ``serialize`` for kind 'graph', 'embedding', 'matching' (json)
    and 'heights' (csv)."""
    from .isoradial import embedding_from_json

    text = data.decode("utf-8")
    table = {
        ("graph", "json"): graph_from_json,
        ("embedding", "json"): embedding_from_json,
        ("matching", "json"): matching_from_json,
        ("heights", "csv"): HeightField.from_csv,
    }
    try:
        fn = table[(kind, fmt.lower())]
    except KeyError:
        raise ValueError(f"unsupported deserialization: {kind} from {fmt}") from None
    return fn(text)
