"""Command-line front end.

Exit codes: 0 success, 1 computational refusal (flatness violation, invalid
embedding, singular matrix, ...), 2 usage error (bad arguments, malformed
region spec, unreadable input file).

Region specs: ``rect:MxN``, ``aztec:N``, ``torus:MxN[:a,b,c,d]``,
``temperley:MxN``, ``file:PATH`` (graph JSON).

Randomness: one ``numpy.random.Generator`` seeded from ``--seed`` (PCG64).
The environment variable DIMERLAB_THREADS caps the worker threads of the
numerical libraries.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction

SCHEMA = "dimerlab.cli/1"
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS")


class UsageError(Exception):
    """Malformed arguments or unreadable input (exit code 2)."""


class Refusal(Exception):
    """The computation was refused (exit code 1)."""


# ---------------------------------------------------------------------------
# Region specs


@dataclass(frozen=True)
class RegionSpec:
    kind: str
    dims: tuple
    weights: tuple | None = None
    path: str | None = None


_DIMS = re.compile(r"^(\d+)x(\d+)$")


def _dims(text: str, spec: str) -> tuple[int, int]:
    m = _DIMS.match(text)
    if not m:
        raise UsageError(f"malformed dimensions {text!r} in region spec {spec!r} (expected MxN)")
    a, b = int(m.group(1)), int(m.group(2))
    if a < 1 or b < 1:
        raise UsageError(f"dimensions must be positive in region spec {spec!r}")
    return a, b


def _number(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def parse_region(spec: str) -> RegionSpec:
    kind, _, rest = spec.partition(":")
    if kind == "rect":
        return RegionSpec("rect", _dims(rest, spec))
    if kind == "temperley":
        return RegionSpec("temperley", _dims(rest, spec))
    if kind == "aztec":
        if not rest.isdigit() or int(rest) < 1:
            raise UsageError(f"malformed region spec {spec!r} (expected aztec:N with N >= 1)")
        return RegionSpec("aztec", (int(rest),))
    if kind == "torus":
        size, _, wts = rest.partition(":")
        m, n = _dims(size, spec)
        if m % 2 or n % 2:
            raise UsageError(f"torus dimensions must be even in {spec!r}")
        weights = None
        if wts:
            parts = wts.split(",")
            if len(parts) != 4:
                raise UsageError(f"torus weights need four values a,b,c,d in {spec!r}")
            weights = tuple(_number(p) for p in parts)
            if any(w <= 0 for w in weights):
                raise UsageError(f"torus weights must be positive in {spec!r}")
        return RegionSpec("torus", (m, n), weights)
    if kind == "file":
        if not rest:
            raise UsageError("file: spec needs a path")
        return RegionSpec("file", (), None, rest)
    raise UsageError(f"unknown region kind {kind!r} in {spec!r}")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def build_graph(rs: RegionSpec):
    from .graphs import Region, build_aztec, build_rectangle, build_temperley, graph_from_json

    if rs.kind == "rect":
        return build_rectangle(*rs.dims)
    if rs.kind == "aztec":
        return build_aztec(rs.dims[0])
    if rs.kind == "temperley":
        return build_temperley(Region.rectangle(*rs.dims))
    if rs.kind == "file":
        try:
            return graph_from_json(_read(rs.path))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed graph file {rs.path}: {exc}") from None
    raise UsageError(f"{rs.kind} regions are not planar graphs")


# ---------------------------------------------------------------------------
# Output helpers


def _jsonable(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    return x


def write_atomic(path: str, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".dimerlab-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, payload: dict, text: str, out) -> None:
    if args.json:
        doc = {"schema": SCHEMA, "command": args.command, **_jsonable(payload)}
        out.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        out.write(text.rstrip("\n") + "\n")


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    return str(v)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_count(args, out):
    from .kasteleyn import build_kasteleyn, count_matchings, torus_partition
    from .graphs import TorusGraph

    rs = parse_region(args.region)
    if rs.kind == "torus":
        t = TorusGraph(*rs.dims, *(rs.weights or (1, 1, 1, 1)))
        tc = torus_partition(t)
        val = tc.value
        _emit(args, {"region": args.region, "count": val, "log_count": tc.log_value, "exact": tc.exact},
              _fmt_value(val), out)
        return 0
    g = build_graph(rs)
    c = count_matchings(build_kasteleyn(g))
    _emit(args, {"region": args.region, "count": c.value, "exact": c.exact}, _fmt_value(c.value), out)
    return 0


def _samples(rs: RegionSpec, g, count: int, seed: int):
    import numpy as np

    from .graphs import Region, boundary_corners
    from .kasteleyn import build_kasteleyn
    from .localstats import sample_matchings
    from .ust import TemperleySampler

    if rs.kind == "temperley":
        region = Region.rectangle(*rs.dims)
        s = TemperleySampler(region, min(boundary_corners(region), key=lambda c: (c[1], c[0])))
        rng = np.random.default_rng(seed)
        return [s.matching(s.sample_tree(rng), g) for _ in range(count)]
    return sample_matchings(build_kasteleyn(g), count, seed)


def cmd_sample(args, out):
    from .render import matching_to_json, render_svg

    rs = parse_region(args.region)
    if rs.kind == "torus":
        raise UsageError("sampling is available for planar regions only")
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    g = build_graph(rs)
    ms = _samples(rs, g, args.count, args.seed)
    if args.svg:
        write_atomic(args.svg, render_svg(ms[0]).encode("utf-8"))
    if args.out:
        write_atomic(args.out, matching_to_json(ms[0]).encode("utf-8"))
    lists = [sorted(m.edges) for m in ms]
    _emit(args, {"region": args.region, "seed": args.seed, "generator": "PCG64", "samples": lists},
          "\n".join(" ".join(map(str, lst)) for lst in lists), out)
    return 0


def cmd_prob(args, out):
    from .kasteleyn import build_kasteleyn
    from .localstats import dimer_probability, edge_probabilities, invert_kasteleyn

    rs = parse_region(args.region)
    if rs.kind == "torus":
        raise UsageError("edge probabilities are available for planar regions only")
    g = build_graph(rs)
    inv = invert_kasteleyn(build_kasteleyn(g))
    if args.edges:
        try:
            ids = [int(x) for x in args.edges.split(",")]
        except ValueError:
            raise UsageError("--edges takes comma-separated edge ids") from None
        if any(not 0 <= e < g.n_edges for e in ids):
            raise UsageError(f"edge ids must lie in 0..{g.n_edges - 1}")
        p = dimer_probability(inv, [g.edges[e] for e in ids])
        _emit(args, {"region": args.region, "edges": ids, "probability": p}, _fmt_value(p), out)
        return 0
    probs = edge_probabilities(inv)
    lines = [f"{e},{g.edges[e][0]},{g.edges[e][1]},{_fmt_value(p)}" for e, p in enumerate(probs)]
    _emit(args, {"region": args.region, "probabilities": list(probs)}, "edge,white,black,probability\n" + "\n".join(lines), out)
    return 0


def cmd_heights(args, out):
    from .heights import height_function
    from .render import render_svg

    rs = parse_region(args.region)
    if rs.kind == "torus":
        raise UsageError("use the torus subcommand for torus regions")
    g = build_graph(rs)
    m = _samples(rs, g, 1, args.seed)[0]
    hf = height_function(m)
    if args.csv:
        write_atomic(args.csv, hf.to_csv().encode("utf-8"))
    if args.svg:
        write_atomic(args.svg, render_svg(hf).encode("utf-8"))
    _emit(args, {"region": args.region, "seed": args.seed,
                 "heights": [[x, y, hf[(x, y)]] for x, y in hf.corners()]}, hf.to_csv(), out)
    return 0


def cmd_limit_shape(args, out):
    import numpy as np

    from .limitshape import interface_radii, maximize_surface
    from .render import render_svg

    if args.mesh < 2:
        raise UsageError("--mesh must be at least 2")
    surf = maximize_surface(args.mesh, args.trace)
    frac = surf.frozen_fraction()
    payload = {"mesh": args.mesh, "trace": args.trace, "objective": surf.objective, "frozen_fraction": frac}
    if args.trace == "aztec":
        r = interface_radii(surf)
        payload["interface_within_cell"] = float(np.mean(np.abs(r - 1 / np.sqrt(2)) <= surf.mesh.h))
    if args.csv:
        write_atomic(args.csv, surf.to_csv().encode("utf-8"))
    if args.svg:
        write_atomic(args.svg, render_svg(surf).encode("utf-8"))
    text = "\n".join(f"{k}: {_fmt_value(v)}" for k, v in payload.items())
    _emit(args, payload, text, out)
    return 0


FK_GRAPHS = ("triangle", "square", "grid:MxN", "file:PATH")


def _fk_graph(spec: str):
    from .graphs import graph_from_json, graph_from_positions

    if spec == "triangle":
        return graph_from_positions([(0, 0), (2, 0), (1, 2)], [(0, 1), (1, 2), (2, 0)])
    if spec == "square":
        return graph_from_positions([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1), (1, 2), (2, 3), (3, 0)])
    if spec.startswith("grid:"):
        m, n = _dims(spec[5:], spec)
        pts = [(i, j) for j in range(n) for i in range(m)]
        edges = [(j * m + i, j * m + i + 1) for j in range(n) for i in range(m - 1)]
        edges += [(j * m + i, (j + 1) * m + i) for j in range(n - 1) for i in range(m)]
        if not edges:
            raise UsageError("grid graph has no edges")
        return graph_from_positions(pts, edges)
    if spec.startswith("file:"):
        try:
            return graph_from_json(_read(spec[5:]))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed graph file: {exc}") from None
    raise UsageError(f"unknown FK graph {spec!r}; expected one of {', '.join(FK_GRAPHS)}")


def cmd_fk(args, out):
    from .fk import MAX_EDGES, FKModel, fk_report

    g = _fk_graph(args.graph)
    if g.n_edges > MAX_EDGES:
        raise Refusal(f"{g.n_edges} edges exceed the exhaustive limit of {MAX_EDGES}")
    q = _number(args.q)
    weights = None
    if args.weight is not None:
        weights = [_number(args.weight)] * g.n_edges
    model = FKModel.from_graph(g, q, weights)
    rep = fk_report(model)
    text = "\n".join(f"{k}: {v}" for k, v in rep.items() if k != "component_histogram")
    _emit(args, {"graph": args.graph, "q": q, **rep}, text, out)
    return 0


def _embedding(spec: str):
    from .isoradial import (embedding_from_json, honeycomb_patch, periodic_honeycomb, periodic_square,
                            square_rectangle)

    if spec == "periodic:square":
        return periodic_square()
    if spec == "periodic:honeycomb":
        return periodic_honeycomb()
    if spec.startswith("square:"):
        return square_rectangle(*_dims(spec[7:], spec))
    if spec.startswith("honeycomb:"):
        n = spec[10:]
        if not n.isdigit() or int(n) < 1:
            raise UsageError(f"malformed embedding spec {spec!r}")
        return honeycomb_patch(int(n))
    path = spec[5:] if spec.startswith("file:") else spec
    try:
        return embedding_from_json(_read(path))
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed embedding file {path}: {exc}") from None


def cmd_isoradial(args, out):
    from .isoradial import (IsoradialError, PeriodicEmbedding, det1_torus, hyperbolic_volume, logZ_per_site,
                            validate_isoradial)

    emb = _embedding(args.embedding)
    payload: dict = {"embedding": args.embedding}
    lines = []
    ok = True
    if args.check or not args.logz:
        rep = emb.validate() if isinstance(emb, PeriodicEmbedding) else validate_isoradial(emb)
        ok = rep.ok
        payload["valid"] = rep.ok
        payload["violations"] = rep.violations
        lines.append("valid" if rep.ok else "invalid")
        lines += [f"  {v}" for v in rep.violations]
    if args.logz:
        if not isinstance(emb, PeriodicEmbedding):
            raise Refusal("log Z per site needs a periodic embedding (periodic:square, periodic:honeycomb)")
        try:
            lz = float(logZ_per_site(emb))
            vol = hyperbolic_volume(emb)
        except IsoradialError as exc:
            raise Refusal(str(exc)) from None
        payload.update({"logZ_per_site": lz, "volume": vol.volume,
                        "mean_curvature_term": vol.mean_curvature_term, "identity_residual": vol.residual})
        lines.append(f"logZ_per_site: {lz!r}")
        lines.append(f"volume: {vol.volume!r}")
        if args.torus_check:
            d1 = det1_torus(emb, args.torus_check)
            payload["det1_torus"] = d1
            lines.append(f"det1 on {args.torus_check}x{args.torus_check} torus: {d1!r}")
    _emit(args, payload, "\n".join(lines), out)
    return 0 if ok else 1


def cmd_torus(args, out):
    from .graphs import TorusGraph
    from .kasteleyn import torus_partition

    rs = parse_region(args.region if args.region.startswith("torus:") else "torus:" + args.region)
    t = TorusGraph(*rs.dims, *(rs.weights or (1, 1, 1, 1)))
    tc = torus_partition(t)
    per_site = tc.log_value / t.n_vertices
    payload = {"size": list(rs.dims), "weights": list(rs.weights or (1, 1, 1, 1)), "Z": tc.value,
               "log_Z": tc.log_value, "log_Z_per_site": per_site, "signs": list(tc.signs), "exact": tc.exact}
    text = "\n".join(f"{k}: {_fmt_value(v)}" for k, v in payload.items())
    _emit(args, payload, text, out)
    return 0


COMMANDS = {
    "count": cmd_count, "sample": cmd_sample, "prob": cmd_prob, "heights": cmd_heights,
    "limit-shape": cmd_limit_shape, "fk": cmd_fk, "isoradial": cmd_isoradial, "torus": cmd_torus,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help=f"machine-readable output (schema {SCHEMA})")
    p = _Parser(prog="dimerlab", description="Exact dimer, limit-shape, FK and isoradial computations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("count", parents=[common], help="number of perfect matchings")
    s.add_argument("--region", required=True, help="rect:MxN | aztec:N | torus:MxN[:a,b,c,d] | temperley:MxN | file:PATH")

    s = sub.add_parser("sample", parents=[common], help="exact uniform samples")
    s.add_argument("--region", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--svg", help="write the first sample as SVG")
    s.add_argument("--out", help="write the first sample as matching JSON")

    s = sub.add_parser("prob", parents=[common], help="edge probabilities")
    s.add_argument("--region", required=True)
    s.add_argument("--edges", help="comma-separated edge ids: joint probability")

    s = sub.add_parser("heights", parents=[common], help="height function of a sample")
    s.add_argument("--region", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")
    s.add_argument("--svg")

    s = sub.add_parser("limit-shape", parents=[common], help="maximize the surface entropy")
    s.add_argument("--mesh", type=int, default=64)
    s.add_argument("--trace", choices=("aztec", "flat"), default="aztec")
    s.add_argument("--csv")
    s.add_argument("--svg")

    s = sub.add_parser("fk", parents=[common], help="exact FK partition function and duality")
    s.add_argument("--graph", required=True, help="triangle | square | grid:MxN | file:PATH")
    s.add_argument("--q", required=True)
    s.add_argument("--weight", help="common edge weight (default: the graph's weights)")

    s = sub.add_parser("isoradial", parents=[common], help="isoradial validation and log Z per site")
    s.add_argument("--embedding", required=True,
                   help="embedding JSON path | square:MxN | honeycomb:N | periodic:square | periodic:honeycomb")
    s.add_argument("--check", action="store_true")
    s.add_argument("--logz", action="store_true")
    s.add_argument("--torus-check", type=int, metavar="N", help="also compute det1 on the N x N torus")

    s = sub.add_parser("torus", parents=[common], help="torus partition function")
    s.add_argument("region", help="MxN[:a,b,c,d]")
    return p


def _cap_threads() -> None:
    val = os.environ.get("DIMERLAB_THREADS")
    if val is None:
        return
    if not val.isdigit() or int(val) < 1:
        raise UsageError("DIMERLAB_THREADS must be a positive integer")
    for var in THREAD_VARS:
        os.environ.setdefault(var, val)


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    from .fk import FKError
    from .graphs import GraphError
    from .isoradial import IsoradialError
    from .kasteleyn import CalibrationError, FlatnessError
    from .limitshape import InadmissibleBoundary
    from .localstats import SamplerError, SingularError

    try:
        _cap_threads()
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"dimerlab: usage error: {exc}\n")
        return 2
    except (Refusal, FlatnessError, SingularError, SamplerError, IsoradialError, InadmissibleBoundary,
            CalibrationError, FKError, GraphError) as exc:
        err.write(f"dimerlab: {exc}\n")
        return 1


def main() -> None:
    try:
        code = run()
    except SystemExit as exc:  # --help
        code = exc.code if isinstance(exc.code, int) else 0
    sys.exit(code)


if __name__ == "__main__":
    main()
