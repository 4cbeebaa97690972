from __future__ import annotations

import io
import json
import os
import subprocess
import sys

import pytest

from dimerlab.cli import SCHEMA, parse_region, run
from dimerlab.graphs import build_aztec, build_rectangle, graph_to_json
from dimerlab.heights import HeightField, height_function
from dimerlab.isoradial import embedding_to_json, square_rectangle
from dimerlab.kasteleyn import build_kasteleyn
from dimerlab.localstats import sample_matching
from dimerlab.render import deserialize, domino_type, matching_from_json, matching_to_json, render_svg, serialize


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


# --- rendering and serialization ----------------------------------------------------

def test_domino_types():
    assert domino_type((0, 0), (1, 0)) == "a"
    assert domino_type((1, 0), (2, 0)) == "b"
    assert domino_type((0, 0), (0, 1)) == "c"
    assert domino_type((0, 1), (0, 2)) == "d"


def test_matching_svg_is_deterministic():
    m = sample_matching(build_kasteleyn(build_aztec(4)), seed=9)
    a, b = render_svg(m), render_svg(m)
    assert a == b
    assert a.count("<rect") == len(m.edges)


def test_matching_json_round_trip():
    m = sample_matching(build_kasteleyn(build_rectangle(4, 6)), seed=1)
    back = matching_from_json(matching_to_json(m))
    assert back.edges == m.edges
    assert deserialize(serialize(m, "json"), "json", "matching").edges == m.edges


def test_other_round_trips():
    g = build_rectangle(3, 4)
    assert graph_to_json(deserialize(serialize(g, "json"), "json", "graph")) == graph_to_json(g)
    hf = height_function(sample_matching(build_kasteleyn(g), seed=0))
    assert deserialize(serialize(hf, "csv"), "csv", "heights").heights == hf.heights
    emb = square_rectangle(2, 2)
    assert deserialize(serialize(emb, "json"), "json", "embedding").graph.edges == emb.graph.edges


def test_unsupported_format():
    with pytest.raises(ValueError):
        serialize(build_rectangle(2, 2), "svg")
    with pytest.raises(ValueError):
        deserialize(b"", "xml", "graph")


def test_height_svg():
    hf = HeightField({(0, 0): 0, (1, 0): 1}, (0, 0))
    assert "<text" in render_svg(hf)


# --- region grammar --------------------------------------------------------------------

@pytest.mark.parametrize("spec,kind", [("rect:2x3", "rect"), ("aztec:3", "aztec"), ("torus:4x6", "torus"),
                                       ("torus:4x4:1,2,1/2,3", "torus"), ("temperley:3x2", "temperley"),
                                       ("file:g.json", "file")])
def test_parse_region(spec, kind):
    assert parse_region(spec).kind == kind


@pytest.mark.parametrize("spec", ["rect:0x3", "rect:3", "aztec:0", "aztec:x", "torus:3x4", "torus:4x4:1,2,3",
                                  "torus:4x4:1,0,1,1", "hex:3", "file:", "rect:-1x2"])
def test_malformed_regions_exit_2(spec):
    code, _, err = cli("count", "--region", spec)
    assert code == 2
    assert "usage error" in err


# --- commands ------------------------------------------------------------------------------

def test_count_chessboard():
    assert cli("count", "--region", "rect:8x8")[:2] == (0, "12988816\n")


def test_count_json_schema():
    code, out, _ = cli("count", "--region", "aztec:3", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == SCHEMA
    assert doc["count"] == 64


def test_count_torus_and_temperley():
    assert cli("count", "--region", "torus:4x4")[1] == "272\n"
    # Temperleyan tilings of a 3 x 3 grid region = spanning trees of the 4 x 4 grid graph
    assert cli("count", "--region", "temperley:3x3")[1] == "100352\n"


def test_count_from_file(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(graph_to_json(build_rectangle(2, 4)))
    assert cli("count", "--region", f"file:{p}")[1] == "5\n"


def test_malformed_file_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli("count", "--region", f"file:{p}")[0] == 2
    assert cli("count", "--region", f"file:{tmp_path / 'missing.json'}")[0] == 2


def test_sample_svg_bytes_reproducible(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert cli("sample", "--region", "aztec:8", "--seed", "1", "--svg", str(a))[0] == 0
    assert cli("sample", "--region", "aztec:8", "--seed", "1", "--svg", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.svg"
    cli("sample", "--region", "aztec:8", "--seed", "2", "--svg", str(c))
    assert c.read_bytes() != a.read_bytes()
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".dimerlab-")]


def test_sample_json_output(tmp_path):
    out = tmp_path / "m.json"
    code, text, _ = cli("sample", "--region", "rect:4x4", "--seed", "3", "--count", "4", "--json", "--out", str(out))
    doc = json.loads(text)
    assert code == 0 and len(doc["samples"]) == 4
    assert sorted(matching_from_json(out.read_text()).edges) == doc["samples"][0]


def test_prob_commands():
    code, out, _ = cli("prob", "--region", "rect:2x2")
    assert code == 0 and out.count("1/2") == 4
    code, out, _ = cli("prob", "--region", "rect:2x2", "--edges", "0,1")
    assert (code, out) == (0, "0\n")
    assert cli("prob", "--region", "rect:2x2", "--edges", "9")[0] == 2


def test_prob_untileable_exit_1(tmp_path):
    # a balanced 6-cell region without tilings: the inverse does not exist
    code, _, err = cli("prob", "--region", f"file:{_untileable_file(tmp_path)}")
    assert code == 1
    assert "dimerlab:" in err


def _untileable_file(tmp_path):
    from corpora import free_polyominoes
    from dimerlab.graphs import Region, brute_force_matchings, region_graph

    g = next(g for g in map(region_graph, map(Region, free_polyominoes(6)))
             if len(g.whites()) == len(g.blacks()) and not brute_force_matchings(g))
    path = tmp_path / "untileable.json"
    path.write_text(graph_to_json(g))
    return path


def test_heights_command(tmp_path):
    csv = tmp_path / "h.csv"
    code, out, _ = cli("heights", "--region", "aztec:3", "--seed", "4", "--csv", str(csv))
    assert code == 0
    assert csv.read_text() == out


def test_limit_shape_command(tmp_path):
    svg = tmp_path / "s.svg"
    code, out, _ = cli("limit-shape", "--mesh", "16", "--json", "--svg", str(svg))
    doc = json.loads(out)
    assert code == 0 and 0 < doc["frozen_fraction"] < 1
    assert 'class="inscribed-circle"' in svg.read_text()
    assert cli("limit-shape", "--mesh", "1")[0] == 2


def test_fk_command():
    code, out, _ = cli("fk", "--graph", "triangle", "--q", "2", "--json")
    doc = json.loads(out)
    assert (code, doc["Z"], doc["Z_dual"], doc["duality_constant"]) == (0, "28", "56", "2")
    assert cli("fk", "--graph", "triangle", "--q", "-1")[0] == 1
    assert cli("fk", "--graph", "grid:5x5", "--q", "2")[0] == 1
    assert cli("fk", "--graph", "blob", "--q", "2")[0] == 2


def test_isoradial_command(tmp_path):
    assert cli("isoradial", "--embedding", "square:3x3", "--check")[:2] == (0, "valid\n")
    code, out, _ = cli("isoradial", "--embedding", "periodic:square", "--logz", "--json")
    assert code == 0
    assert json.loads(out)["logZ_per_site"] == pytest.approx(0.464848, abs=1e-6)
    assert cli("isoradial", "--embedding", "square:3x3", "--logz")[0] == 1
    from isoradial_corpus import invalid_corpus

    name, bad = invalid_corpus()[1]
    p = tmp_path / "e.json"
    p.write_text(embedding_to_json(bad))
    code, out, _ = cli("isoradial", "--embedding", str(p), "--check")
    assert code == 1, name
    assert out.startswith("invalid")


def test_torus_command():
    code, out, _ = cli("torus", "6x6:1,2,3,4", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["exact"]
    assert doc["Z"] == 2216711779880


def test_threads_env(monkeypatch):
    monkeypatch.setenv("DIMERLAB_THREADS", "0")
    assert cli("count", "--region", "rect:2x2")[0] == 2
    monkeypatch.setenv("DIMERLAB_THREADS", "2")
    assert cli("count", "--region", "rect:2x2")[0] == 0


def test_missing_command_exit_2():
    assert cli()[0] == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "dimerlab.cli", "count", "--region", "rect:2x3"],
                       capture_output=True, text=True)
    assert (r.returncode, r.stdout) == (0, "3\n")
    r = subprocess.run([sys.executable, "-m", "dimerlab.cli", "count", "--region", "rect:0x3"],
                       capture_output=True, text=True)
    assert r.returncode == 2
