"""Acceptance suite: one block per criterion, each test tagged with
``@pytest.mark.criterion(n, title)``. The terminal summary prints one
pass/fail line per criterion (see conftest.py)."""
from __future__ import annotations

import itertools
import math
import random
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from corpora import simply_connected_regions, small_planar_graphs
from dimerlab.entropy import CATALAN, KAPPA, ent
from dimerlab.fk import (FKModel, YDeltaTriple, critical_probability, critical_third, critq1_residual,
                         critq2_residual, fk_dual_model, fk_edge_marginals, fk_partition, ydelta_ratios,
                         ydelta_transform)
from dimerlab.graphs import (GraphError, Region, TorusGraph, brute_force_matchings, build_aztec, build_rectangle,
                             build_temperley, coarse_graph, region_graph, temperley_region)
from dimerlab.heights import boundary_heights, face_sums, height_function, lipschitz_violations
from dimerlab.isoradial import (chains_monotone, det1_torus, honeycomb_patch, hyperbolic_volume, logZ_per_site,
                                periodic_grid, periodic_honeycomb, periodic_square, square_rectangle,
                                validate_isoradial)
from dimerlab.kasteleyn import (brute_force_torus, build_kasteleyn, count_matchings, log_count,
                                rectangle_spectral_count, torus_partition)
from dimerlab.limitshape import interface_radii, maximize_surface
from dimerlab.localstats import (dimer_probability, edge_probabilities, invert_kasteleyn, plane_inverse,
                                 rectangle_inverse_columns, sample_matchings)
from dimerlab.ust import height_covariance_mc
from isoradial_corpus import central_white, invalid_corpus, kk_inverse_residual, valid_corpus

criterion = pytest.mark.criterion


# ---------------------------------------------------------------------------
# 1. Exact counts

C1 = "exact counts: 2x3, 8x8 and all small simply connected regions vs enumeration"


@criterion(1, C1)
@pytest.mark.parametrize("m,n,expected", [(2, 3, 3), (8, 8, 12988816)])
def test_c1_named_counts(m, n, expected):
    t0 = time.perf_counter()
    c = count_matchings(build_kasteleyn(build_rectangle(m, n)))
    assert time.perf_counter() - t0 < 1.0
    assert c.exact and c.value == expected


@criterion(1, C1)
def test_c1_two_by_three_full_determinant_is_nine():
    d = count_matchings(build_kasteleyn(build_rectangle(2, 3))).det
    assert d.norm() == 9


@criterion(1, C1)
def test_c1_polyomino_oracle():
    regions = simply_connected_regions(max_exhaustive=9, sampled_sizes=(10, 11, 12), per_size=150)
    assert len(regions) > 500
    for r in regions:
        g = region_graph(r)
        assert count_matchings(build_kasteleyn(g)).value == len(brute_force_matchings(g)), sorted(r.cells)


@criterion(1, C1)
def test_c1_temperley_balanced_and_counts_spanning_trees():
    import networkx as nx

    for cells in ({(0, 0)}, {(0, 0), (1, 0), (1, 1)}, {(x, y) for x in range(3) for y in range(2)},
                  {(0, 0), (1, 0), (2, 0), (1, 1), (1, 2)}):
        region = Region(frozenset(cells))
        g = build_temperley(region)
        assert len(g.whites()) == len(g.blacks())
        _, coarse_edges = coarse_graph(region)
        trees = round(nx.number_of_spanning_trees(nx.Graph(coarse_edges)))
        assert count_matchings(build_kasteleyn(g)).value == trees


@criterion(1, C1)
@pytest.mark.parametrize("cells", [
    {(x, y) for x in range(3) for y in range(3)} - {(1, 1)},
    {(0, 0), (0, -1), (1, -1), (2, -1), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)},
], ids=["annulus", "enclosure"])
def test_c1_temperley_euler_guard(cells):
    with pytest.raises(GraphError, match="Euler"):
        temperley_region(Region(frozenset(cells)))


# ---------------------------------------------------------------------------
# 2. Spectral consistency

@criterion(2, "spectral product vs exact count, relative error <= 1e-9 for m, n <= 12")
def test_c2_spectral_consistency():
    for m in range(1, 13):
        for n in range(m, 13):
            exact_val = count_matchings(build_kasteleyn(build_rectangle(m, n))).value
            spec = rectangle_spectral_count(m, n)
            if exact_val == 0:
                assert spec == 0.0
            else:
                assert abs(spec - exact_val) <= 1e-9 * exact_val, (m, n)


# ---------------------------------------------------------------------------
# 3. Catalan limit

@criterion(3, "per-site log count tends to G/pi on squares and tori")
def test_c3_catalan_limit():
    t0 = time.perf_counter()
    target = CATALAN / math.pi
    vals = []
    for n in (16, 32, 64):
        k = build_kasteleyn(build_rectangle(n, n))
        lc = math.log(count_matchings(k).value) if n == 16 else log_count(k)
        vals.append(lc / (n * n))
    assert vals[0] < vals[1] < vals[2] < target
    assert abs(vals[2] - target) <= 0.02
    torus = torus_partition(TorusGraph(64, 64, 1, 1, 1, 1))
    assert abs(torus.log_value / (64 * 64) - target) <= 0.01
    assert time.perf_counter() - t0 < 60


# ---------------------------------------------------------------------------
# 4. Torus calibration

@criterion(4, "calibrated four-determinant torus formula equals enumeration exactly")
@pytest.mark.parametrize("m,n", [(2, 2), (2, 4), (4, 2), (4, 4)])
@pytest.mark.parametrize("weights", [(1, 1, 1, 1), (Fraction(2), Fraction(3, 2), Fraction(5, 7), Fraction(1, 3))])
def test_c4_torus_calibration(m, n, weights):
    t = TorusGraph(m, n, *weights)
    res = torus_partition(t)
    assert res.exact
    assert res.value == brute_force_torus(t)


# ---------------------------------------------------------------------------
# 5. Local statistics oracle

def _local_stats_corpus():
    out = []
    regions = simply_connected_regions(max_exhaustive=9, sampled_sizes=(10, 11, 12, 13, 14), per_size=20)
    graphs = [region_graph(r) for r in regions]
    graphs += [g for g in small_planar_graphs().values() if g.colors is not None]
    graphs += [build_aztec(2)]
    for g in graphs:
        if g.n_vertices <= 14 and len(g.whites()) == len(g.blacks()):
            ms = brute_force_matchings(g)
            if ms:
                out.append((g, [frozenset(m.edges) for m in ms]))
    return out


@criterion(5, "dimer_probability equals enumeration for all edge sets of size <= 3")
def test_c5_local_statistics_oracle():
    corpus = _local_stats_corpus()
    assert len(corpus) > 300
    for g, sets in corpus:
        inv = invert_kasteleyn(build_kasteleyn(g))
        for r in (1, 2, 3):
            for T in itertools.combinations(range(g.n_edges), r):
                hits = sum(1 for s in sets if s.issuperset(T))
                assert dimer_probability(inv, [g.edges[e] for e in T]) == Fraction(hits, len(sets))


# ---------------------------------------------------------------------------
# 6. Sampler correctness

C6 = "sampler: uniform on the 2x3 tilings, 2x4 marginals within 4 sigma"


@criterion(6, C6)
def test_c6_two_by_three_uniform():
    t0 = time.perf_counter()
    g = build_rectangle(2, 3)
    samples = sample_matchings(build_kasteleyn(g), 10_000, seed=11)
    counts = Counter(m.edges for m in samples)
    assert len(counts) == 3
    assert chisquare(list(counts.values())).pvalue > 0.01
    assert time.perf_counter() - t0 < 30


@criterion(6, C6)
def test_c6_two_by_four_marginals():
    t0 = time.perf_counter()
    g = build_rectangle(2, 4)
    k = build_kasteleyn(g)
    N = 100_000
    samples = sample_matchings(k, N, seed=12)
    freq = np.zeros(g.n_edges)
    for m in samples:
        for e in m.edges:
            freq[e] += 1
    probs = np.array([float(p) for p in edge_probabilities(invert_kasteleyn(k))])
    sigma = np.sqrt(probs * (1 - probs) / N)
    assert np.all(np.abs(freq / N - probs) <= 4 * sigma + 1e-12)
    assert time.perf_counter() - t0 < 30


# ---------------------------------------------------------------------------
# 7. Plane inverse

C7 = "plane inverse vs 100x100 rectangle centre; decay like 1/(pi z)"


def _centre_deviation(L: int) -> tuple[float, dict, tuple]:
    w = (L // 2 + 1, L // 2)
    cols, _ = rectangle_inverse_columns(L, L, [w])
    col = cols[w]
    dev = 0.0
    for x in range(-10, 11):
        for y in range(-10, 11):
            if (x + y) % 2 and x * x + y * y <= 100:
                dev = max(dev, abs(col[(w[0] + x, w[1] + y)] - plane_inverse(x, y)))
    return dev, col, w


@criterion(7, C7)
@pytest.mark.xfail(strict=True, reason="finite-size term ~0.41/L gives 4.5e-3 at L = 100 (exception log D7)")
def test_c7_centre_matches_plane_to_1e3():
    dev, _, _ = _centre_deviation(100)
    assert dev <= 1e-3


@criterion(7, C7)
def test_c7_deviation_decays_like_one_over_L_and_extrapolates():
    d100, c100, w100 = _centre_deviation(100)
    d200, c200, w200 = _centre_deviation(200)
    assert 1.8 < d100 / d200 < 2.2
    # Richardson extrapolation in 1/L removes the boundary term
    worst = 0.0
    for x in range(-10, 11):
        for y in range(-10, 11):
            if (x + y) % 2 and x * x + y * y <= 100:
                a = c100[(w100[0] + x, w100[1] + y)]
                b = c200[(w200[0] + x, w200[1] + y)]
                worst = max(worst, abs(2 * b - a - plane_inverse(x, y)))
    assert worst <= 1e-3


@criterion(7, C7)
def test_c7_decay_fit():
    rng = random.Random(5)
    pts = [(x, y) for x in range(0, 41) for y in range(0, 41) if (x + y) % 2 and 5 <= math.hypot(x, y) <= 40]
    for x, y in rng.sample(pts, 60):
        z = complex(x, y)
        f = 1 / (math.pi * z)
        pred = f.real if x % 2 else f.imag
        val = plane_inverse(x, y)
        got = val.real if x % 2 else val.imag
        assert abs(got - pred) <= 0.10 * abs(f), (x, y)


# ---------------------------------------------------------------------------
# 8. Heights

C8 = "height closedness and Lipschitz bounds on 10^3 samples; Aztec boundary linear per side"


@criterion(8, C8)
@pytest.mark.parametrize("g", [build_rectangle(8, 8), build_aztec(8)], ids=["square8", "aztec8"])
def test_c8_heights_on_samples(g):
    cells = [tuple(p) for p in g.positions]
    bad = 0
    for m in sample_matchings(build_kasteleyn(g), 1000, seed=8):
        hf = height_function(m)
        bad += sum(1 for s in face_sums(hf, cells) if s != 0)
        bad += lipschitz_violations(hf)
    assert bad == 0


@criterion(8, C8)
def test_c8_aztec_boundary_linear():
    n = 8
    bh = boundary_heights(Region.aztec(n))
    for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        side = [c for c in bh.corners() if c[0] * sx >= 0 and c[1] * sy >= 0]
        layers: dict = {}
        for x, y in side:
            layers.setdefault(abs(x) + abs(y), []).append((x, bh[(x, y)]))
        assert len(layers) == 2
        for pts in layers.values():
            pts.sort()
            hs = np.array([h for _, h in pts], float)
            xs = np.array([x for x, _ in pts], float)
            slope = np.diff(hs) / np.diff(xs)
            assert np.allclose(slope, slope[0])


# ---------------------------------------------------------------------------
# 9. Arctic circle

@criterion(9, "Aztec limit shape at mesh 128: frozen fraction and interface on the circle")
def test_c9_arctic_circle():
    t0 = time.perf_counter()
    surf = maximize_surface(128, "aztec")
    assert time.perf_counter() - t0 < 300
    assert abs(surf.frozen_fraction() - (1 - math.pi / 4)) <= 0.02
    r = interface_radii(surf)
    assert np.mean(np.abs(r - 1 / math.sqrt(2)) <= surf.mesh.h) >= 0.95


# ---------------------------------------------------------------------------
# 10. Entropy normalization

C10 = "KAPPA ent(0,0) vs 64x64 torus per-site log count; ent concavity"


@criterion(10, C10)
def test_c10_entropy_normalization():
    torus = torus_partition(TorusGraph(64, 64, 1, 1, 1, 1))
    assert abs(KAPPA * ent(0.0, 0.0) - torus.log_value / (64 * 64)) <= 0.01


_slope = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).filter(lambda p: abs(p[0]) + abs(p[1]) <= 2)


@criterion(10, C10)
@settings(max_examples=300, deadline=None)
@given(_slope, _slope, st.floats(0, 1))
def test_c10_ent_concave(p, q, lam):
    mid = (lam * p[0] + (1 - lam) * q[0], lam * p[1] + (1 - lam) * q[1])
    if abs(mid[0]) + abs(mid[1]) > 2:
        return
    assert ent(*mid) >= lam * ent(*p) + (1 - lam) * ent(*q) - 1e-12


@criterion(10, C10)
@settings(max_examples=200, deadline=None)
@given(_slope)
def test_c10_ent_bounds(p):
    assert 0 <= ent(*p) <= ent(0.0, 0.0) + 1e-14


# ---------------------------------------------------------------------------
# 11. Height covariance (statistical)

@criterion(11, "Monte Carlo height covariance on a Temperleyan half-disc within 25% (noisy check)")
@pytest.mark.slow
def test_c11_height_covariance():
    est = height_covariance_mc("halfdisc", 1 / 64, -0.15 + 0.4j, 0.15 + 0.4j, samples=10_000, seed=1)
    assert est.relative_error <= 0.25, est


# ---------------------------------------------------------------------------
# 12. FK suite

C12 = "FK duality, dual marginals, Y-Delta proportionality, honeycomb p_c"


def _fk_corpus():
    graphs = [g for g in small_planar_graphs().values() if g.n_edges <= 10]
    for cells in ({(0, 0), (1, 0), (2, 0)}, {(0, 0), (1, 0), (0, 1)}, {(0, 0), (1, 0), (1, 1), (2, 1)}):
        graphs.append(region_graph(Region(frozenset(cells))))
    return [g for g in graphs if g.n_edges <= 10]


@criterion(12, C12)
def test_c12_duality_constant_and_dual_marginals():
    rng = random.Random(12)
    corpus = _fk_corpus()
    assert len(corpus) >= 12
    for g in corpus:
        for q in (Fraction(1), Fraction(2), Fraction(3, 2), Fraction(3)):
            w = [Fraction(rng.randint(1, 9), rng.randint(1, 5)) for _ in range(g.n_edges)]
            model = FKModel.from_graph(g, q, w)
            d = fk_dual_model(model)
            E, V = g.n_edges, g.n_vertices
            assert d.constant == q ** (E - V + 1) / model.weight_product()
            assert d.Z_dual == fk_partition(d.dual).value
            pe = fk_edge_marginals(model)
            pd = fk_edge_marginals(d.dual)
            assert all(a + b == 1 for a, b in zip(pe, pd))


@criterion(12, C12)
def test_c12_ydelta_algebraic_point_exact():
    import sympy

    a = sympy.sqrt(3) - 1
    assert sympy.simplify(critq1_residual(a, a, a, 2)) == 0
    t = YDeltaTriple("delta", a, a, a, 2)
    y = ydelta_transform(t)
    assert sympy.simplify(critq2_residual(y.w1, y.w2, y.w3, 2)) == 0
    r = ydelta_ratios(t)
    assert all(sympy.simplify(x - r[0]) == 0 for x in r)


@criterion(12, C12)
def test_c12_ydelta_random_float_triples():
    rng = np.random.default_rng(50)
    done = 0
    while done < 50:
        q = float(rng.uniform(0.2, 4.0))
        a, b = (float(x) for x in rng.uniform(0.05, 3.0, 2))
        if a * b >= q:
            continue
        c = critical_third(a, b, q)
        t = YDeltaTriple("delta", a, b, c, q)
        assert abs(t.residual()) <= 1e-10
        r = np.array(ydelta_ratios(t))
        assert np.max(np.abs(r / r[0] - 1)) <= 1e-10
        done += 1


@criterion(12, C12)
def test_c12_honeycomb_critical_probability():
    p = critical_probability(math.pi / 3, 1.0)
    assert abs(p - 0.652704) <= 1e-6
    assert p == pytest.approx(1 - 2 * math.sin(math.pi / 18), abs=1e-14)


# ---------------------------------------------------------------------------
# 13. Isoradial suite

C13 = "isoradial: corpus classification, K K^-1 = delta, det1 oracle, volume identity"


@criterion(13, C13)
def test_c13_corpus_classification():
    valid, invalid = valid_corpus(), invalid_corpus()
    assert len(valid) + len(invalid) == 30
    for name, emb in valid:
        assert validate_isoradial(emb).ok, name
        assert chains_monotone(emb), name
    for name, emb in invalid:
        assert not validate_isoradial(emb).ok, name
        assert not chains_monotone(emb), name


@criterion(13, C13)
@pytest.mark.parametrize("make", [lambda: square_rectangle(16, 16), lambda: honeycomb_patch(16)],
                         ids=["square16", "honeycomb16"])
def test_c13_inverse_contour(make):
    emb = make()
    assert kk_inverse_residual(emb, central_white(emb)) <= 1e-10


@criterion(13, C13)
@pytest.mark.parametrize("make", [periodic_square, periodic_honeycomb,
                                  lambda: periodic_grid([0.3, 1.4], [2.0, 2.9])],
                         ids=["square", "honeycomb", "grid"])
def test_c13_det1_oracle(make):
    p = make()
    assert abs(det1_torus(p, 32) - logZ_per_site(p)) <= 1e-3


@criterion(13, C13)
@pytest.mark.parametrize("make", [periodic_square, periodic_honeycomb,
                                  lambda: periodic_grid([0.3, 1.4], [2.0, 2.9])],
                         ids=["square", "honeycomb", "grid"])
def test_c13_volume_identity(make):
    assert abs(hyperbolic_volume(make()).residual) <= 1e-6
