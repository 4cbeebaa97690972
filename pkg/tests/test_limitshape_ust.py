from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from dimerlab.entropy import CATALAN
from dimerlab.graphs import GraphError, Region, boundary_corners, brute_force_matchings
from dimerlab.heights import height_function
from dimerlab.limitshape import (DiamondMesh, InadmissibleBoundary, check_trace, interface_radii,
                                 lipschitz_extension, maximize_surface)
from dimerlab.ust import TemperleySampler, domain_sampler, height_covariance_mc


# --- limit shape -----------------------------------------------------------------

@pytest.fixture(scope="module")
def aztec32():
    return maximize_surface(32, "aztec")


def test_flat_trace_gives_flat_surface():
    surf = maximize_surface(16, "flat")
    assert np.max(np.abs(surf.f)) < 1e-5
    # area of the diamond |x| + |y| <= 1 is 2
    assert surf.objective == pytest.approx(2 * 2 * CATALAN / math.pi, rel=1e-4)


def test_aztec_surface_respects_slope_bounds(aztec32):
    gx, gy = aztec32.gradients()
    assert np.all(np.abs(gx) + np.abs(gy) <= 2 + 1e-6)


def test_aztec_frozen_fraction_coarse(aztec32):
    assert abs(aztec32.frozen_fraction() - (1 - math.pi / 4)) < 0.05


def test_aztec_interface_near_circle_coarse(aztec32):
    r = interface_radii(aztec32)
    assert np.median(np.abs(r - 1 / math.sqrt(2))) < 2 * aztec32.mesh.h


def test_refinement_increases_objective(aztec32):
    coarse = maximize_surface(16, "aztec")
    assert aztec32.objective >= coarse.objective - 1e-3


def test_inadmissible_trace_rejected():
    with pytest.raises(InadmissibleBoundary):
        maximize_surface(8, lambda x, y: 5 * x)


def test_lipschitz_extension_is_admissible():
    mesh = DiamondMesh(8)
    b = mesh.boundary
    fb = -2 * np.abs(mesh.x[b])
    check_trace(mesh.x[b], mesh.y[b], fb)
    f = lipschitz_extension(mesh, fb)
    assert np.allclose(f[b], fb)


def test_surface_csv_has_all_nodes(aztec32):
    lines = aztec32.to_csv().strip().splitlines()
    assert len(lines) - 1 == len(aztec32.f)


# --- spanning-tree sampler ---------------------------------------------------------

def test_temperley_sampler_uniform_on_small_region():
    region = Region.rectangle(2, 2)
    root = min(boundary_corners(region), key=lambda c: (c[1], c[0]))
    s = TemperleySampler(region, root)
    g = s.fine_graph()
    all_tilings = brute_force_matchings(g)
    assert len(all_tilings) == 192
    rng = np.random.default_rng(7)
    counts = Counter(s.matching(s.sample_tree(rng), g).edges for _ in range(20_000))
    assert set(counts) <= {m.edges for m in all_tilings}
    obs = [counts.get(m.edges, 0) for m in all_tilings]
    assert chisquare(obs).pvalue > 1e-3


def test_sampler_deterministic():
    s = domain_sampler("halfdisc", 1 / 8)
    a = s.sample_tree(np.random.default_rng(3))
    b = s.sample_tree(np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_sampler_rejects_interior_root():
    with pytest.raises(GraphError):
        TemperleySampler(Region.rectangle(3, 3), (1, 1))


def test_height_probe_matches_height_function():
    s = domain_sampler("halfdisc", 1 / 8)
    g = s.fine_graph()
    rng = np.random.default_rng(0)
    corners = [(1, 3), (3, 5), (-3, 3)]
    probes = [s.height_probe(c) for c in corners]
    diffs = []
    for _ in range(15):
        tree = s.sample_tree(rng)
        part = s.partners(tree)
        hf = height_function(s.matching(tree, g))
        vals = [int(np.sum(sg * (part[e] == t))) for e, t, sg in probes]
        diffs.append(tuple(hf[c] - v for c, v in zip(corners, vals)))
    # probe values equal the true heights up to one constant per corner
    assert len(set(diffs)) == 1


def test_covariance_estimate_small_run():
    est = height_covariance_mc("halfdisc", 1 / 16, -0.15 + 0.4j, 0.15 + 0.4j, samples=300, seed=1)
    assert est.samples == 300
    assert est.covariance > 0
    assert est.stderr > 0
