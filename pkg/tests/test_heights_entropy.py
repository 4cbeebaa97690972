from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimerlab.entropy import (CATALAN, KAPPA, FrozenSlopeError, clausen2, ent, ent_array, ent_grad_array,
                              ent_hessian_array, halfdisc_height_covariance, halfplane_height_covariance,
                              lobachevsky, lobachevsky_array, logZ_quad, logZ_quad_2d, slope_probabilities)
from dimerlab.graphs import Region, TorusGraph, brute_force_matchings, build_aztec, build_rectangle
from dimerlab.heights import (HeightField, boundary_heights, face_sums, height_function, lipschitz_violations,
                              matching_from_heights, torus_height_function)
from dimerlab.kasteleyn import build_kasteleyn
from dimerlab.localstats import sample_matchings

slopes = st.tuples(st.floats(-1.98, 1.98), st.floats(-1.98, 1.98)).filter(lambda p: abs(p[0]) + abs(p[1]) < 1.98)


# --- heights -----------------------------------------------------------------

def test_heights_round_trip_all_tilings():
    g = build_rectangle(4, 4)
    for m in brute_force_matchings(g):
        hf = height_function(m)
        assert matching_from_heights(hf, g).edges == m.edges
        assert set(face_sums(hf, [tuple(p) for p in g.positions])) == {0}
        assert lipschitz_violations(hf) == 0


def test_boundary_heights_independent_of_tiling():
    g = build_aztec(3)
    bh = boundary_heights(Region.aztec(3))
    for m in sample_matchings(build_kasteleyn(g), 20, seed=2):
        hf = height_function(m, base=bh.base)
        for c in bh.corners():
            assert hf[c] == bh[c]


def test_height_csv_round_trip():
    m = sample_matchings(build_kasteleyn(build_aztec(3)), 1, seed=0)[0]
    hf = height_function(m)
    back = HeightField.from_csv(hf.to_csv())
    assert back.heights == hf.heights


def test_height_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        HeightField.from_csv("a,b,c\n1,2,3\n")


def test_torus_heights_have_integer_periods():
    t = TorusGraph(4, 4, 1, 1, 1, 1)
    from dimerlab.graphs import enumerate_matchings

    seen = set()
    for m in enumerate_matchings(t.n_vertices, [(w, b) for (w, b, *_r) in t.edge_list()]):
        hf = torus_height_function(t, m)
        seen.add(hf.periods)
    assert (0, 0) in seen
    assert len(seen) > 1


# --- entropy -------------------------------------------------------------------

def test_lobachevsky_special_values():
    assert lobachevsky(0.0) == 0.0
    assert lobachevsky(math.pi / 2) == pytest.approx(0.0, abs=1e-14)
    assert lobachevsky(math.pi / 4) == pytest.approx(CATALAN / 2, rel=1e-13)
    assert lobachevsky(math.pi / 6) == pytest.approx(clausen2(math.pi / 3) / 2, rel=1e-13)


def test_lobachevsky_against_mpmath():
    import mpmath

    for x in (0.1, 0.7, 1.2, 2.5, 3.0):
        ref = -mpmath.quad(lambda t: mpmath.log(2 * mpmath.sin(t)), [0, x])
        assert lobachevsky(x) == pytest.approx(float(ref), abs=1e-12)
    xs = np.linspace(0.05, 3.0, 17)
    assert np.allclose(lobachevsky_array(xs), [lobachevsky(x) for x in xs], atol=1e-13)


def test_flat_slope_entropy():
    assert ent(0.0, 0.0) == pytest.approx(2 * CATALAN / math.pi, rel=1e-13)
    assert KAPPA * ent(0.0, 0.0) == pytest.approx(CATALAN / math.pi, rel=1e-13)


def test_frozen_corners_have_zero_entropy():
    for s, t in ((2, 0), (-2, 0), (0, 2), (0, -2)):
        assert ent(s, t) == pytest.approx(0.0, abs=1e-12)


def test_inadmissible_slope_raises():
    with pytest.raises(FrozenSlopeError):
        slope_probabilities(1.5, 1.0)


@settings(max_examples=200, deadline=None)
@given(slopes)
def test_slope_system_residuals(p):
    st_ = slope_probabilities(*p)
    assert max(abs(r) for r in st_.residuals()) < 1e-12
    assert all(0 <= q <= 1 for q in st_.probabilities)


@settings(max_examples=200, deadline=None)
@given(slopes, slopes, st.floats(0, 1))
def test_ent_is_concave(p, q, lam):
    mid = (lam * p[0] + (1 - lam) * q[0], lam * p[1] + (1 - lam) * q[1])
    assert ent(*mid) >= lam * ent(*p) + (1 - lam) * ent(*q) - 1e-12


@settings(max_examples=100, deadline=None)
@given(slopes)
def test_ent_symmetries(p):
    s, t = p
    e = ent(s, t)
    for img in ((-s, t), (s, -t), (t, s)):
        assert ent(*img) == pytest.approx(e, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.floats(-1.8, 1.8), st.floats(-1.8, 1.8)).filter(lambda p: abs(p[0]) + abs(p[1]) < 1.8))
def test_gradient_and_hessian_match_finite_differences(p):
    s, t = p
    h = 1e-6
    gs, gt = ent_grad_array(s, t)
    assert float(gs) == pytest.approx((ent(s + h, t) - ent(s - h, t)) / (2 * h), abs=1e-6)
    assert float(gt) == pytest.approx((ent(s, t + h) - ent(s, t - h)) / (2 * h), abs=1e-6)
    hss, hst, htt = ent_hessian_array(s, t)
    gs2, _ = ent_grad_array(s + h, t)
    _, gt2 = ent_grad_array(s, t + h)
    assert float(hss) == pytest.approx((float(gs2) - float(gs)) / h, rel=1e-3, abs=1e-4)
    assert float(htt) == pytest.approx((float(gt2) - float(gt)) / h, rel=1e-3, abs=1e-4)
    assert float(hss) * float(htt) - float(hst) ** 2 >= -1e-9


def test_ent_array_matches_scalar():
    s = np.array([0.0, 0.5, -1.0, 1.2])
    t = np.array([0.0, 0.3, 0.7, -0.5])
    assert np.allclose(ent_array(s, t), [ent(a, b) for a, b in zip(s, t)], atol=1e-13)


def test_logZ_quad_two_ways():
    for w in ((1, 1, 1, 1), (1, 2, 1, 2), (0.5, 1.5, 2.0, 1.0)):
        assert logZ_quad(*w) == pytest.approx(logZ_quad_2d(*w, n=1024), abs=1e-5)
    assert logZ_quad(1, 1, 1, 1) == pytest.approx(2 * CATALAN / math.pi, rel=1e-10)


def test_halfplane_covariance_properties():
    p, q = 0.3 + 1j, -0.4 + 0.5j
    assert halfplane_height_covariance(p, q) == pytest.approx(halfplane_height_covariance(q, p))
    assert halfplane_height_covariance(p, q) > 0
    # scale and translation invariance
    assert halfplane_height_covariance(2 * p + 1, 2 * q + 1) == pytest.approx(halfplane_height_covariance(p, q))
    with pytest.raises(ValueError):
        halfplane_height_covariance(1 - 1j, q)


def test_halfdisc_covariance_decays_to_boundary():
    near = halfdisc_height_covariance(0.2 + 0.5j, 0.25 + 0.01j)
    far = halfdisc_height_covariance(0.2 + 0.5j, 0.25 + 0.3j)
    assert 0 < near < far
