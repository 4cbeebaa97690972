"""Lobachevsky's function, the slope entropy ent(s, t) and related integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CATALAN = 0.915965594177219015054603514932384110774


class FrozenSlopeError(ValueError):
    """The slope lies outside the admissible set |s| + |t| <= 2."""


# ---------------------------------------------------------------------------
# Lobachevsky function


def _lob_quad(x: float) -> float:
    from scipy.integrate import quad

    # -int_0^x log(2 sin t) dt = -x log(2x) + x - int_0^x log(sin t / t) dt;
    # the last integrand is smooth on [0, pi) so plain quadrature is accurate.
    if x == 0.0:
        return 0.0

    def g(t):
        return math.log(math.sin(t) / t) if t > 1e-8 else -t * t / 6

    rem = quad(g, 0.0, x, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return -x * math.log(2 * x) + x - rem


def lobachevsky(x: float) -> float:
    """L(x) = -int_0^x log(2 sin t) dt on [0, pi], by quadrature.

    Uses L(pi - x) = -L(x) so that quadrature always runs over [0, pi/2]
    where log(sin t / t) is smooth.
    """
    x = float(x)
    if not -1e-15 <= x <= math.pi + 1e-15:
        raise ValueError(f"lobachevsky is evaluated on [0, pi], got {x}")
    x = min(max(x, 0.0), math.pi)
    if x > math.pi / 2:
        return -_lob_quad(math.pi - x)
    return _lob_quad(x)


# Bernoulli-number series of the Clausen function, used for arrays:
# Cl2(th) = th - th log|th| + sum_k |B_2k| th^(2k+1) / (2k (2k+1)!),  |th| < 2 pi.
def _clausen_coeffs(n: int = 40) -> np.ndarray:
    from fractions import Fraction

    B = [Fraction(1)]
    for m in range(1, 2 * n + 1):
        B.append(-sum(math.comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return np.array([float(abs(B[2 * k]) / (2 * k * math.factorial(2 * k + 1))) for k in range(1, n + 1)])


_CL_COEFFS = _clausen_coeffs()


def clausen2(theta) -> np.ndarray:
    """Cl2(theta), vectorized, via reduction to [-pi, pi] and the series above."""
    th = np.asarray(theta, dtype=float)
    th = np.mod(th + math.pi, 2 * math.pi) - math.pi
    a = np.abs(th)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(a > 0, a - a * np.log(np.where(a > 0, a, 1.0)), 0.0)
    a2 = a * a
    poly = np.zeros_like(a)
    for c in _CL_COEFFS[::-1]:
        poly = poly * a2 + c
    return np.sign(th) * (base + a * a2 * poly)


def lobachevsky_array(x) -> np.ndarray:
    """L(x) = Cl2(2x) / 2 for arrays."""
    return 0.5 * clausen2(2 * np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Slopes


@dataclass(frozen=True)
class SlopeState:
    s: float
    t: float
    pa: float
    pb: float
    pc: float
    pd: float

    @property
    def probabilities(self) -> tuple:
        return (self.pa, self.pb, self.pc, self.pd)

    def residuals(self) -> tuple:
        return (
            2 * (self.pa - self.pb) - self.s,
            2 * (self.pd - self.pc) - self.t,
            self.pa + self.pb + self.pc + self.pd - 1,
            math.sin(math.pi * self.pa) * math.sin(math.pi * self.pb)
            - math.sin(math.pi * self.pc) * math.sin(math.pi * self.pd),
        )


def _probabilities(s, t):
    """Closed-form solution; works elementwise on arrays.

    With sigma = p_a + p_b the product-of-sines equation becomes
    cos(pi sigma) = (cos(pi s / 2) - cos(pi t / 2)) / 2.
    """
    a, b = np.pi * s / 4, np.pi * t / 4
    # 1 - cos(pi sigma) and 1 + cos(pi sigma), written without cancellation
    one_minus = np.sin(a) ** 2 + np.cos(b) ** 2
    one_plus = np.cos(a) ** 2 + np.sin(b) ** 2
    sigma = 2 * np.arctan2(np.sqrt(one_minus), np.sqrt(one_plus)) / np.pi
    pa = (sigma + s / 2) / 2
    pb = (sigma - s / 2) / 2
    pd = (1 - sigma + t / 2) / 2
    pc = (1 - sigma - t / 2) / 2
    return pa, pb, pc, pd


def is_admissible(s: float, t: float, tol: float = 1e-12) -> bool:
    return abs(s) + abs(t) <= 2 + tol


def slope_probabilities(s: float, t: float) -> SlopeState:
    """Dimer-type probabilities (p_a, p_b, p_c, p_d) of slope (s, t)."""
    s, t = float(s), float(t)
    if not is_admissible(s, t):
        raise FrozenSlopeError(f"slope ({s}, {t}) is outside |s| + |t| <= 2")
    pa, pb, pc, pd = (float(min(max(p, 0.0), 1.0)) for p in _probabilities(s, t))
    return SlopeState(s, t, pa, pb, pc, pd)


def ent(s: float, t: float) -> float:
    """Entropy per unit area of tilings with slope (s, t)."""
    st = slope_probabilities(s, t)
    return sum(lobachevsky(math.pi * p) for p in st.probabilities) / math.pi


# ent counts entropy per fundamental domain of the height lattice, which holds
# two vertices; KAPPA converts it to entropy per vertex (per torus site).
KAPPA = 0.5


def ent_per_site(s: float, t: float) -> float:
    return KAPPA * ent(s, t)


def ent_array(s, t) -> np.ndarray:
    """Vectorized ent; slopes are projected onto the admissible diamond."""
    s, t = project_diamond(np.asarray(s, float), np.asarray(t, float))
    pa, pb, pc, pd = (np.clip(p, 0.0, 1.0) for p in _probabilities(s, t))
    return (lobachevsky_array(np.pi * pa) + lobachevsky_array(np.pi * pb)
            + lobachevsky_array(np.pi * pc) + lobachevsky_array(np.pi * pd)) / np.pi


def ent_grad_array(s, t, floor: float = 1e-300) -> tuple[np.ndarray, np.ndarray]:
    """(d ent/ds, d ent/dt) = (-log(sin pi p_a / sin pi p_b) / 4, -log(sin pi p_d / sin pi p_c) / 4)."""
    s, t = project_diamond(np.asarray(s, float), np.asarray(t, float))
    pa, pb, pc, pd = (np.clip(p, 0.0, 1.0) for p in _probabilities(s, t))
    sa, sb, sc, sd = (np.maximum(np.sin(np.pi * p), floor) for p in (pa, pb, pc, pd))
    return -0.25 * np.log(sa / sb), -0.25 * np.log(sd / sc)


def project_diamond(s, t, r: float = 2.0):
    """Euclidean projection onto the L1 ball |s| + |t| <= r."""
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    a, b = np.abs(s), np.abs(t)
    out = (a + b) > r
    if not np.any(out):
        return s, t
    # Project (a, b) onto the segment a + b = r, a, b >= 0.
    pa_ = np.clip(a - (a + b - r) / 2, 0.0, r)
    pb_ = r - pa_
    s2 = np.where(out, np.sign(s) * pa_, s)
    t2 = np.where(out, np.sign(t) * pb_, t)
    return s2, t2


# ---------------------------------------------------------------------------
# Asymptotic log partition function


def logZ_quad(a: float, b: float, c: float, d: float, tol: float = 1e-10) -> float:
    """Free energy per fundamental domain (one white, one black vertex).

    Double integral over |z| = |w| = 1 of log|a + i b z + i c w + d z w|.
    The z-integral is done exactly (Jensen's formula), leaving
    (1/2 pi) int log max(|a + i c w|, |i b + d w|) dphi, whose kinks are
    passed to the adaptive rule as breakpoints.
    """
    from scipy.integrate import quad

    for v in (a, b, c, d):
        if v < 0:
            raise ValueError("weights must be nonnegative")

    def f(phi):
        w = complex(math.cos(phi), math.sin(phi))
        m = max(abs(a + 1j * c * w), abs(1j * b + d * w))
        return math.log(m) if m > 0 else -1e300

    pts = [0.0, math.pi / 2, math.pi, 1.5 * math.pi, 2 * math.pi]
    den = 2 * (a * c + b * d)
    if den > 0:
        x = (a * a + c * c - b * b - d * d) / den
        if -1 <= x <= 1:
            r = math.asin(x)
            pts += [r % (2 * math.pi), (math.pi - r) % (2 * math.pi)]
    pts = sorted(set(round(p, 15) for p in pts))
    total = 0.0
    for lo, hi in zip(pts, pts[1:]):
        if hi > lo:
            total += quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200)[0]
    return total / (2 * math.pi)


def logZ_quad_2d(a: float, b: float, c: float, d: float, n: int = 512) -> float:
    """Same integral by a plain tensor trapezoid rule (independent check)."""
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = np.exp(1j * th)[:, None]
    w = np.exp(1j * th)[None, :]
    return float(np.mean(np.log(np.abs(a + 1j * b * z + 1j * c * w + d * z * w))))


# ---------------------------------------------------------------------------
# Height covariance


def halfplane_height_covariance(p: complex, q: complex) -> float:
    """Limit covariance of height fluctuations at p, q in the upper half-plane."""
    p, q = complex(p), complex(q)
    if p.imag <= 0 or q.imag <= 0:
        raise ValueError("points must lie strictly in the upper half-plane")
    if p == q:
        return math.inf
    return 8 / math.pi ** 2 * math.log(abs((p.conjugate() - q) / (p - q)))


def halfdisc_height_covariance(p: complex, q: complex) -> float:
    """Covariance on the upper half-disc, transported by z -> ((1+z)/(1-z))^2."""
    def phi(z):
        return ((1 + z) / (1 - z)) ** 2

    return halfplane_height_covariance(phi(complex(p)), phi(complex(q)))


def ent_hessian_array(s, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second derivatives (ent_ss, ent_st, ent_tt) at interior slopes."""
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    pa, pb, pc, pd = _probabilities(s, t)
    a, b = np.pi * s / 4, np.pi * t / 4
    ss = np.sqrt((np.sin(a) ** 2 + np.cos(b) ** 2) * (np.cos(a) ** 2 + np.sin(b) ** 2))
    sig_s = np.sin(np.pi * s / 2) / (4 * ss)
    sig_t = -np.sin(np.pi * t / 2) / (4 * ss)
    ca, cb, cc, cd = (1 / np.tan(np.pi * p) for p in (pa, pb, pc, pd))
    k = -0.25 * np.pi
    h_ss = k * (ca * (sig_s + 0.5) / 2 - cb * (sig_s - 0.5) / 2)
    h_st = k * (ca * sig_t / 2 - cb * sig_t / 2)
    h_tt = k * (cd * (0.5 - sig_t) / 2 - cc * (-sig_t - 0.5) / 2)
    return h_ss, h_st, h_tt
