"""Exact linear algebra over the Gaussian rationals Q(i).

Kasteleyn matrices with unit or rational weights and phases in {1, i, -1, -i}
have entries in Q(i). Determinants are computed by fraction-free (Bareiss)
elimination over the Gaussian integers after clearing row denominators, so
intermediate values stay integral and every division is exact.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from numbers import Rational
from typing import Iterable, Sequence


class QI:
    """An element re + i*im of Q(i) with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, QI):
            re, im = re.re, re.im + im
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> "QI":
        if isinstance(x, QI):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, (int, Rational)):
            return cls(x, 0)
        if isinstance(x, float):
            return cls(Fraction(x), 0)
        raise TypeError(f"cannot coerce {type(x).__name__} to QI")

    def __add__(self, other):
        o = QI.coerce(other)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = QI.coerce(other)
        return QI(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return QI.coerce(other) - self

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __mul__(self, other):
        o = QI.coerce(other)
        return QI(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = QI.coerce(other)
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return QI((self.re * o.re + self.im * o.im) / n, (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        return QI.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return (QI(1) / self) ** (-k)
        out, base = QI(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "QI":
        return QI(self.re, -self.im)

    def norm(self) -> Fraction:
        """Squared modulus |x|^2, exact."""
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __eq__(self, other):
        try:
            o = QI.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self) -> float:
        return abs(complex(self))

    def __repr__(self):
        if self.im == 0:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"


I = QI(0, 1)


def is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Rational, QI)) and not isinstance(x, bool)


def exact_sqrt(x: Fraction) -> Fraction | None:
    """Square root of a nonnegative rational when it is rational, else None."""
    from math import isqrt

    x = Fraction(x)
    if x < 0:
        return None
    p, q = x.numerator, x.denominator
    rp, rq = isqrt(p), isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


# ---------------------------------------------------------------------------
# Gaussian-integer kernels: matrices are stored as two int row-lists (re, im).


def _to_gaussian_int_rows(rows: Sequence[Sequence]) -> tuple[list, list, list[int]]:
    """Clear denominators row by row; return (re, im, row_scales)."""
    re_rows, im_rows, scales = [], [], []
    for row in rows:
        q = [QI.coerce(x) for x in row]
        s = 1
        for x in q:
            s = lcm(s, x.re.denominator, x.im.denominator)
        re_rows.append([int(x.re * s) for x in q])
        im_rows.append([int(x.im * s) for x in q])
        scales.append(s)
    return re_rows, im_rows, scales


def _gdiv_exact(ar: int, ai: int, br: int, bi: int) -> tuple[int, int]:
    n = br * br + bi * bi
    nr = ar * br + ai * bi
    ni = ai * br - ar * bi
    qr, rr = divmod(nr, n)
    qi, ri = divmod(ni, n)
    if rr or ri:
        raise ArithmeticError("inexact Gaussian-integer division in Bareiss step")
    return qr, qi


def _bareiss(re: list, im: list, ncols: int, jordan: bool) -> int:
    """In-place fraction-free elimination.

    Forward-only (jordan=False) leaves the determinant in the last pivot.
    With jordan=True the matrix [A | I] is reduced to [d*I | adj-like block].
    Returns the permutation sign, or 0 when the leading square block is singular.
    """
    n = len(re)
    sign = 1
    pr, pi = 1, 0
    for k in range(n):
        p = k
        while p < n and re[p][k] == 0 and im[p][k] == 0:
            p += 1
        if p == n:
            return 0
        if p != k:
            re[k], re[p] = re[p], re[k]
            im[k], im[p] = im[p], im[k]
            sign = -sign
        kr, ki = re[k][k], im[k][k]
        rowk_r, rowk_i = re[k], im[k]
        rows = range(n) if jordan else range(k + 1, n)
        jstart = 0 if jordan else k + 1
        for i in rows:
            if i == k:
                continue
            rowi_r, rowi_i = re[i], im[i]
            cr, ci = rowi_r[k], rowi_i[k]
            for j in range(jstart, ncols):
                if j == k:
                    continue
                ar, ai = rowi_r[j], rowi_i[j]
                br, bi = rowk_r[j], rowk_i[j]
                # (kk * a - c * b) / prev
                xr = kr * ar - ki * ai - (cr * br - ci * bi)
                xi = kr * ai + ki * ar - (cr * bi + ci * br)
                if pr == 1 and pi == 0:
                    rowi_r[j], rowi_i[j] = xr, xi
                else:
                    rowi_r[j], rowi_i[j] = _gdiv_exact(xr, xi, pr, pi)
            rowi_r[k], rowi_i[k] = 0, 0
        pr, pi = kr, ki
    return sign


def det(rows: Sequence[Sequence]) -> QI:
    """Exact determinant of a square matrix with entries in Q(i)."""
    n = len(rows)
    if n == 0:
        return QI(1)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    re, im, scales = _to_gaussian_int_rows(rows)
    sign = _bareiss(re, im, n, jordan=False)
    if sign == 0:
        return QI(0)
    d = QI(re[n - 1][n - 1] * sign, im[n - 1][n - 1] * sign)
    denom = 1
    for s in scales:
        denom *= s
    return d / denom


def inverse(rows: Sequence[Sequence]) -> list[list[QI]]:
    """Exact inverse via fraction-free Gauss-Jordan; raises ZeroDivisionError if singular."""
    n = len(rows)
    re, im, scales = _to_gaussian_int_rows(rows)
    for i in range(n):
        re[i].extend([0] * n)
        im[i].extend([0] * n)
        re[i][n + i] = scales[i]  # A_int = S A, so augment with S to get A^{-1} directly
    sign = _bareiss(re, im, 2 * n, jordan=True)
    if sign == 0:
        raise ZeroDivisionError("matrix is singular")
    out = []
    for i in range(n):
        d = QI(re[i][i], im[i][i])
        out.append([QI(re[i][n + j], im[i][n + j]) / d for j in range(n)])
    return out


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list[QI]]:
    n, m, p = len(a), len(b), len(b[0]) if b else 0
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = QI(0)
            for k in range(m):
                x = a[i][k]
                if x != 0:
                    y = b[k][j]
                    if y != 0:
                        acc = acc + QI.coerce(x) * y
            row.append(acc)
        out.append(row)
    return out


def prod(xs: Iterable) -> QI:
    out = QI(1)
    for x in xs:
        out = out * x
    return out
