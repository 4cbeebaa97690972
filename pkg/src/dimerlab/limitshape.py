"""Limit shapes: concave maximization of the surface entropy on a mesh.

The domain used here is the diamond |x| + |y| <= 1 (the scaled Aztec
diamond), meshed in the rotated coordinates u = x + y, v = x - y, where it
is the square [-1, 1]^2. Every square cell is cut into two triangles on
which the surface is linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .entropy import ent_array, ent_grad_array, ent_hessian_array

CORNERS = np.array([(2.0, 0.0), (-2.0, 0.0), (0.0, 2.0), (0.0, -2.0)])


class InadmissibleBoundary(ValueError):
    """The boundary trace has no extension with slopes in |s| + |t| <= 2."""


def aztec_trace(x, y):
    """Scaled boundary heights of the Aztec diamond (linear on each side)."""
    return -2.0 * np.abs(x)


def flat_trace(x, y):
    return 0.0 * np.asarray(x, float)


TRACES = {"aztec": aztec_trace, "flat": flat_trace}


@dataclass
class DiamondMesh:
    n: int
    u: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)
    tris: np.ndarray = field(init=False)

    def __post_init__(self):
        g = np.linspace(-1.0, 1.0, self.n + 1)
        U, V = np.meshgrid(g, g, indexing="ij")
        self.u, self.v = U.ravel(), V.ravel()
        idx = np.arange((self.n + 1) ** 2).reshape(self.n + 1, self.n + 1)
        a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
        c, d = idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()
        self.tris = np.concatenate([np.stack([a, b, d], 1), np.stack([a, d, c], 1)])

    @property
    def h(self) -> float:
        return 2.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return (self.u + self.v) / 2

    @property
    def y(self) -> np.ndarray:
        return (self.u - self.v) / 2

    @property
    def boundary(self) -> np.ndarray:
        return (np.abs(self.u) > 1 - 1e-12) | (np.abs(self.v) > 1 - 1e-12)

    @property
    def triangle_area(self) -> float:
        return self.h ** 2 / 4  # (u, v) area h^2 / 2 times Jacobian 1/2

    def gradient_operators(self):
        """Sparse maps from nodal values to per-triangle (f_x, f_y)."""
        t = self.tris
        T = len(t)
        u, v = self.u[t], self.v[t]
        # Solve for (f_u, f_v) on each triangle from its three vertices.
        du1, dv1 = u[:, 1] - u[:, 0], v[:, 1] - v[:, 0]
        du2, dv2 = u[:, 2] - u[:, 0], v[:, 2] - v[:, 0]
        det = du1 * dv2 - du2 * dv1
        # f_u = (df1 dv2 - df2 dv1)/det, f_v = (du1 df2 - du2 df1)/det
        cu = np.stack([(-dv2 + dv1), dv2, -dv1], 1) / det[:, None]
        cv = np.stack([(du2 - du1), -du2, du1], 1) / det[:, None]
        rows = np.repeat(np.arange(T), 3)
        Du = sp.csr_matrix((cu.ravel(), (rows, t.ravel())), shape=(T, len(self.u)))
        Dv = sp.csr_matrix((cv.ravel(), (rows, t.ravel())), shape=(T, len(self.u)))
        return (Du + Dv).tocsr(), (Du - Dv).tocsr()

    def centroids(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x[self.tris].mean(1), self.y[self.tris].mean(1)


@dataclass
class ContinuumSurface:
    mesh: DiamondMesh
    f: np.ndarray
    objective: float
    history: list
    iterations: int

    def gradients(self) -> tuple[np.ndarray, np.ndarray]:
        Dx, Dy = self.mesh.gradient_operators()
        return Dx @ self.f, Dy @ self.f

    def default_delta(self) -> float:
        """Slope tolerance for calling a triangle frozen.

        Next to the interface the slope tends to a corner of the diamond like
        the square root of the distance, so piecewise-linear gradients there
        are only accurate to about sqrt(h); a fixed tolerance would misclassify
        a band of cells whose width does not shrink in mesh units.
        """
        return math.sqrt(self.mesh.h)

    def frozen_triangles(self, delta: float | None = None) -> np.ndarray:
        if delta is None:
            delta = self.default_delta()
        gx, gy = self.gradients()
        g = np.stack([gx, gy], 1)
        d = np.min(np.linalg.norm(g[:, None, :] - CORNERS[None, :, :], axis=2), axis=1)
        return d < delta

    def frozen_fraction(self, delta: float | None = None) -> float:
        return float(np.mean(self.frozen_triangles(delta)))

    def to_csv(self) -> str:
        lines = ["x,y,f"]
        for x, y, f in zip(self.mesh.x, self.mesh.y, self.f):
            lines.append(f"{x:.10g},{y:.10g},{f:.10g}")
        return "\n".join(lines) + "\n"


def check_trace(x: np.ndarray, y: np.ndarray, f: np.ndarray, tol: float = 1e-9):
    """Pre-pass: a trace extends with slopes in the diamond iff it is
    2-Lipschitz for the max-norm between boundary points."""
    d = np.maximum(np.abs(x[:, None] - x[None, :]), np.abs(y[:, None] - y[None, :]))
    bad = np.abs(f[:, None] - f[None, :]) > 2 * d + tol
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise InadmissibleBoundary(
            f"boundary values at ({x[i]:.3g},{y[i]:.3g}) and ({x[j]:.3g},{y[j]:.3g}) differ by more than "
            "twice their max-norm distance")


def lipschitz_extension(mesh: DiamondMesh, fb: np.ndarray) -> np.ndarray:
    """Midpoint of the smallest and largest admissible extensions of the trace."""
    b = mesh.boundary
    bx, by, bf = mesh.x[b], mesh.y[b], fb
    lo = np.full(len(mesh.u), -np.inf)
    hi = np.full(len(mesh.u), np.inf)
    for k in range(0, len(bx), 256):
        d = np.maximum(np.abs(mesh.x[:, None] - bx[None, k:k + 256]), np.abs(mesh.y[:, None] - by[None, k:k + 256]))
        lo = np.maximum(lo, np.max(bf[None, k:k + 256] - 2 * d, axis=1))
        hi = np.minimum(hi, np.min(bf[None, k:k + 256] + 2 * d, axis=1))
    return 0.5 * (lo + hi)


_SIGNS = ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0))


class _BarrierProblem:
    """Area-weighted entropy plus tau * log(slack) of the four diamond
    constraints 2 - (+-f_x +- f_y) > 0 on every triangle."""

    def __init__(self, mesh: DiamondMesh):
        self.mesh = mesh
        self.Dx, self.Dy = mesh.gradient_operators()
        self.C = [sx * self.Dx + sy * self.Dy for sx, sy in _SIGNS]
        self.A = mesh.triangle_area
        self.free = ~mesh.boundary

    def slacks(self, f: np.ndarray) -> list[np.ndarray]:
        return [2.0 - C @ f for C in self.C]

    def value(self, f: np.ndarray, tau: float) -> float:
        sl = self.slacks(f)
        if min(float(x.min()) for x in sl) <= 0:
            return -math.inf
        e = np.sum(ent_array(self.Dx @ f, self.Dy @ f))
        return self.A * (e + tau * sum(float(np.sum(np.log(x))) for x in sl))

    def newton_direction(self, f: np.ndarray, tau: float):
        gx, gy = self.Dx @ f, self.Dy @ f
        es, et = ent_grad_array(gx, gy)
        hss, hst, htt = ent_hessian_array(gx, gy)
        Dx, Dy = self.Dx, self.Dy
        grad = Dx.T @ es + Dy.T @ et
        H = (Dx.T @ sp.diags(hss) @ Dx + Dx.T @ sp.diags(hst) @ Dy
             + Dy.T @ sp.diags(hst) @ Dx + Dy.T @ sp.diags(htt) @ Dy)
        for C, sl in zip(self.C, self.slacks(f)):
            grad = grad - tau * (C.T @ (1.0 / sl))
            H = H - tau * (C.T @ sp.diags(1.0 / sl ** 2) @ C)
        fr = self.free
        g = self.A * grad[fr]
        Hf = (self.A * H.tocsr()[fr][:, fr]).tocsc()
        d = np.zeros_like(f)
        d[fr] = spla.spsolve(-Hf, g)
        return d, float(g @ d[fr])

    def max_step(self, f: np.ndarray, d: np.ndarray) -> float:
        step = math.inf
        for C, sl in zip(self.C, self.slacks(f)):
            cd = C @ d
            pos = cd > 0
            if np.any(pos):
                step = min(step, float(np.min(sl[pos] / cd[pos])))
        return step


def _newton(prob: _BarrierProblem, f: np.ndarray, tau: float, tol: float, maxiter: int, hist: list) -> tuple[np.ndarray, int]:
    val = prob.value(f, tau)
    for it in range(maxiter):
        d, dec = prob.newton_direction(f, tau)
        if not np.all(np.isfinite(d)) or dec <= tol:
            return f, it
        step = min(1.0, 0.95 * prob.max_step(f, d))
        while step > 1e-14:
            cand = f + step * d
            cv = prob.value(cand, tau)
            if cv >= val + 1e-4 * step * dec:
                break
            step /= 2
        else:
            return f, it
        f, val = cand, cv
        hist.append(val)
    return f, maxiter


def _refine(coarse: DiamondMesh, fc: np.ndarray, fine: DiamondMesh) -> np.ndarray:
    """Exact piecewise-linear refinement: fine triangles sit inside coarse ones,
    so every slope of the refined surface is a slope of the coarse one."""
    n = coarse.n
    C = fc.reshape(n + 1, n + 1)
    F = np.empty((2 * n + 1, 2 * n + 1))
    F[::2, ::2] = C
    F[1::2, ::2] = (C[:-1, :] + C[1:, :]) / 2
    F[::2, 1::2] = (C[:, :-1] + C[:, 1:]) / 2
    F[1::2, 1::2] = (C[:-1, :-1] + C[1:, 1:]) / 2
    return F.ravel()


def maximize_surface(n: int = 128, trace: str | Callable = "aztec", start: int = 16,
                     tau_start: float = 1e-2, tau_end: float = 1e-7, margin: float = 1e-6,
                     tol: float = 1e-12, maxiter: int = 200) -> ContinuumSurface:
    """Maximize the sum over triangles of area * ent(grad f) with the trace fixed.

    The slope constraint |f_x| + |f_y| <= 2 is enforced by a logarithmic
    barrier whose weight tau decreases geometrically; each barrier problem
    is solved by damped Newton steps with the analytic entropy Hessian.
    The trace is scaled by 1 - margin so that a strictly admissible start
    (the scaled Lipschitz extension) exists. Meshes run coarse to fine
    (start, 2 start, ..., n); finer levels begin from the exact refinement
    of the previous surface and only the smallest tau.
    """
    tr = TRACES[trace] if isinstance(trace, str) else trace
    levels = [n]
    while levels[0] > start and levels[0] % 2 == 0:
        levels.insert(0, levels[0] // 2)
    if n < 2:
        raise ValueError("mesh size must be at least 2")
    prev = None
    history: list = []
    total_it = 0
    scale = 1.0 - margin
    for lv in levels:
        mesh = DiamondMesh(lv)
        b = mesh.boundary
        fb = np.asarray(tr(mesh.x[b], mesh.y[b]), float)
        prob = _BarrierProblem(mesh)
        if prev is None:
            check_trace(mesh.x[b], mesh.y[b], fb)
            f = scale * lipschitz_extension(mesh, fb)
            taus = []
            tau = tau_start
            while tau > tau_end * (1 + 1e-9):
                taus.append(tau)
                tau /= 10
            taus.append(tau_end)
        else:
            f = _refine(prev.mesh, prev.f, mesh)
            taus = [tau_end]
        f[b] = scale * fb
        level_hist: list = []
        for tau in taus:
            f, it = _newton(prob, f, tau, tol, maxiter, level_hist)
            total_it += it
        history.append((lv, level_hist))
        prev = ContinuumSurface(mesh, f, 0.0, history, total_it)
    A = prev.mesh.triangle_area
    Dx, Dy = prev.mesh.gradient_operators()
    prev.objective = float(A * np.sum(ent_array(Dx @ prev.f, Dy @ prev.f)))
    return prev


def interface_radii(surf: ContinuumSurface, n_rays: int = 360, delta: float | None = None) -> np.ndarray:
    """Radius along each ray from the center where the surface first freezes."""
    mesh = surf.mesh
    frozen = surf.frozen_triangles(delta)
    N = mesh.n
    out = []
    for th in 2 * np.pi * (np.arange(n_rays) + 0.5) / n_rays:
        c, s = math.cos(th), math.sin(th)
        R = 1.0 / (abs(c) + abs(s))
        rs = np.arange(0, R, mesh.h / 8)
        x, y = rs * c, rs * s
        u, v = x + y, x - y
        i = np.clip(((u + 1) / mesh.h).astype(int), 0, N - 1)
        j = np.clip(((v + 1) / mesh.h).astype(int), 0, N - 1)
        fu, fv = (u + 1) / mesh.h - i, (v + 1) / mesh.h - j
        cell = i * N + j
        # triangle 0: (a, b, d) lies where fu >= fv; triangle 1: (a, d, c)
        tri = np.where(fu >= fv, cell, cell + N * N)
        hit = np.nonzero(frozen[tri])[0]
        out.append(rs[hit[0]] if len(hit) else R)
    return np.array(out)
