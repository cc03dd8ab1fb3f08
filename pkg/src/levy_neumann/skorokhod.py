"""Deterministic Skorokhod problem and its penalization on a time grid.

``solve_reflection`` handles a start outside the closed domain by the atom
``k_0 = Pi(y_0) - y_0`` and reflects every later increment by projection;
a flagged jump of ``y`` is applied as ``x_t = Pi(x_{t-} + dy_t)``.

``solve_penalized`` integrates ``x = y - n int (x - Pi(x)) ds`` with the
exact exponential flow on each grid step: while ``Pi`` stays constant along
the segment towards it, ``x(t) = Pi + (x(t_k) - Pi) e^{-n (t - t_k)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import GL_NODES, gauss_legendre
from .geometry import ConvexDomain
from .paths import LINEAR, STEP, BVPath, CadlagPath


@dataclass(frozen=True, eq=False)
class SkorokhodSolution:
    x: CadlagPath
    k: BVPath
    domain: ConvexDomain

    # ReflectedTrajectory-style aliases so functionals accept either
    @property
    def X(self):
        return self.x

    @property
    def K(self):
        return self.k


def solve_reflection(domain: ConvexDomain, y: CadlagPath) -> SkorokhodSolution:
    """Reflect ``y`` in the closed domain by per-step projection."""
    vals = y.values
    left = y.left_values() if y.interpolation == LINEAR else None
    x = np.empty_like(vals)
    x[0] = domain.project(vals[0])
    for i in range(1, len(vals)):
        if y.jump_mask[i] and left is not None:
            mid = domain.project(x[i - 1] + (left[i] - vals[i - 1]))
            x[i] = domain.project(mid + y.jump_sizes[i])
        else:
            x[i] = domain.project(x[i - 1] + (vals[i] - vals[i - 1]))
    xp = CadlagPath.from_values(y.times, x, STEP)
    kp = BVPath.from_values(y.times, x - vals, STEP)
    return SkorokhodSolution(xp, kp, domain)


@dataclass(frozen=True, eq=False)
class PenalizedSolution:
    """Penalized pair plus the per-step flow data needed for exact functionals.

    On step ``[t_k, t_k + h_k]`` the path runs from ``starts[k]`` straight
    towards ``targets[k] = Pi(starts[k])``; the driver increment of the step
    is added at its right end.
    """

    x: CadlagPath
    k: BVPath
    n: float
    step_times: np.ndarray
    step_sizes: np.ndarray
    starts: np.ndarray
    targets: np.ndarray
    y: CadlagPath | None = None
    time_integral: float | None = None
    kernel_boundary_integral: float | None = None

    @property
    def X(self):
        return self.x

    @property
    def K(self):
        return self.k

    def boundary_integral(self, g, lam: float = 0.0, T: float | None = None,
                          nodes: int = GL_NODES) -> float:
        """``int_0^T e^{-lam s} g(x_s) d|k|_s`` integrated exactly along each flow."""
        T = self.x.horizon if T is None else T
        xq, wq = gauss_legendre(nodes)
        total = 0.0
        for t0, h, s, p in zip(self.step_times, self.step_sizes, self.starts, self.targets):
            if t0 >= T:
                break
            h = min(h, T - t0)
            total += flow_segment_integral(g, s, p, self.n, lam, t0, h, xq, wq)
        return total


def flow_segment_integral(g, start, target, n, lam, t0, h, xq, wq):
    """``int_{t0}^{t0+h} e^{-lam s} g(x_s) d|k|_s`` along the exponential flow.

    With ``r = |d| e^{-n (s - t0)}`` the integral becomes
    ``e^{-lam t0} int_{|d| e^{-n h}}^{|d|} (r/|d|)^{lam/n} g(p + r d/|d|) dr``,
    evaluated in ``v = (r/|d|)^{1 + lam/n}`` where the integrand is regular.
    """
    d = np.asarray(start, float) - np.asarray(target, float)
    size = float(np.linalg.norm(d))
    if size == 0.0:
        return 0.0
    unit = d / size
    e = math.exp(-n * h)
    c = 1.0 / (1.0 + lam / n)
    vlo = e ** (1.0 + lam / n)
    panels = max(1, math.ceil(size - size * e))
    hp = (1.0 - vlo) / panels
    v = vlo + (np.arange(panels)[:, None] + xq[None, :]).ravel() * hp
    r = size * v ** c
    pts = np.asarray(target, float)[None, :] + r[:, None] * unit[None, :]
    return math.exp(-lam * t0) * float(np.sum(np.tile(wq, panels) * g(pts)) * hp * size * c)


def solve_penalized(domain: ConvexDomain, y: CadlagPath, n: float, grid=None) -> PenalizedSolution:
    """Penalized approximation with penalty ``n`` on ``grid`` (defaults to ``y``'s stamps)."""
    if not n > 0:
        raise ValueError(f"penalty must be positive, got {n}")
    grid = y.times if grid is None else np.asarray(grid, float)
    jt = y.times[y.jump_mask]
    if not np.all(np.isin(jt, grid)):
        raise ValueError("grid must contain every jump time of y")
    yv = y(grid)
    jumps = np.zeros_like(yv)
    on_jump = np.isin(grid, jt)
    jumps[on_jump] = y.jump_sizes[np.searchsorted(y.times, grid[on_jump])]
    x = np.empty_like(yv)
    x[0] = yv[0]
    m = len(grid) - 1
    starts = np.empty((m, yv.shape[1]))
    targets = np.empty_like(starts)
    h = np.diff(grid)
    for i in range(m):
        p = domain.project(x[i])
        starts[i], targets[i] = x[i], p
        x[i + 1] = p + (x[i] - p) * math.exp(-n * h[i]) + (yv[i + 1] - yv[i])
    mask = on_jump.copy()
    mask[0] = False
    xp = CadlagPath(grid, x, mask, np.where(mask[:, None], jumps, 0.0), LINEAR)
    kp = BVPath.from_values(grid, x - yv, LINEAR, jump_mask=np.zeros(len(grid), bool))
    return PenalizedSolution(xp, kp, float(n), grid[:-1].copy(), h, starts, targets)


@dataclass(frozen=True)
class AprioriReport:
    precondition_ok: bool
    modulus: float
    sup_dev_x: float
    bound_x: float
    var_k: float
    bound_k: float

    @property
    def holds(self) -> bool:
        return self.precondition_ok and self.sup_dev_x <= self.bound_x and self.var_k <= self.bound_k

    @property
    def status(self) -> str:
        if not self.precondition_ok:
            return "precondition failed"
        return "bounds hold" if self.holds else "bounds violated"


def cadlag_modulus(path: CadlagPath, delta: float, T: float) -> float:
    """Skorokhod modulus ``w'(delta, T)`` over partitions with break points at stamps.

    Oscillation on ``[t_i, t_j)`` uses the bounding-box diameter of the
    sampled values, an upper bound of the Euclidean one in d > 1.
    """
    keep = path.times <= T
    t = path.times[keep]
    v = path.values[keep]
    N = len(t)
    # best[j]: smallest max-oscillation of a partition of [0, t_j) into pieces >= delta
    best = np.full(N + 1, np.inf)
    best[0] = 0.0
    ends = np.append(t, T)
    result = np.inf
    for j in range(1, N + 1):
        # oscillation of v[i:j] for every i < j
        seg = v[:j][::-1]
        hi = np.maximum.accumulate(seg, axis=0)[::-1]
        lo = np.minimum.accumulate(seg, axis=0)[::-1]
        osc = np.sqrt(np.sum((hi - lo) ** 2, axis=1))
        cand = np.maximum(best[:j], osc)
        long_enough = ends[j] - t[:j] >= delta
        if np.any(long_enough):
            best[j] = np.min(cand[long_enough])
        if j == N:
            result = float(np.min(cand))  # last piece may be shorter than delta
    return result


def apriori_bounds_check(domain: ConvexDomain, y: CadlagPath, x_n: CadlagPath, k_n: BVPath,
                         T: float, delta: float, a) -> AprioriReport:
    """Check the a-priori bounds on ``sup |x_n - a|`` and ``|k_n|_T``.

    Requires ``w'_y(delta, T) < dist(a, boundary) / 2``; otherwise the report
    carries ``status == "precondition failed"``.
    """
    a = np.atleast_1d(np.asarray(a, float))
    depth = domain.depth(a)
    w = cadlag_modulus(y, delta, T)
    ok = bool(depth > 0 and w < depth / 2)
    steps = math.floor(T / delta) + 1
    sup_y = float(np.max(np.linalg.norm(y.values[y.times <= T] - a, axis=1)))
    sup_x = float(np.max(np.linalg.norm(x_n.values[x_n.times <= T] - a, axis=1)))
    var_k = k_n.variation(T)
    bound_x = 2.0 * math.sqrt(7.0) * steps * sup_y
    bound_k = 55.0 * steps ** 3 / depth * sup_y if depth > 0 else math.inf
    return AprioriReport(ok, w, sup_x, bound_x, var_k, bound_k)
