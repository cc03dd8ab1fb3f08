"""Discounted Feynman-Kac functionals of reflected trajectories.

The boundary functional of a Skorokhod pair ``(x, k)`` is

    I_T = int_[0,T] e^{-lam s} g(x_s) d||k||_s
          + sum_{0<=s<=T} e^{-lam s} int_0^{|dk_s|} gbar(x_s - r n(x_s)) dr

with ``gbar(y) = g(y) - g(Pi(y))``. The second sum only sees the jumps of
``k``; on a discretised path every nonzero increment of ``k`` is a jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField
from .geometry import ConvexDomain, DomainError
from .paths import CadlagPath, discounted_stieltjes_integral

GL_NODES = 32


class FunctionalError(ValueError):
    pass


def gauss_legendre(n=GL_NODES):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_integral(func, length, nodes=GL_NODES):
    """``int_0^length func(r) dr`` by Gauss-Legendre, one panel per unit length."""
    if length <= 0:
        return 0.0
    panels = max(1, math.ceil(length))
    x, w = gauss_legendre(nodes)
    h = length / panels
    r = (np.arange(panels)[:, None] + x[None, :]).ravel() * h
    return float(np.sum(np.tile(w, panels) * func(r)) * h)


@dataclass(frozen=True, eq=False)
class FunctionalSpec:
    """Data of the Neumann problem: source ``f``, boundary flux ``g``, rate ``lam``.

    ``growth_K`` and ``p`` declare the bound ``|f(x)| <= K (1 + |x|^p)``;
    :meth:`check_growth` monitors it on evaluated states.
    """

    f: ScalarField
    g: ScalarField
    lam: float
    growth_K: float | None = None
    p: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise FunctionalError(f"discount rate must be positive, got {self.lam}")
        if self.f.dim != self.g.dim:
            raise FunctionalError("f and g must share the dimension")

    def check_growth(self, pts) -> bool:
        if self.growth_K is None or self.p is None:
            return True
        pts = np.asarray(pts, float).reshape(-1, self.f.dim)
        bound = self.growth_K * (1.0 + np.linalg.norm(pts, axis=1) ** self.p)
        return bool(np.all(np.abs(self.f(pts)) <= bound * (1 + 1e-12)))

    def gbar(self, domain: ConvexDomain):
        g = self.g
        return lambda y: g(y) - g(domain.project(y))


def discounted_time_integral(f, X: CadlagPath, lam: float, T: float = math.inf) -> float:
    """``int_0^T e^{-lam t} f(X_t) dt`` with left-point values and exact weights.

    Beyond the last stamp the path is held at its final value; ``T=inf`` is
    allowed when ``lam > 0``.
    """
    if math.isinf(T) and lam <= 0:
        raise FunctionalError("an infinite horizon needs lam > 0")
    times = X.times
    fv = np.broadcast_to(np.asarray(f(X.values), float).reshape(-1), X.times.shape)
    edges = np.append(times, math.inf)
    edges = np.minimum(edges, T)
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    if lam > 0:
        w = (np.exp(-lam * lo[keep]) - np.exp(-lam * hi[keep])) / lam
    else:
        w = hi[keep] - lo[keep]
    return float(np.dot(fv[keep], w))


def jump_correction(g, x, dk, domain: ConvexDomain, nodes: int = GL_NODES) -> float:
    """``int_0^{|dk|} gbar(x - r n(x)) dr`` for a boundary point ``x``."""
    dk = np.atleast_1d(np.asarray(dk, float))
    size = float(np.linalg.norm(dk))
    if size == 0.0:
        return 0.0
    x = np.atleast_1d(np.asarray(x, float))
    try:
        n = domain.inward_normal(x)
    except DomainError:
        raise FunctionalError("a nonzero push must happen on the boundary") from None

    def gbar(r):
        y = x[None, :] - r[:, None] * n[None, :]
        return g(y) - g(domain.project(y))
    return segment_integral(gbar, size, nodes)


def evaluate_IT(g, trajectory, lam: float, T: float | None = None, domain=None) -> float:
    """Discounted boundary functional of a reflected trajectory on ``[0, T]``.

    ``lam = 0`` gives the undiscounted functional. The atom ``K_0`` at time
    zero is always included.
    """
    X, K = trajectory.X, trajectory.K
    domain = domain if domain is not None else trajectory.domain
    if len(X.times) != len(K.times) or np.any(X.times != K.times):
        raise FunctionalError("X and K must share their stamps")
    T = X.horizon if T is None else T
    keep = X.times <= T
    gx = np.broadcast_to(np.asarray(g(X.values), float).reshape(-1), X.times.shape)
    total = discounted_stieltjes_integral(gx, K, lam, T, closed_at_zero=True, against="variation")
    if isinstance(g, ScalarField) and g.is_constant:
        return float(total)
    dk = K.base.jump_sizes.copy()
    dk[0] = K.k0
    for i in np.flatnonzero(keep):
        if np.any(dk[i] != 0):
            total += math.exp(-lam * X.times[i]) * jump_correction(g, X.values[i], dk[i], domain)
    return float(total)
