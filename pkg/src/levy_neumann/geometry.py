"""Bounded convex C^2 domains: projection, distance and normals.

Three shapes are supported, each with a closed-form (or 1-D root-find)
projection onto the closure:

* :class:`Interval` ``(a, b)`` in R^1
* :class:`Ball` ``B(center, radius)`` in R^d
* :class:`Ellipsoid` with axis-aligned semi-axes in R^d

Every domain also carries a compact numeric encoding (``kind``, ``center``,
``axes``) consumed by the jitted kernels in :mod:`levy_neumann._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._accel import njit

KIND_INTERVAL = 0
KIND_BALL = 1
KIND_ELLIPSOID = 2

ELLIPSOID_TOL = 1e-12
_ELLIPSOID_MAXITER = 200
# rounding slack so that projected points count as members of the closure
_BALL_SLACK = 1.0 + 4e-16
_ELLIPSOID_SLACK = 1.0 + 1e-11


class DomainError(ValueError):
    """Raised for invalid domain parameters or inputs outside an operation's domain."""


def _as_points(x, dim):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    arr = arr.reshape(-1, dim) if arr.ndim <= 1 else arr
    if arr.shape[-1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr, single


@dataclass(frozen=True)
class ConvexDomain:
    """Base class. Subclasses fill ``kind``, ``center`` and ``axes``."""

    kind: int = field(init=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.max(self.axes))

    @property
    def eps_bd(self) -> float:
        """Boundary-membership tolerance, scaled by the diameter."""
        return 1e-10 * self.diameter

    def encode(self):
        """(kind, center, axes) arrays for the kernels."""
        return (self.kind, np.ascontiguousarray(self.center, dtype=float),
                np.ascontiguousarray(self.axes, dtype=float))

    # -- vectorized public API -------------------------------------------------

    def project(self, x):
        """Nearest point of the closed domain; identity on the closure."""
        pts, single = _as_points(x, self.dim)
        out = project_points(self.kind, self.center, self.axes, pts)
        return out[0] if single else out

    def dist(self, x):
        """Euclidean distance to the closed domain (0 inside)."""
        pts, single = _as_points(x, self.dim)
        proj = project_points(self.kind, self.center, self.axes, pts)
        d = np.linalg.norm(pts - proj, axis=-1)
        return float(d[0]) if single else d

    def contains(self, x, tol=None):
        """True for points of the closure (up to ``tol``, default ``eps_bd``)."""
        tol = self.eps_bd if tol is None else tol
        d = self.dist(x)
        return d <= tol

    def on_boundary(self, x, tol=None):
        tol = self.eps_bd if tol is None else tol
        pts, single = _as_points(x, self.dim)
        inside = np.linalg.norm(pts - self.project(pts), axis=-1) <= tol
        res = inside & (self._interior_depth(pts) <= tol)
        return bool(res[0]) if single else res

    def inward_normal(self, x):
        """Unit inward normal n(x) on the boundary, or n(Pi(x)) for exterior x.

        Points strictly inside the domain (further than ``eps_bd`` from the
        boundary) are rejected.
        """
        pts, single = _as_points(x, self.dim)
        proj = project_points(self.kind, self.center, self.axes, pts)
        gap = proj - pts
        dist = np.linalg.norm(gap, axis=-1)
        depth = self._interior_depth(pts)
        if np.any((dist <= self.eps_bd) & (depth > self.eps_bd)):
            raise DomainError("inward normal is undefined at interior points")
        out = np.empty_like(pts)
        ext = dist > self.eps_bd
        out[ext] = gap[ext] / dist[ext, None]
        if np.any(~ext):
            out[~ext] = self._boundary_normal(proj[~ext])
        return out[0] if single else out

    # -- shape specific ----------------------------------------------------------

    def _interior_depth(self, pts):  # pragma: no cover - abstract
        raise NotImplementedError

    def _boundary_normal(self, pts):  # pragma: no cover - abstract
        raise NotImplementedError

    def depth(self, x) -> float:
        """Distance from a point of the closure to the boundary."""
        pts, _ = _as_points(x, self.dim)
        return float(self._boundary_distance(pts[0]))

    def _boundary_distance(self, p):  # pragma: no cover - abstract
        raise NotImplementedError

    def psi(self, x):
        """C^2 function positive in D, zero on the boundary, -dist outside."""
        raise NotImplementedError(f"psi is not available for {type(self).__name__}")

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


def _smooth_radial_psi(rho, radius):
    # r - rho outside rho < r/2; C^2 quartic cap near the centre.
    s = 0.5 * radius
    cap = 3.0 * s / 8.0 + 0.75 * rho ** 2 / s - rho ** 4 / (8.0 * s ** 3)
    return radius - np.where(rho >= s, rho, cap)


@dataclass(frozen=True)
class Interval(ConvexDomain):
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"Interval needs finite a < b, got ({self.a}, {self.b})")
        object.__setattr__(self, "kind", KIND_INTERVAL)

    @property
    def center(self):
        return np.array([0.5 * (self.a + self.b)])

    @property
    def axes(self):
        return np.array([0.5 * (self.b - self.a)])

    def _interior_depth(self, pts):
        return np.minimum(pts[:, 0] - self.a, self.b - pts[:, 0])

    def _boundary_distance(self, p):
        return max(0.0, min(p[0] - self.a, self.b - p[0]))

    def _boundary_normal(self, pts):
        mid = 0.5 * (self.a + self.b)
        return np.where(pts[:, :1] <= mid, 1.0, -1.0)

    def psi(self, x):
        pts, single = _as_points(x, 1)
        rho = np.abs(pts[:, 0] - self.center[0])
        out = _smooth_radial_psi(rho, self.axes[0])
        return float(out[0]) if single else out

    def to_dict(self):
        return {"shape": "interval", "a": float(self.a), "b": float(self.b)}


@dataclass(frozen=True)
class Ball(ConvexDomain):
    center_: tuple
    radius: float

    def __init__(self, center, radius):
        c = tuple(float(v) for v in np.atleast_1d(center))
        if not c or radius <= 0 or not np.isfinite(radius):
            raise DomainError(f"Ball needs a centre and positive radius, got {radius}")
        object.__setattr__(self, "center_", c)
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "kind", KIND_BALL)

    @property
    def center(self):
        return np.array(self.center_)

    @property
    def axes(self):
        return np.full(len(self.center_), self.radius)

    def _interior_depth(self, pts):
        return self.radius - np.linalg.norm(pts - self.center, axis=-1)

    def _boundary_distance(self, p):
        return max(0.0, self.radius - float(np.linalg.norm(p - self.center)))

    def _boundary_normal(self, pts):
        v = self.center - pts
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def psi(self, x):
        pts, single = _as_points(x, self.dim)
        rho = np.linalg.norm(pts - self.center, axis=-1)
        out = _smooth_radial_psi(rho, self.radius)
        return float(out[0]) if single else out

    def to_dict(self):
        return {"shape": "ball", "center": list(self.center_), "radius": self.radius}


@dataclass(frozen=True)
class Ellipsoid(ConvexDomain):
    center_: tuple
    semi_axes: tuple

    def __init__(self, center, semi_axes):
        c = tuple(float(v) for v in np.atleast_1d(center))
        s = tuple(float(v) for v in np.atleast_1d(semi_axes))
        if len(c) != len(s) or not c:
            raise DomainError("Ellipsoid centre and semi-axes must have equal length")
        if any(v <= 0 or not math.isfinite(v) for v in s):
            raise DomainError(f"Ellipsoid semi-axes must be positive, got {s}")
        object.__setattr__(self, "center_", c)
        object.__setattr__(self, "semi_axes", s)
        object.__setattr__(self, "kind", KIND_ELLIPSOID)

    @property
    def center(self):
        return np.array(self.center_)

    @property
    def axes(self):
        return np.array(self.semi_axes)

    def _interior_depth(self, pts):
        # Not the exact distance to the boundary, but zero exactly on it and
        # comparable to it near it; only used against eps_bd.
        q = np.sqrt(np.sum(((pts - self.center) / self.axes) ** 2, axis=-1))
        return (1.0 - q) * float(np.min(self.axes))

    def _boundary_distance(self, p):
        # nearest boundary point q_i = a_i^2 v_i / (a_i^2 + t) with t in (-a_min^2, 0]
        a2 = self.axes ** 2
        v = np.asarray(p, float) - self.center
        if np.sum(v ** 2 / a2) >= 1.0:
            return 0.0
        amin2 = float(np.min(a2))
        small = a2 == amin2
        rest = ~small

        def F(t):
            return float(np.sum((self.axes[rest] * v[rest] / (a2[rest] + t)) ** 2)
                         + np.sum((self.axes[small] * v[small] / (a2[small] + t)) ** 2)) - 1.0

        if np.all(v[small] == 0.0):
            q = a2[rest] * v[rest] / (a2[rest] - amin2)
            r = 1.0 - float(np.sum(q ** 2 / a2[rest]))
            if r >= 0.0:
                return float(math.sqrt(np.sum((v[rest] - q) ** 2) + amin2 * r))
            lo = -amin2
        else:
            gap = amin2
            while True:
                gap *= 0.5
                lo = -amin2 + gap
                if F(lo) > 0 or gap < 1e-300:
                    break
        t = brentq(F, lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps) if F(lo) > 0 else lo
        q = a2 * v / (a2 + t)
        return float(np.linalg.norm(v - q))

    def _boundary_normal(self, pts):
        v = -(pts - self.center) / self.axes ** 2
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def to_dict(self):
        return {"shape": "ellipsoid", "center": list(self.center_),
                "semi_axes": list(self.semi_axes)}


def domain_from_dict(spec: dict) -> ConvexDomain:
    """Build a domain from its config description (``shape`` plus parameters)."""
    spec = dict(spec)
    shape = spec.pop("shape", None)
    try:
        if shape == "interval":
            return Interval(float(spec.pop("a")), float(spec.pop("b")))
        if shape == "ball":
            return Ball(spec.pop("center"), float(spec.pop("radius")))
        if shape == "ellipsoid":
            return Ellipsoid(spec.pop("center"), spec.pop("semi_axes"))
    except KeyError as exc:
        raise DomainError(f"domain {shape!r} is missing parameter {exc}") from None
    finally:
        if shape in ("interval", "ball", "ellipsoid") and spec:
            raise DomainError(f"unknown domain keys: {sorted(spec)}")
    raise DomainError(f"unknown domain shape {shape!r}")


# ---------------------------------------------------------------------------
# Numeric cores. The vectorized one serves the public API and the numpy
# backend; the scalar one is jitted for the per-path kernels.
# ---------------------------------------------------------------------------

def project_points(kind, center, axes, pts):
    """Vectorized projection of an ``(N, d)`` array onto the closed domain."""
    pts = np.asarray(pts, dtype=float)
    v = pts - center
    if kind == KIND_INTERVAL:
        inside = np.abs(v) <= axes
        return np.where(inside, pts, center + np.clip(v, -axes, axes))
    if kind == KIND_BALL:
        r = axes[0]
        nrm = np.linalg.norm(v, axis=-1, keepdims=True)
        out = nrm > r * _BALL_SLACK
        scale = r / np.where(out, nrm, 1.0)
        # points of the closure are returned bit-for-bit
        return np.where(out, center + v * scale, pts)
    out = center + _ellipsoid_project_vec(v, axes)
    inside = np.sum(v ** 2 / axes ** 2, axis=-1, keepdims=True) <= _ELLIPSOID_SLACK
    return np.where(inside, pts, out)


def _ellipsoid_project_vec(v, axes):
    a2 = axes ** 2
    q = np.sum(v ** 2 / a2, axis=-1)
    out = v.copy()
    ext = q > _ELLIPSOID_SLACK
    if not np.any(ext):
        return out
    ve = v[ext]
    # F(t) = sum (a_i v_i / (a_i^2 + t))^2 - 1 is convex decreasing on t >= 0;
    # Newton from t=0 increases monotonically to the root, bisection guards it.
    lo = np.zeros(len(ve))
    hi = np.max(axes) * np.linalg.norm(ve, axis=-1)
    t = lo.copy()
    for _ in range(_ELLIPSOID_MAXITER):
        den = a2 + t[:, None]
        w = axes * ve / den
        F = np.sum(w ** 2, axis=-1) - 1.0
        dF = -2.0 * np.sum(w ** 2 / den, axis=-1)
        lo = np.where(F > 0, t, lo)
        hi = np.where(F <= 0, t, hi)
        t_new = t - F / dF
        bad = ~((t_new > lo) & (t_new < hi))
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        done = np.abs(t_new - t) <= ELLIPSOID_TOL * np.maximum(1.0, t)
        t = t_new
        if np.all(done):
            break
    out[ext] = a2 * ve / (a2 + t[:, None])
    return out


@njit(cache=True)
def project_scalar(kind, center, axes, x, out):
    """Write Pi(x) into ``out`` (length d). Scalar kernel twin of project_points."""
    d = x.shape[0]
    if kind == KIND_INTERVAL:
        for i in range(d):
            v = x[i] - center[i]
            if v > axes[i]:
                out[i] = center[i] + axes[i]
            elif v < -axes[i]:
                out[i] = center[i] - axes[i]
            else:
                out[i] = x[i]
        return
    if kind == KIND_BALL:
        r = axes[0]
        s = 0.0
        for i in range(d):
            s += (x[i] - center[i]) ** 2
        nrm = math.sqrt(s)
        if nrm <= r * _BALL_SLACK:
            for i in range(d):
                out[i] = x[i]
            return
        scale = r / nrm
        for i in range(d):
            out[i] = center[i] + (x[i] - center[i]) * scale
        return
    q = 0.0
    vmax = 0.0
    amax = 0.0
    for i in range(d):
        q += (x[i] - center[i]) ** 2 / axes[i] ** 2
        vmax += (x[i] - center[i]) ** 2
        amax = max(amax, axes[i])
    if q <= _ELLIPSOID_SLACK:
        for i in range(d):
            out[i] = x[i]
        return
    lo = 0.0
    hi = amax * math.sqrt(vmax)
    t = 0.0
    for _ in range(_ELLIPSOID_MAXITER):
        F = -1.0
        dF = 0.0
        for i in range(d):
            den = axes[i] ** 2 + t
            w = axes[i] * (x[i] - center[i]) / den
            F += w * w
            dF -= 2.0 * w * w / den
        if F > 0:
            lo = t
        else:
            hi = t
        t_new = t - F / dF
        if not (t_new > lo and t_new < hi):
            t_new = 0.5 * (lo + hi)
        done = abs(t_new - t) <= ELLIPSOID_TOL * max(1.0, t)
        t = t_new
        if done:
            break
    for i in range(d):
        out[i] = center[i] + axes[i] ** 2 * (x[i] - center[i]) / (axes[i] ** 2 + t)
