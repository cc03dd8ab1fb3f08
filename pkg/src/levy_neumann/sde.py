"""Reflected and penalized jump-diffusions ``dX = sigma(X) dW + b(X) dt + dN``.

Both schemes consume the same random numbers for a given ``(seed, path)``
stream: Brownian increments on the grid, bridge normals at jump times and the
Levy driver sample. Switching between reflection and penalization (or the
penalty ``n``) therefore changes only the constraint mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._accel import backend as resolve_backend
from ._vectorized import run_batch_numpy
from .fields import ScalarField
from .functionals import GL_NODES, gauss_legendre
from .geometry import ConvexDomain
from .levy import LevyDriverSpec, sample_driver
from .paths import LINEAR, STEP, BVPath, CadlagPath
from .rng import BRIDGE, BROWNIAN, PathStream, stream
from .skorokhod import PenalizedSolution


class SdeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SdeCoefficients:
    """``sigma(x) = sigma0 + sigma_tanh * diag(tanh x)`` and ``b(x) = b0 - kappa * clip(x - b_center)``.

    The clip at ``b_clip`` keeps the mean-reverting drift bounded. Both maps are
    globally Lipschitz with constant ``max(|sigma_tanh|, kappa)``.
    """

    sigma0: np.ndarray
    b0: np.ndarray = None
    sigma_tanh: float = 0.0
    kappa: float = 0.0
    b_center: np.ndarray = None
    b_clip: float = math.inf

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sigma0, float))
        d = s.shape[0]
        b0 = np.zeros(d) if self.b0 is None else np.asarray(self.b0, float).reshape(-1)
        bc = np.zeros(d) if self.b_center is None else np.asarray(self.b_center, float).reshape(-1)
        if b0.shape != (d,) or bc.shape != (d,):
            raise SdeError(f"drift vectors must have {d} components")
        if self.kappa < 0:
            raise SdeError("kappa must be non-negative")
        if not self.b_clip > 0:
            raise SdeError("b_clip must be positive")
        object.__setattr__(self, "sigma0", s)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "b_center", bc)

    @classmethod
    def zero(cls, d: int):
        return cls(np.zeros((d, 1)))

    @classmethod
    def isotropic(cls, d: int, scale: float, drift=None):
        return cls(scale * np.eye(d), drift)

    @property
    def dim(self) -> int:
        return self.sigma0.shape[0]

    @property
    def channels(self) -> int:
        return self.sigma0.shape[1]

    @property
    def lipschitz(self) -> float:
        return max(abs(self.sigma_tanh), self.kappa)

    @property
    def sigma_bound(self) -> float:
        k = min(self.sigma0.shape)
        return float(np.linalg.norm(self.sigma0) + abs(self.sigma_tanh) * math.sqrt(k))

    @property
    def b_bound(self) -> float:
        pull = self.kappa * self.b_clip * math.sqrt(self.dim) if self.kappa > 0 else 0.0
        return float(np.linalg.norm(self.b0) + pull)

    def is_bounded_lipschitz(self) -> bool:
        return math.isfinite(self.b_bound) and math.isfinite(self.sigma_bound)

    def sigma(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        out = np.broadcast_to(self.sigma0, (len(x),) + self.sigma0.shape).copy()
        k = min(self.sigma0.shape)
        idx = np.arange(k)
        out[:, idx, idx] += self.sigma_tanh * np.tanh(x[:, :k])
        return out

    def b(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        return self.b0 - self.kappa * np.clip(x - self.b_center, -self.b_clip, self.b_clip)

    def check_bounds(self, pts) -> bool:
        """Runtime monitor: declared sup bounds hold on the sampled states."""
        pts = np.atleast_2d(np.asarray(pts, float))
        sig = np.linalg.norm(self.sigma(pts), axis=(1, 2))
        drift = np.linalg.norm(self.b(pts), axis=1)
        return bool(np.all(sig <= self.sigma_bound * (1 + 1e-12)) and np.all(drift <= self.b_bound * (1 + 1e-12)))

    def encode(self):
        clip = self.b_clip if math.isfinite(self.b_clip) else 1e300
        return (np.ascontiguousarray(self.sigma0), float(self.sigma_tanh), self.b0.copy(),
                float(self.kappa), self.b_center.copy(), float(clip))

    def shifted(self, sigma_shift=0.0, b_shift=0.0):
        """``sigma + sigma_shift * I`` (first channels) and ``b + b_shift``."""
        s = self.sigma0.copy()
        k = min(s.shape)
        s[np.arange(k), np.arange(k)] += sigma_shift
        return SdeCoefficients(s, self.b0 + b_shift, self.sigma_tanh, self.kappa, self.b_center, self.b_clip)

    def with_channels(self, extra):
        """Append the columns of ``extra`` as independent Brownian channels."""
        extra = np.atleast_2d(np.asarray(extra, float))
        return SdeCoefficients(np.hstack([self.sigma0, extra]), self.b0, self.sigma_tanh,
                               self.kappa, self.b_center, self.b_clip)

    def to_dict(self):
        return {"sigma": self.sigma0.tolist(), "b": self.b0.tolist(), "sigma_tanh": self.sigma_tanh,
                "kappa": self.kappa, "b_center": self.b_center.tolist(),
                "b_clip": None if math.isinf(self.b_clip) else self.b_clip}

    @classmethod
    def from_dict(cls, spec: dict, dim: int):
        spec = dict(spec)
        extra = set(spec) - {"sigma", "b", "sigma_tanh", "kappa", "b_center", "b_clip"}
        if extra:
            raise SdeError(f"unknown coefficient keys: {sorted(extra)}")
        sigma = spec.get("sigma", 0.0)
        if np.ndim(sigma) == 0:
            sigma = float(sigma) * np.eye(dim)
        sigma = np.atleast_2d(np.asarray(sigma, float))
        if sigma.shape[0] != dim:
            raise SdeError(f"sigma must have {dim} rows")
        b = spec.get("b")
        clip = spec.get("b_clip")
        return cls(sigma, None if b is None else np.broadcast_to(np.asarray(b, float), (dim,)),
                   float(spec.get("sigma_tanh", 0.0)), float(spec.get("kappa", 0.0)),
                   spec.get("b_center"), math.inf if clip is None else float(clip))


# --- random inputs -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathNoise:
    h: float
    dW: np.ndarray          # (steps, m), already scaled by sqrt(h)
    grid_inc: np.ndarray    # (steps, d), added at each step end
    jump_times: np.ndarray  # (J,)
    jump_sizes: np.ndarray  # (J, d)
    bridge: np.ndarray      # (J, m) standard normals
    jump_step: np.ndarray   # (J,) step containing each jump


def sample_noise(levy: LevyDriverSpec, channels: int, T: float, steps: int, rng_state: PathStream) -> PathNoise:
    drv = sample_driver(levy, T, steps, rng_state)
    h = drv.h
    dW = rng_state.generator(BROWNIAN).standard_normal((steps, channels)) * math.sqrt(h)
    nj = len(drv.jump_times)
    bridge = rng_state.generator(BRIDGE).standard_normal((nj, channels))
    jstep = np.minimum((drv.jump_times / h).astype(np.int64), steps - 1)
    return PathNoise(h, dW, drv.grid_inc, drv.jump_times, drv.jump_sizes, bridge, jstep)


@dataclass(frozen=True, eq=False)
class NoiseBatch:
    h: float
    dW: np.ndarray
    grid_inc: np.ndarray
    jptr: np.ndarray
    jump_step: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    bridge: np.ndarray


def sample_batch(levy, channels, T, steps, seed, indices) -> NoiseBatch:
    noises = [sample_noise(levy, channels, T, steps, stream(seed, int(i))) for i in indices]
    d = levy.dim
    counts = [len(n.jump_times) for n in noises]
    jptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def cat(attr, shape):
        parts = [getattr(n, attr) for n in noises]
        return np.concatenate(parts).reshape(shape) if parts else np.zeros(shape)
    total = int(jptr[-1])
    return NoiseBatch(T / steps,
                      np.stack([n.dW for n in noises]),
                      np.stack([n.grid_inc for n in noises]),
                      jptr,
                      cat("jump_step", (total,)).astype(np.int64),
                      cat("jump_times", (total,)),
                      cat("jump_sizes", (total, d)),
                      cat("bridge", (total, channels)))


# --- kernels plumbing ------------------------------------------------------------

def _field_args(field_):
    kind, params = field_.encode()
    return kind, np.ascontiguousarray(params, dtype=float)


def _kernel_args(domain, coeffs, f, g, lam, n_pen, nodes):
    if coeffs.dim != domain.dim:
        raise SdeError("coefficients and domain dimensions differ")
    dk, dc, da = domain.encode()
    S0, s1, b0, kappa, bc, bclip = coeffs.encode()
    fk, fp = _field_args(f)
    gk, gp = _field_args(g)
    xq, wq = gauss_legendre(nodes)
    return (dk, dc, da, S0, s1, b0, kappa, bc, bclip, fk, fp, gk, gp,
            bool(g.is_constant), float(lam), float(n_pen))


def _checkpoint_steps(times, T, steps):
    h = T / steps
    ck = np.rint(np.asarray(times, float) / h).astype(np.int64)
    if np.any(np.abs(ck * h - np.asarray(times, float)) > 1e-9 * max(1.0, T)) or np.any(ck < 1) or np.any(ck > steps):
        raise SdeError("checkpoint times must be grid times in (0, T]")
    if np.any(np.diff(ck) < 0):
        raise SdeError("checkpoint times must be sorted")
    return ck


@dataclass(frozen=True, eq=False)
class PathFunctionals:
    """Per-path outputs of a batch run, ordered by path index."""

    time_integral: np.ndarray
    boundary_integral: np.ndarray
    variation: np.ndarray        # (paths, checkpoints): |K|_t on (0, t]
    checkpoint_times: np.ndarray

    @property
    def values(self):
        return self.time_integral + self.boundary_integral


def path_functionals(x, coeffs: SdeCoefficients, levy: LevyDriverSpec, domain: ConvexDomain,
                     f: ScalarField, g: ScalarField, lam: float, T: float, steps: int,
                     seed: int, n_paths: int, n_pen: float = 0.0, checkpoints=(),
                     backend: str | None = None, batch: int = 256, first_index: int = 0,
                     nodes: int = GL_NODES) -> PathFunctionals:
    """Run ``n_paths`` paths from ``x`` and return their functionals.

    ``n_pen == 0`` selects the reflected scheme, ``n_pen > 0`` the penalized one.
    """
    if not lam > 0:
        raise SdeError("discount rate must be positive")
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (domain.dim,):
        raise SdeError(f"starting point must have {domain.dim} components")
    if levy.dim != domain.dim:
        raise SdeError("driver and domain dimensions differ")
    name = resolve_backend(backend)
    args = _kernel_args(domain, coeffs, f, g, lam, n_pen, nodes)
    ck_times = np.asarray(checkpoints, float).reshape(-1)
    ck = _checkpoint_steps(ck_times, T, steps) if len(ck_times) else np.zeros(0, np.int64)
    xq, wq = gauss_legendre(nodes)
    ti = np.empty(n_paths)
    bnd = np.empty(n_paths)
    var = np.empty((n_paths, len(ck)))
    runner = _kernels.run_batch if name == "numba" else run_batch_numpy
    for lo in range(0, n_paths, batch):
        hi = min(n_paths, lo + batch)
        nb = sample_batch(levy, coeffs.channels, T, steps, seed, range(first_index + lo, first_index + hi))
        runner(x, nb.h, nb.dW, nb.grid_inc, nb.jptr, nb.jump_step, nb.jump_times, nb.jump_sizes,
               nb.bridge, *args, ck, xq, wq, ti[lo:hi], bnd[lo:hi], var[lo:hi])
    return PathFunctionals(ti, bnd, var, ck_times)


# --- single trajectories -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReflectedTrajectory:
    """``X = Y + K`` on the recorded stamps (step paths).

    A driver jump inside a grid step is recorded at its own stamp with the
    post-jump state; ``X_left`` keeps ``X_{t-}`` there (elsewhere it is the
    previous stamp's value), so ``X_t = Pi(X_left + dY_t)`` can be checked.
    """

    X: CadlagPath
    K: BVPath
    Y: CadlagPath
    domain: ConvexDomain
    time_integral: float
    boundary_integral: float
    X_left: np.ndarray = None
    driver_jump: np.ndarray = None
    driver_jump_sizes: np.ndarray = None


def _record(x0, coeffs, levy, domain, T, steps, rng_state, f, g, lam, n_pen, backend, nodes):
    x0 = np.atleast_1d(np.asarray(x0, float))
    noise = sample_noise(levy, coeffs.channels, T, steps, rng_state)
    f = f if f is not None else ScalarField.constant(0.0, domain.dim)
    g = g if g is not None else ScalarField.constant(0.0, domain.dim)
    args = _kernel_args(domain, coeffs, f, g, lam, n_pen, nodes)
    xq, wq = gauss_legendre(nodes)
    d = domain.dim
    cap = steps + len(noise.jump_times) + 1
    rec_t = np.zeros(cap)
    rec_x = np.zeros((cap, d))
    rec_y = np.zeros((cap, d))
    rec_jump = np.zeros(cap, dtype=np.bool_)
    rec_js = np.zeros((cap, d))
    rec_xl = np.zeros((cap, d))
    fl_t = np.zeros(cap)
    fl_h = np.zeros(cap)
    fl_s = np.zeros((cap, d))
    fl_p = np.zeros((cap, d))
    kernel = _kernels.simulate_path
    if resolve_backend(backend) == "numpy" and hasattr(kernel, "py_func"):
        kernel = kernel.py_func
    ti, bnd, var, n_rec, n_flow = kernel(
        x0, noise.h, noise.dW, noise.grid_inc, noise.jump_step, noise.jump_times, noise.jump_sizes,
        noise.bridge, *args, np.zeros(0, np.int64), xq, wq, np.zeros(0), True,
        rec_t, rec_x, rec_y, rec_jump, rec_js, rec_xl, fl_t, fl_h, fl_s, fl_p)
    rec = (rec_t[:n_rec], rec_x[:n_rec], rec_y[:n_rec], rec_jump[:n_rec], rec_js[:n_rec], rec_xl[:n_rec])
    flows = (fl_t[:n_flow], fl_h[:n_flow], fl_s[:n_flow], fl_p[:n_flow])
    return ti, bnd, rec, flows


def simulate_reflected(x0, coeffs: SdeCoefficients, levy: LevyDriverSpec, domain: ConvexDomain,
                       T: float, steps: int, rng_state: PathStream, f=None, g=None, lam: float = 1.0,
                       backend=None, nodes: int = GL_NODES) -> ReflectedTrajectory:
    """One reflected path with the initial atom ``K_0 = Pi(x0) - x0``."""
    ti, bnd, rec, _ = _record(x0, coeffs, levy, domain, T, steps, rng_state, f, g, lam, 0.0, backend, nodes)
    t, x, y, jump, js, xl = rec
    X = CadlagPath.from_values(t, x, STEP)
    Y = CadlagPath.from_values(t, y, STEP)
    K = BVPath.from_values(t, x - y, STEP)
    return ReflectedTrajectory(X, K, Y, domain, float(ti), float(bnd), xl.copy(), jump.copy(), js.copy())


def simulate_penalized(x0, coeffs: SdeCoefficients, levy: LevyDriverSpec, domain: ConvexDomain,
                       n: float, T: float, steps: int, rng_state: PathStream, f=None, g=None,
                       lam: float = 1.0, backend=None, nodes: int = GL_NODES) -> PenalizedSolution:
    """One penalized path; ``K_n`` is continuous and built from the exact flows."""
    if not n > 0:
        raise SdeError(f"penalty must be positive, got {n}")
    ti, bnd, rec, flows = _record(x0, coeffs, levy, domain, T, steps, rng_state, f, g, lam, n, backend, nodes)
    t, x, y, jump, js, _ = rec
    X = CadlagPath(t, x, jump, js, LINEAR)
    Y = CadlagPath(t, y, jump, js, LINEAR)
    K = BVPath.from_values(t, x - y, LINEAR, jump_mask=np.zeros(len(t), bool))
    fl_t, fl_h, fl_s, fl_p = flows
    return PenalizedSolution(X, K, float(n), fl_t, fl_h, fl_s, fl_p, y=Y,
                             time_integral=float(ti), kernel_boundary_integral=float(bnd))
