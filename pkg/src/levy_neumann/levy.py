"""Pure-jump Levy drivers: compound Poisson jumps plus an isotropic stable part.

A driver ``N_t = b t + (jumps)`` is split into

* grid increments: drift, per-step stable increments (``increments``
  representation) and the Gaussian stand-in for small stable jumps,
* exact-time jumps: compound Poisson events, stable jumps larger than
  ``eps_trunc`` (``truncated`` representation) and any fixed jumps.

The stable Levy density is ``C |y|^{-d-alpha}``. With the ``c_d_alpha``
normalization ``C`` makes the characteristic exponent exactly ``|theta|^alpha``
so the generator is the fractional Laplacian ``-(-Delta)^{alpha/2}``; the
``two_minus_alpha`` normalization uses ``C = 2 - alpha`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .paths import LINEAR, CadlagPath
from .rng import COMPOUND, SMALL_JUMPS, STABLE, STABLE_JUMPS, PathStream

C_D_ALPHA = "c_d_alpha"
TWO_MINUS_ALPHA = "two_minus_alpha"
INCREMENTS = "increments"
TRUNCATED = "truncated"
GAUSSIAN = "gaussian"
DROP = "drop"

EPS_TRUNC = 1e-3


class LevyError(ValueError):
    pass


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def stable_constant(d: int, alpha: float) -> float:
    """Constant of the isotropic stable Levy density with exponent ``|theta|^alpha``."""
    if not 0 < alpha < 2:
        raise LevyError(f"alpha must lie in (0, 2), got {alpha}")
    return (alpha * 2.0 ** (alpha - 1) * gamma((d + alpha) / 2)
            / (math.pi ** (d / 2) * gamma(1 - alpha / 2)))


def riesz_potential_constant(d: int, alpha: float) -> float:
    """``Gamma((d-alpha)/2) / (2^alpha pi^{d/2} Gamma(alpha/2))``.

    This is the Riesz potential normalisation, not a Levy density constant:
    it is negative for ``d = 1 < alpha``. Kept for comparison only.
    """
    if not 0 < alpha < 2:
        raise LevyError(f"alpha must lie in (0, 2), got {alpha}")
    return gamma((d - alpha) / 2) / (2.0 ** alpha * math.pi ** (d / 2) * gamma(alpha / 2))


# --- stable variates ---------------------------------------------------------

def cms_symmetric(alpha, v, w):
    """Chambers-Mallows-Stuck map to a symmetric stable law with ``E e^{i t X} = e^{-|t|^alpha}``.

    ``v`` uniform on (-pi/2, pi/2), ``w`` standard exponential. At ``alpha = 2``
    the map returns ``2 sin(v) sqrt(w)``, an exact N(0, 2) variate.
    """
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    if alpha == 2.0:
        return 2.0 * np.sin(v) * np.sqrt(w)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))


def positive_stable(rho, u, w):
    """Kanter's representation: ``E e^{-s A} = e^{-s^rho}`` for ``rho`` in (0, 1]."""
    u = np.asarray(u, float)
    w = np.asarray(w, float)
    if rho == 1.0:
        return np.ones(np.broadcast(u, w).shape)
    return (np.sin(rho * u) / np.sin(u) ** (1.0 / rho)
            * (np.sin((1.0 - rho) * u) / w) ** ((1.0 - rho) / rho))


def _unit_stable(alpha, d, gen, size):
    """``size`` draws of the unit isotropic stable vector in R^d, shape ``size + (d,)``."""
    size = tuple(np.atleast_1d(size)) if size is not None else ()
    if d == 1:
        v = gen.uniform(-math.pi / 2, math.pi / 2, size)
        w = gen.standard_exponential(size)
        return cms_symmetric(alpha, v, w)[..., None]
    # subordinated Brownian motion: sqrt(A) G with A positive alpha/2-stable
    u = gen.uniform(0.0, math.pi, size)
    w = gen.standard_exponential(size)
    g = gen.standard_normal(size + (d,)) * math.sqrt(2.0)
    return np.sqrt(positive_stable(alpha / 2, u, w))[..., None] * g


def sample_stable_increment(alpha: float, d: int, dt: float, rng_state, size=None):
    """Isotropic stable increment over ``dt``: ``dt^{1/alpha}`` times a unit draw.

    ``rng_state`` is a :class:`PathStream` (or a numpy Generator); the same
    state always returns the same sample.
    """
    if not 1 < alpha <= 2:
        raise LevyError(f"alpha must lie in (1, 2], got {alpha}")
    if not dt > 0:
        raise LevyError(f"dt must be positive, got {dt}")
    gen = rng_state.generator(STABLE) if isinstance(rng_state, PathStream) else rng_state
    return _unit_stable(alpha, d, gen, size) * dt ** (1.0 / alpha)


def uniform_directions(gen, count, d):
    if d == 1:
        return np.where(gen.random(count) < 0.5, -1.0, 1.0)[:, None]
    z = gen.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# --- driver description ------------------------------------------------------

# law -> (required, optional) parameters
_LAWS = {"normal": ((), ("mean", "std")), "fixed": (("jump",), ()),
         "sphere": (("radius",), ()), "pareto": (("scale", "index"), ())}


@dataclass(frozen=True)
class CompoundPoisson:
    """Finite jump measure ``intensity * law``.

    Laws: ``normal`` (mean, std), ``fixed`` (jump), ``sphere`` (radius; uniform
    direction), ``pareto`` (scale, index; radius ``scale U^{-1/index}``, uniform
    direction).
    """

    intensity: float
    law: str = "normal"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.intensity >= 0:
            raise LevyError("compound Poisson intensity must be non-negative")
        if self.law not in _LAWS:
            raise LevyError(f"unknown jump law {self.law!r}; choose from {list(_LAWS)}")
        required, optional = _LAWS[self.law]
        missing = set(required) - set(self.params)
        extra = set(self.params) - set(required) - set(optional)
        if missing or extra:
            raise LevyError(f"{self.law} jumps take {list(required + optional)}; "
                            f"missing {sorted(missing)}, unknown {sorted(extra)}")

    def sample(self, gen, count, d):
        p = self.params
        if self.law == "normal":
            mean = np.broadcast_to(np.asarray(p.get("mean", 0.0), float), (d,))
            return mean + float(p.get("std", 1.0)) * gen.standard_normal((count, d))
        if self.law == "fixed":
            jump = np.broadcast_to(np.asarray(p["jump"], float), (d,))
            return np.tile(jump, (count, 1))
        dirs = uniform_directions(gen, count, d)
        if self.law == "sphere":
            return float(p["radius"]) * dirs
        radius = float(p["scale"]) * (1.0 - gen.random(count)) ** (-1.0 / float(p["index"]))
        return radius[:, None] * dirs

    def has_moment(self, p: float) -> bool:
        if self.law == "pareto":
            return p < float(self.params["index"])
        return True

    def to_dict(self):
        return {"intensity": self.intensity, "law": self.law, "params": dict(self.params)}


@dataclass(frozen=True)
class StablePart:
    """Isotropic stable jumps.

    ``alpha = 2`` is accepted with the ``increments`` representation only and
    means the Gaussian limit: ``sqrt(2) B`` under ``c_d_alpha``, and
    ``sqrt(omega_{d-1} / d) B`` under ``two_minus_alpha``.
    """

    alpha: float
    normalization: str = C_D_ALPHA
    representation: str = INCREMENTS
    eps_trunc: float = EPS_TRUNC
    small_jumps: str = GAUSSIAN

    def __post_init__(self):
        if not 1 < self.alpha <= 2:
            raise LevyError(f"stable index must lie in (1, 2), got {self.alpha}")
        if self.normalization not in (C_D_ALPHA, TWO_MINUS_ALPHA):
            raise LevyError(f"unknown normalization {self.normalization!r}")
        if self.representation not in (INCREMENTS, TRUNCATED):
            raise LevyError(f"unknown representation {self.representation!r}")
        if self.small_jumps not in (GAUSSIAN, DROP):
            raise LevyError(f"unknown small-jump policy {self.small_jumps!r}")
        if not self.eps_trunc > 0:
            raise LevyError("eps_trunc must be positive")
        if self.alpha == 2 and self.representation != INCREMENTS:
            raise LevyError("alpha = 2 (the Gaussian limit) needs the increments representation")

    def density_constant(self, d: int) -> float:
        if self.alpha == 2:
            return 0.0
        if self.normalization == C_D_ALPHA:
            return stable_constant(d, self.alpha)
        return 2.0 - self.alpha

    def time_scale(self, d: int) -> float:
        """Factor ``kappa`` with characteristic exponent ``kappa |theta|^alpha``."""
        if self.normalization == C_D_ALPHA:
            return 1.0
        if self.alpha == 2:
            return sphere_area(d) / (2.0 * d)
        return (2.0 - self.alpha) / stable_constant(d, self.alpha)

    def tail_mass(self, d: int, r: float) -> float:
        """``nu(|y| > r)``."""
        return self.density_constant(d) * sphere_area(d) * r ** (-self.alpha) / self.alpha

    def small_jump_variance(self, d: int) -> float:
        """Per-coordinate variance rate of the jumps below ``eps_trunc``."""
        c = self.density_constant(d)
        eps = self.eps_trunc
        return c * sphere_area(d) * eps ** (2 - self.alpha) / ((2 - self.alpha) * d)

    def to_dict(self):
        return {"alpha": self.alpha, "normalization": self.normalization,
                "representation": self.representation, "eps_trunc": self.eps_trunc,
                "small_jumps": self.small_jumps}


@dataclass(frozen=True, eq=False)
class LevyDriverSpec:
    """Drift, compound Poisson jumps, stable part and fixed jumps of a driver.

    ``p`` is the declared moment exponent: ``int_{|y|>1} |y|^p nu(dy)`` must be
    finite, which forces ``p < alpha`` for a stable part. ``fixed_jumps`` is a
    deterministic list of ``(time, jump)`` pairs used for test drivers.
    """

    dim: int
    drift: np.ndarray = None
    compound: CompoundPoisson | None = None
    stable: StablePart | None = None
    p: float = 1.1
    fixed_jumps: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise LevyError("dimension must be positive")
        drift = np.zeros(self.dim) if self.drift is None else np.asarray(self.drift, float).reshape(-1)
        if drift.shape != (self.dim,):
            raise LevyError(f"drift must have {self.dim} components")
        object.__setattr__(self, "drift", drift)
        if not self.p > 1:
            raise LevyError(f"moment exponent p must exceed 1, got {self.p}")
        if self.stable is not None and self.stable.alpha < 2 and not self.p < self.stable.alpha:
            raise LevyError(f"moment exponent p={self.p} needs p < alpha={self.stable.alpha}")
        if self.compound is not None and not self.compound.has_moment(self.p):
            raise LevyError(f"jump law has no moment of order p={self.p}")
        fixed = []
        for t, j in self.fixed_jumps:
            jv = np.broadcast_to(np.asarray(j, float), (self.dim,)).copy()
            if not t > 0:
                raise LevyError("fixed jumps must happen at positive times")
            fixed.append((float(t), jv))
        object.__setattr__(self, "fixed_jumps", tuple(sorted(fixed, key=lambda e: e[0])))

    @property
    def is_zero(self) -> bool:
        no_cp = self.compound is None or self.compound.intensity == 0
        return no_cp and self.stable is None and not self.fixed_jumps and not np.any(self.drift)

    def with_stable(self, stable):
        return LevyDriverSpec(self.dim, self.drift, self.compound, stable, self.p,
                              tuple((t, j) for t, j in self.fixed_jumps))

    def tail_mass(self, r: float) -> float:
        """``nu(|y| > r)``; fixed jumps are not part of ``nu``."""
        mass = 0.0
        if self.stable is not None and self.stable.alpha < 2:
            mass += self.stable.tail_mass(self.dim, r)
        if self.compound is not None and self.compound.intensity > 0:
            c = self.compound
            if c.law == "fixed":
                mass += c.intensity * float(np.linalg.norm(np.broadcast_to(c.params["jump"], (self.dim,))) > r)
            elif c.law == "sphere":
                mass += c.intensity * float(c.params["radius"] > r)
            elif c.law == "pareto":
                s, a = float(c.params["scale"]), float(c.params["index"])
                mass += c.intensity * min(1.0, (s / r) ** a)
            else:
                raise LevyError("tail mass of the normal law is not tabulated")
        return mass

    def to_dict(self):
        return {"dim": self.dim, "drift": self.drift.tolist(),
                "compound": None if self.compound is None else self.compound.to_dict(),
                "stable": None if self.stable is None else self.stable.to_dict(),
                "p": self.p,
                "fixed_jumps": [[t, j.tolist()] for t, j in self.fixed_jumps]}

    @classmethod
    def from_dict(cls, spec: dict, dim: int):
        spec = dict(spec)
        known = {"drift", "compound", "stable", "p", "fixed_jumps", "dim"}
        extra = set(spec) - known
        if extra:
            raise LevyError(f"unknown levy keys: {sorted(extra)}")
        if spec.get("dim", dim) != dim:
            raise LevyError("levy dimension does not match the domain")
        cp = spec.get("compound")
        st = spec.get("stable")
        return cls(dim, spec.get("drift"),
                   CompoundPoisson(**cp) if cp else None,
                   StablePart(**st) if st else None,
                   float(spec.get("p", 1.1)),
                   tuple((t, j) for t, j in spec.get("fixed_jumps", ())))


# --- sampling ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DriverSample:
    """Random part of one path on a uniform grid of ``steps`` steps of size ``h``.

    ``grid_inc[i]`` is added at the end of step ``i``; ``jump_times`` are
    sorted and ``jump_sizes`` happen exactly then.
    """

    h: float
    grid_inc: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray


def sample_driver(spec: LevyDriverSpec, T: float, steps: int, rng_state: PathStream) -> DriverSample:
    d = spec.dim
    h = T / steps
    inc = np.tile(spec.drift * h, (steps, 1))
    times = []
    sizes = []
    st = spec.stable
    if st is not None:
        kappa = st.time_scale(d)
        if st.representation == INCREMENTS:
            gen = rng_state.generator(STABLE)
            inc += _unit_stable(st.alpha, d, gen, steps) * (kappa * h) ** (1.0 / st.alpha)
        else:
            gen = rng_state.generator(STABLE_JUMPS)
            rate = st.tail_mass(d, st.eps_trunc)
            count = gen.poisson(rate * T)
            times.append(gen.uniform(0.0, T, count))
            radius = st.eps_trunc * (1.0 - gen.random(count)) ** (-1.0 / st.alpha)
            sizes.append(radius[:, None] * uniform_directions(gen, count, d))
            if st.small_jumps == GAUSSIAN:
                sd = math.sqrt(st.small_jump_variance(d) * h)
                inc += sd * rng_state.generator(SMALL_JUMPS).standard_normal((steps, d))
    cp = spec.compound
    if cp is not None and cp.intensity > 0:
        gen = rng_state.generator(COMPOUND)
        count = gen.poisson(cp.intensity * T)
        times.append(gen.uniform(0.0, T, count))
        sizes.append(cp.sample(gen, count, d))
    for t, j in spec.fixed_jumps:
        if t <= T:
            times.append(np.array([t]))
            sizes.append(j[None, :])
    if times:
        jt = np.concatenate(times)
        js = np.concatenate(sizes).reshape(-1, d)
        order = np.argsort(jt, kind="stable")
        jt, js = jt[order], js[order]
    else:
        jt, js = np.zeros(0), np.zeros((0, d))
    return DriverSample(h, inc, jt, js)


def build_driver(spec: LevyDriverSpec, T: float, steps: int, rng_state: PathStream) -> CadlagPath:
    """The driver ``N`` on ``[0, T]`` as a path with flagged jumps.

    Stamps are the uniform grid merged with the exact jump times. Grid
    increments are linear in time except the per-step stable increments,
    which are flagged as jumps at the step ends.
    """
    sample = sample_driver(spec, T, steps, rng_state)
    return driver_path(spec, sample, T)


def driver_path(spec: LevyDriverSpec, sample: DriverSample, T: float) -> CadlagPath:
    d = spec.dim
    steps = len(sample.grid_inc)
    grid = np.linspace(0.0, T, steps + 1)
    drift_inc = np.tile(spec.drift * sample.h, (steps, 1))
    lumped = sample.grid_inc - drift_inc
    lumped_jump = spec.stable is not None and spec.stable.representation == INCREMENTS
    jt, js = sample.jump_times, sample.jump_sizes
    stamps = np.union1d(grid, jt)
    vals = np.zeros((len(stamps), d))
    mask = np.zeros(len(stamps), bool)
    sizes = np.zeros((len(stamps), d))
    # drift plus the non-flagged grid increments interpolate linearly
    cont_inc = drift_inc if lumped_jump else sample.grid_inc
    cont = np.vstack([np.zeros(d), np.cumsum(cont_inc, axis=0)])
    for k in range(d):
        vals[:, k] = np.interp(stamps, grid, cont[:, k])
    if lumped_jump:
        gi = np.searchsorted(stamps, grid[1:])
        sizes[gi] += lumped
        mask[gi] = np.any(lumped != 0, axis=1)
    ji = np.searchsorted(stamps, jt)
    np.add.at(sizes, ji, js)
    mask[ji] = True
    vals += np.cumsum(sizes, axis=0)
    mask[0] = False
    return CadlagPath(stamps, vals, mask, sizes, LINEAR)
