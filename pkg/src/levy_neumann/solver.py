"""Monte Carlo solver for the nonlocal Neumann problem on a convex domain.

``u(x) = E[ int_0^inf e^{-lam t} f(X_t) dt + boundary functional of K ]`` is
estimated from reflected paths truncated at a finite horizon ``T``; the
truncation error is bounded a posteriori and, when ``T`` is not given,
``T`` is chosen so that this bound stays below a tenth of the standard error.

Sweeps reuse the path seed of their target so that differences between
configurations are driven by the same random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import ScalarField
from .functionals import GL_NODES, FunctionalSpec, segment_integral
from .geometry import ConvexDomain
from .levy import LevyDriverSpec, StablePart
from .sde import SdeCoefficients, path_functionals

DEFAULT_STEPS = 4096
HORIZON_SE_FRACTION = 0.1
_DETERMINISTIC_TOL = 1e-13
_PILOT_PATHS = 512


class ProblemError(ValueError):
    pass


# --- problem ---------------------------------------------------------------------

def _closure_samples(domain: ConvexDomain, count: int = 512, seed: int = 0):
    gen = np.random.default_rng(seed)
    c, a = np.asarray(domain.center), np.asarray(domain.axes)
    box = c + a * gen.uniform(-1.5, 1.5, size=(count, domain.dim))
    return domain.project(box)


@dataclass(frozen=True, eq=False)
class NeumannProblem:
    """Domain, jump-diffusion coefficients, driver and data ``(f, g, lam)``.

    The standing assumptions are checked on construction: bounded Lipschitz
    coefficients, a driver with a finite moment of order ``p > 1`` (checked by
    :class:`LevyDriverSpec`), a bounded ``g`` and, when declared, the growth
    bound on ``f`` over the closure of the domain.
    """

    domain: ConvexDomain
    coeffs: SdeCoefficients
    levy: LevyDriverSpec
    functional: FunctionalSpec

    def __post_init__(self):
        problems = self.assumption_failures()
        if problems:
            raise ProblemError("; ".join(problems))

    def assumption_failures(self) -> list[str]:
        d = self.domain.dim
        out = []
        if self.coeffs.dim != d or self.levy.dim != d or self.functional.f.dim != d:
            out.append("dimensions of domain, coefficients, driver and data differ")
            return out
        if not self.coeffs.is_bounded_lipschitz():
            out.append("drift is unbounded: set a finite b_clip or kappa = 0")
        if not self.functional.g.is_bounded:
            out.append(f"g must be bounded; a {self.functional.g.name} field grows at infinity")
        pts = _closure_samples(self.domain)
        if not self.functional.check_growth(pts):
            out.append("f violates its declared growth bound on the domain")
        return out

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def f(self) -> ScalarField:
        return self.functional.f

    @property
    def g(self) -> ScalarField:
        return self.functional.g

    @property
    def lam(self) -> float:
        return self.functional.lam

    @property
    def is_deterministic(self) -> bool:
        lv = self.levy
        no_cp = lv.compound is None or lv.compound.intensity == 0
        return self.coeffs.sigma_bound == 0 and no_cp and lv.stable is None

    def with_(self, **changes) -> "NeumannProblem":
        functional = self.functional
        if "f" in changes or "g" in changes or "lam" in changes:
            functional = replace(functional, f=changes.pop("f", functional.f),
                                 g=changes.pop("g", functional.g), lam=changes.pop("lam", functional.lam))
        return replace(self, functional=functional, **changes)

    def sup_f(self) -> float:
        return self.f.sup_on(_closure_samples(self.domain, 4096))

    def sup_g(self) -> float:
        if self.g.is_constant:
            return abs(float(self.g(np.asarray(self.domain.center, float))))
        c, a = np.asarray(self.domain.center), np.asarray(self.domain.axes)
        gen = np.random.default_rng(1)
        pts = c + a * gen.uniform(-4, 4, size=(4096, self.dim))
        return self.g.sup_on(pts)


# --- estimates -------------------------------------------------------------------

@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings; ``horizon=None`` selects ``T`` automatically."""

    n_paths: int = 10_000
    horizon: float | None = None
    steps: int = DEFAULT_STEPS
    seed: int = 0
    backend: str | None = None
    batch: int = 256
    nodes: int = GL_NODES

    def __post_init__(self):
        if self.n_paths < 1:
            raise ProblemError("n_paths must be positive")
        if self.steps < 4 or self.steps % 4:
            raise ProblemError("steps must be a positive multiple of 4")
        if self.horizon is not None and not self.horizon > 0:
            raise ProblemError("horizon must be positive")
        if self.seed < 0:
            raise ProblemError("seed must be non-negative")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    horizon: float
    truncation_bias_bound: float
    steps: int = DEFAULT_STEPS

    def interval(self, k: float = 3.0):
        w = k * self.std_error + self.truncation_bias_bound
        return self.mean - w, self.mean + w


def _sample_mean(values):
    # np.sum reduces float arrays by pairwise summation in a fixed order
    return float(np.sum(values) / len(values))


def _std_error(values):
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _variation_rate(variation, times):
    """``C_K`` with ``E|K|_t <= C_K (1 + t)`` on the checkpoints."""
    if variation.size == 0:
        return 0.0
    mean = variation.mean(axis=0)
    return float(np.max(mean / (1.0 + times)))


def truncation_bias_bound(problem: NeumannProblem, T: float, c_k: float) -> float:
    """Bound on the part of ``u`` discarded by stopping at ``T``.

    Uses ``sup|f|`` on the closure and ``E|K|_t <= C_K (1 + t)``.
    """
    lam = problem.lam
    tail = problem.sup_f() / lam
    sg = problem.sup_g()
    if sg > 0:
        tail += sg * c_k * (1.0 + T + 1.0 / lam)
    return math.exp(-lam * T) * tail


def _solve_horizon(problem, c_k, target):
    """Smallest ``T`` (to 1%) whose bias bound is below ``target``."""
    lo, hi = 0.0, 1.0 / problem.lam
    while truncation_bias_bound(problem, hi, c_k) > target:
        lo, hi = hi, 2 * hi
        if hi > 1e4 / problem.lam:
            break
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if truncation_bias_bound(problem, mid, c_k) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 0.01 * hi:
            break
    return max(hi, 1.0 / problem.lam)


def _run(problem, x, config, n_pen, T, n_paths, checkpoints=True, first_index=0):
    ck = (T * np.arange(1, 5) / 4) if checkpoints and problem.sup_g() > 0 else ()
    res = path_functionals(x, problem.coeffs, problem.levy, problem.domain, problem.f, problem.g,
                           problem.lam, T, config.steps, config.seed, n_paths, n_pen=n_pen,
                           checkpoints=ck, backend=config.backend, batch=config.batch,
                           first_index=first_index, nodes=config.nodes)
    c_k = _variation_rate(res.variation, res.checkpoint_times) if len(ck) else 0.0
    return res.values, c_k


def choose_horizon(problem: NeumannProblem, x, config: McConfig, n_pen: float = 0.0) -> float:
    """Auto horizon: bias bound at most a tenth of the expected standard error."""
    lam = problem.lam
    if problem.is_deterministic:
        return _solve_horizon(problem, _deterministic_rate(problem, x, config, n_pen), _DETERMINISTIC_TOL)
    pilot = min(_PILOT_PATHS, config.n_paths)
    T0 = 8.0 / lam
    vals, c_k = _run(problem, x, replace(config, steps=min(config.steps, 1024)), n_pen, T0, pilot)
    se = float(np.std(vals, ddof=1)) / math.sqrt(config.n_paths) if pilot > 1 else 0.0
    target = HORIZON_SE_FRACTION * se if se > 0 else _DETERMINISTIC_TOL
    return _solve_horizon(problem, c_k, target)


def _deterministic_rate(problem, x, config, n_pen):
    _, c_k = _run(problem, x, replace(config, steps=min(config.steps, 1024)), n_pen, 8.0 / problem.lam, 1)
    return c_k


def _estimate(problem, x, config, n_pen):
    x = np.atleast_1d(np.asarray(x, float))
    T = config.horizon if config.horizon is not None else choose_horizon(problem, x, config, n_pen)
    n_paths = 1 if problem.is_deterministic else config.n_paths
    vals, c_k = _run(problem, x, config, n_pen, T, n_paths)
    est = McEstimate(_sample_mean(vals), _std_error(vals), n_paths, float(T),
                     truncation_bias_bound(problem, T, c_k), config.steps)
    return est, vals


def estimate_u(problem: NeumannProblem, x, config: McConfig = McConfig()) -> McEstimate:
    """Reflected-path estimate of ``u(x)``; deterministic problems use one path."""
    return _estimate(problem, x, config, 0.0)[0]


def estimate_u_penalized(problem: NeumannProblem, x, n: float, config: McConfig = McConfig()) -> McEstimate:
    """Estimate of ``u_n(x)`` from penalized paths with penalty ``n``."""
    if not n > 0:
        raise ProblemError(f"penalty must be positive, got {n}")
    return _estimate(problem, x, config, float(n))[0]


def extend_exterior(u_on_closure, problem: NeumannProblem, x, nodes: int = GL_NODES):
    """``u(x) = u(Pi(x)) + int_0^{|x - Pi(x)|} g(Pi(x) - s n(Pi(x))) ds``.

    ``u_on_closure`` is a callable on the closure, a number (the value at
    ``Pi(x)``) or an :class:`McEstimate`, whose error bars are kept. Points
    of the closure are rejected.
    """
    x = np.atleast_1d(np.asarray(x, float))
    if problem.domain.contains(x, tol=0.0):
        raise ProblemError("extend_exterior needs a point outside the closed domain")
    px = problem.domain.project(x)
    gap = x - px
    L = float(np.linalg.norm(gap))
    corr = 0.0
    if L > 0:
        u = gap / L
        g = problem.g
        corr = segment_integral(lambda r: g(px[None, :] + r[:, None] * u[None, :]), L, nodes)
    if isinstance(u_on_closure, McEstimate):
        return replace(u_on_closure, mean=u_on_closure.mean + corr)
    base = u_on_closure(px) if callable(u_on_closure) else u_on_closure
    return float(base) + corr


# --- sweeps ----------------------------------------------------------------------

PENALIZATION = "penalization"
ALPHA = "alpha"
COEFFICIENTS = "coefficients"


@dataclass(frozen=True)
class Perturbation:
    """``sigma + sigma_shift I``, ``b + b_shift``, ``f + f_shift``, labelled by ``param``."""

    param: float
    sigma_shift: float = 0.0
    b_shift: float = 0.0
    f_shift: float = 0.0

    def apply(self, problem: NeumannProblem) -> NeumannProblem:
        out = problem.with_(coeffs=problem.coeffs.shifted(self.sigma_shift, self.b_shift))
        if self.f_shift:
            out = out.with_(f=problem.f.shifted(self.f_shift))
        return out


@dataclass(frozen=True)
class SweepRow:
    param: float
    x: tuple
    estimate: McEstimate
    target: McEstimate
    diff_se: float          # standard error of the paired difference

    @property
    def error(self) -> float:
        return self.estimate.mean - self.target.mean

    @property
    def combined_se(self) -> float:
        return math.hypot(self.estimate.std_error, self.target.std_error)


@dataclass
class SweepTable:
    kind: str
    rows: list = field(default_factory=list)

    CSV_HEADER = "sweep_param,x,mean,std_error,bias_bound,n_paths"

    def errors(self, x=None):
        rows = [r for r in self.rows if x is None or r.x == tuple(np.atleast_1d(x))]
        return np.array([r.error for r in rows])

    def csv_lines(self):
        lines = [self.CSV_HEADER]
        targets = {}
        for r in self.rows:
            targets.setdefault(r.x, r.target)
        for xs, t in targets.items():
            lines.append(csv_row("target", xs, t))
        for r in self.rows:
            lines.append(csv_row(format_number(r.param), r.x, r.estimate))
        return lines

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")


def format_number(v) -> str:
    return format(float(v), ".17g")


def csv_row(param, xs, est: McEstimate) -> str:
    x = ";".join(format_number(c) for c in xs)
    return f"{param},{x},{format_number(est.mean)},{format_number(est.std_error)},{format_number(est.truncation_bias_bound)},{est.n_paths}"


def _alpha_problem(problem, alpha):
    st = problem.levy.stable
    if st is None:
        raise ProblemError("an alpha sweep needs a stable part in the driver")
    return problem.with_(levy=problem.levy.with_stable(replace(st, alpha=float(alpha))))


def run_sweep(problem: NeumannProblem, kind: str, values, points, config: McConfig = McConfig()) -> SweepTable:
    """Estimates along a sweep and their errors against the limiting problem.

    * ``penalization``: ``values`` are penalties ``n``, target the reflected ``u``.
    * ``alpha``: stable indices, target the Gaussian limit ``alpha = 2``
      driven by the same random numbers.
    * ``coefficients``: :class:`Perturbation` entries, target ``problem`` itself.

    All entries of a sweep and the target share one horizon: the longest of
    their automatic horizons unless ``config.horizon`` is set.
    """
    if kind == ALPHA:
        target_problem = _alpha_problem(problem, 2.0)
    elif kind in (PENALIZATION, COEFFICIENTS):
        target_problem = problem
    else:
        raise ProblemError(f"unknown sweep kind {kind!r}")
    def entry(v):
        if kind == PENALIZATION:
            return problem, float(v), float(v)
        if kind == ALPHA:
            return _alpha_problem(problem, v), 0.0, float(v)
        pert = v if isinstance(v, Perturbation) else Perturbation(**v)
        return pert.apply(problem), 0.0, pert.param

    entries = [entry(v) for v in values]
    table = SweepTable(kind)
    for x in points:
        x = np.atleast_1d(np.asarray(x, float))
        cfg = config
        if config.horizon is None:
            # one horizon long enough for the target and every entry
            T = max([choose_horizon(target_problem, x, config)]
                    + [choose_horizon(p, x, config, n_pen) for p, n_pen, _ in entries])
            cfg = replace(config, horizon=T)
        tgt, tvals = _estimate(target_problem, x, cfg, 0.0)
        for prob, n_pen, param in entries:
            est, vals = _estimate(prob, x, cfg, n_pen)
            diff = vals - tvals if len(vals) == len(tvals) else None
            dse = _std_error(diff) if diff is not None else math.hypot(est.std_error, tgt.std_error)
            table.rows.append(SweepRow(param, tuple(x.tolist()), est, tgt, dse))
    return table


# --- moment monitoring ---------------------------------------------------------------

@dataclass(frozen=True)
class MomentTable:
    """``E|K_n|_t^p`` on a grid of penalties and times."""

    penalties: np.ndarray
    times: np.ndarray
    p: float
    moments: np.ndarray       # (len(penalties), len(times))
    std_errors: np.ndarray

    def n_slopes(self):
        """Least-squares slope of ``log E|K_n|_t^p`` against ``log n`` for every ``t``."""
        ln = np.log(self.penalties)
        return np.array([np.polyfit(ln, np.log(self.moments[:, k]), 1)[0] for k in range(len(self.times))])

    def t_exponents(self, t_min: float = 1.0):
        """Slope of ``log E|K_n|_t^p`` against ``log t`` on ``t >= t_min``, per penalty."""
        keep = self.times >= t_min
        lt = np.log(self.times[keep])
        return np.array([np.polyfit(lt, np.log(row[keep]), 1)[0] for row in self.moments])


def moment_experiment(problem: NeumannProblem, x, penalties, times, config: McConfig = McConfig(),
                      p: float | None = None) -> MomentTable:
    """Empirical moments of the penalization variation along coupled paths."""
    p = problem.levy.p if p is None else float(p)
    times = np.asarray(times, float)
    T = float(times.max())
    x = np.atleast_1d(np.asarray(x, float))
    mom, ses = [], []
    for n in penalties:
        if not n > 0:
            raise ProblemError("penalties must be positive")
        res = path_functionals(x, problem.coeffs, problem.levy, problem.domain, problem.f, problem.g,
                               problem.lam, T, config.steps, config.seed, config.n_paths, n_pen=float(n),
                               checkpoints=times, backend=config.backend, batch=config.batch)
        vals = res.variation ** p
        mom.append(vals.mean(axis=0))
        ses.append(vals.std(axis=0, ddof=1) / math.sqrt(len(vals)))
    return MomentTable(np.asarray(penalties, float), times, p, np.array(mom), np.array(ses))
