"""Reference solutions with closed forms, plus a brute-force reflection oracle.

Every catalog case carries a closed-form value and re-derives it with
``scipy.integrate.quad`` when it is built; a mismatch above ``1e-10`` raises.
The reflection oracle is a separate fine-grid penalization and shares no
code with :mod:`levy_neumann.skorokhod`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .fields import ScalarField
from .functionals import FunctionalSpec
from .geometry import Ball, ConvexDomain, Interval
from .levy import LevyDriverSpec
from .paths import STEP, BVPath, CadlagPath
from .sde import SdeCoefficients
from .skorokhod import SkorokhodSolution
from .solver import NeumannProblem

SELF_CHECK_TOL = 1e-10
QUAD_TOL = 1e-13


class OracleError(ValueError):
    pass


def _quad(func, a, b):
    val, _ = integrate.quad(func, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return float(val)


@dataclass(frozen=True, eq=False)
class OracleCase:
    """A problem with a known solution.

    ``exact`` is the closed form and ``quadrature`` an independent evaluation
    of the defining integral; both map a point to a value. ``support`` tells
    where the case is defined.
    """

    name: str
    note: str
    problem: NeumannProblem | None
    exact: object
    quadrature: object
    support: object
    points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for x in self.points:
            a, b = self.exact(np.atleast_1d(np.asarray(x, float))), self.quadrature(np.atleast_1d(np.asarray(x, float)))
            if not abs(a - b) <= SELF_CHECK_TOL * max(1.0, abs(a)):
                raise OracleError(f"oracle {self.name} fails its self-check at {x}: {a!r} vs {b!r}")


def oracle_u(case: OracleCase, x) -> float:
    """Reference value of ``case`` at ``x`` by adaptive quadrature."""
    x = np.atleast_1d(np.asarray(x, float))
    if not case.support(x):
        raise OracleError(f"oracle {case.name} is not defined at {x.tolist()}")
    return case.quadrature(x)


# --- closed forms of line integrals of g ---------------------------------------------

def _line_integral_exact(g: ScalarField, start, direction, length):
    """``int_0^length g(start + s direction) ds`` for constant and cosine ``g``."""
    if g.is_constant:
        return float(g(start)) * length
    if g.name == "cosine":
        w = np.asarray(g.params["w"], float)
        amp, ph = g.params["amp"], g.params["phase"]
        c0 = float(w @ start) + ph
        c = float(w @ direction)
        if c == 0.0:
            return amp * math.cos(c0) * length
        return amp * (math.sin(c0 + c * length) - math.sin(c0)) / c
    raise OracleError(f"no closed form for a {g.name} boundary flux")


def _line_integral_quad(g: ScalarField, start, direction, length):
    return _quad(lambda s: g(start + s * direction), 0.0, length)


def _zero_dynamics(domain, g, lam=1.0, f=None):
    d = domain.dim
    f = ScalarField.constant(0.0, d) if f is None else f
    return NeumannProblem(domain, SdeCoefficients.zero(d), LevyDriverSpec(d), FunctionalSpec(f, g, lam))


def _exterior_case(name, note, domain, g, points):
    """Still process, ``f = 0``: ``u(x) = int_0^{|x - Pi x|} g(Pi x + s e) ds``, ``e`` outward."""

    def split(x):
        px = domain.project(x)
        gap = x - px
        L = float(np.linalg.norm(gap))
        return px, (gap / L if L > 0 else gap), L

    def exact(x):
        px, e, L = split(x)
        return _line_integral_exact(g, px, e, L) if L > 0 else 0.0

    def quad(x):
        px, e, L = split(x)
        return _line_integral_quad(g, px, e, L) if L > 0 else 0.0

    return OracleCase(name, note, _zero_dynamics(domain, g), exact, quad,
                      lambda x: x.shape == (domain.dim,), tuple(points))


def interval_exterior(g: ScalarField | None = None, points=(-0.5, -0.1, 1.2, 1.7, 2.5)) -> OracleCase:
    g = ScalarField.constant(1.0) if g is None else g
    return _exterior_case("interval_exterior", "D = (0, 1), still process, f = 0: u(-z) = int_0^z g(-s) ds",
                          Interval(0.0, 1.0), g, [[p] for p in points])


def ball_exterior(g: ScalarField | None = None,
                  points=((2.0, 0.0), (0.0, -1.5), (1.2, 1.2), (-3.0, 0.5), (0.3, 1.1))) -> OracleCase:
    g = ScalarField.constant(1.0, 2) if g is None else g
    return _exterior_case("ball_exterior", "unit disc, still process, f = 0: u(x) = int_0^{|x|-1} g(x/|x| (1+s)) ds",
                          Ball([0.0, 0.0], 1.0), g, points)


def constant_source(c: float = 1.5, lam: float = 2.0) -> OracleCase:
    domain = Interval(0.0, 1.0)
    problem = _zero_dynamics(domain, ScalarField.constant(0.0), lam, ScalarField.constant(c))
    return OracleCase("constant_source", "f = c, g = 0: u = c / lam for any dynamics",
                      problem, lambda x: c / lam,
                      lambda x: _quad(lambda t: c * math.exp(-lam * t), 0.0, math.inf),
                      lambda x: True, ([0.5],))


def jump_exit(z: float = 0.5) -> OracleCase:
    """Boundary functional of a path thrown to ``-z`` outside ``(0, 1)`` with ``g(x) = x``.

    Not a Neumann problem (``g`` is unbounded); the value is a number.
    """
    g = ScalarField.linear([1.0])
    return OracleCase("jump_exit", "undiscounted int g(x) d|k| -> int_0^z g(-r) dr = -z^2/2",
                      None, lambda x: -z * z / 2,
                      lambda x: _quad(lambda r: float(g([-r])), 0.0, z),
                      lambda x: True, ([0.0],))


def catalog() -> dict:
    """All cases, keyed by name; each has passed its self-check."""
    cases = [
        interval_exterior(),
        _exterior_case("interval_exterior_cosine", "D = (0, 1), still process, g = cos(2x + 0.3)",
                       Interval(0.0, 1.0), ScalarField.cosine([2.0], 1.0, 0.3),
                       [[-0.5], [-0.1], [1.2], [1.7], [2.5]]),
        ball_exterior(),
        _exterior_case("ball_exterior_cosine", "unit disc, still process, g = cos(x1 + 0.5 x2 + 0.2)",
                       Ball([0.0, 0.0], 1.0), ScalarField.cosine([1.0, 0.5], 1.0, 0.2),
                       [(2.0, 0.0), (0.0, -1.5), (1.2, 1.2), (-3.0, 0.5), (0.3, 1.1)]),
        constant_source(),
        jump_exit(),
    ]
    return {c.name: c for c in cases}


# --- brute-force reflection ---------------------------------------------------------

ORACLE_PENALTY = 1e5
ORACLE_REFINE = 8


def oracle_skorokhod(domain: ConvexDomain, y: CadlagPath, n: float = ORACLE_PENALTY,
                     refine: int = ORACLE_REFINE) -> SkorokhodSolution:
    """Reflection of ``y`` by stiff penalization on a refined grid, then projection.

    Each stamp interval is cut into ``refine`` pieces; on every piece the
    continuous part of ``y`` moves the state, then the penalty pulls it
    towards its projection for the piece's duration. Jumps are added at
    their stamps.
    """
    t, v = y.times, y.values
    left = y.left_values()
    x = v[0].copy()
    out = np.empty_like(v)
    out[0] = domain.project(x)
    for i in range(len(t) - 1):
        delta = (t[i + 1] - t[i]) / refine
        cont = (left[i + 1] - v[i]) / refine
        decay = math.exp(-n * delta)
        for _ in range(refine):
            x = x + cont
            p = domain.project(x)
            x = p + (x - p) * decay
        x = x + (v[i + 1] - left[i + 1])
        out[i + 1] = domain.project(x)
    xp = CadlagPath.from_values(t, out, STEP)
    return SkorokhodSolution(xp, BVPath.from_values(t, out - v, STEP), domain)
