"""Monte Carlo solvers for Neumann problems with Levy-type generators.

Reflected jump-diffusions in convex domains are simulated by per-step
projection or by penalization; the solution is the discounted expectation of
a time integral of ``f`` plus a jump-corrected boundary functional of ``g``.
"""

from .geometry import Ball, ConvexDomain, Ellipsoid, Interval
from .fields import ScalarField
from .paths import BVPath, CadlagPath
from .levy import CompoundPoisson, LevyDriverSpec, StablePart, stable_constant
from .sde import SdeCoefficients, simulate_penalized, simulate_reflected
from .functionals import FunctionalSpec, evaluate_IT
from .skorokhod import solve_penalized, solve_reflection
from .solver import (McConfig, McEstimate, NeumannProblem, Perturbation, estimate_u,
                     estimate_u_penalized, extend_exterior, moment_experiment, run_sweep)

__version__ = "0.1.0"

__all__ = [
    "Ball", "BVPath", "CadlagPath", "CompoundPoisson", "ConvexDomain", "Ellipsoid",
    "FunctionalSpec", "Interval", "LevyDriverSpec", "ScalarField", "SdeCoefficients",
    "StablePart", "evaluate_IT", "simulate_penalized", "simulate_reflected",
    "solve_penalized", "solve_reflection", "stable_constant",
    "McConfig", "McEstimate", "NeumannProblem", "Perturbation", "estimate_u",
    "estimate_u_penalized", "extend_exterior", "moment_experiment", "run_sweep",
]
