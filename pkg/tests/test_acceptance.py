"""Acceptance runs, one test per criterion.

Each test prints ``PASS criterion k: ...`` or ``FAIL criterion k: ...``
before asserting, and the lines are repeated in the pytest summary.
The Monte Carlo criteria take minutes and are marked slow.
"""

import math
import time

import numpy as np
import pytest

from levy_neumann.cli import RunConfig, execute
from levy_neumann.fields import ScalarField
from levy_neumann.functionals import FunctionalSpec, evaluate_IT
from levy_neumann.geometry import Ball, Interval
from levy_neumann.levy import CompoundPoisson, LevyDriverSpec, StablePart
from levy_neumann.oracles import ball_exterior, interval_exterior, oracle_u
from levy_neumann.paths import CadlagPath
from levy_neumann.rng import stream
from levy_neumann.sde import SdeCoefficients, simulate_penalized, simulate_reflected
from levy_neumann.skorokhod import solve_penalized, solve_reflection
from levy_neumann.solver import (ALPHA, PENALIZATION, McConfig, NeumannProblem, estimate_u,
                                 extend_exterior, moment_experiment, run_sweep)

Z, A, T = 0.5, 0.25, 1.0
UNIT = Interval(0.0, 1.0)
DISC = Ball([0.0, 0.0], 1.0)


def drop_path(m=400):
    t = np.linspace(0.0, T, m + 1)
    return CadlagPath.from_values(t, np.where(t >= A - 1e-12, -Z, 0.0))


def disc_problem(g):
    levy = LevyDriverSpec(2, compound=CompoundPoisson(2.0, "normal", {"std": 0.5}), stable=StablePart(1.5), p=1.2)
    spec = FunctionalSpec(ScalarField.constant(1.0, 2), ScalarField.constant(g, 2), 1.0)
    return NeumannProblem(DISC, SdeCoefficients.isotropic(2, 0.5), levy, spec)


def test_criterion_1_penalized_drop(acceptance):
    y = drop_path()
    solve_penalized(UNIT, y, 10.0)  # warm the kernels
    start = time.perf_counter()
    worst = 0.0
    for n in (10.0, 100.0, 1000.0):
        x_T = solve_penalized(UNIT, y, n).x.values[-1, 0]
        worst = max(worst, abs(x_T + Z * math.exp(-n * (T - A))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 1.0
    acceptance(1, ok, f"max |x_n(T) + z e^(-n(T-a))| = {worst:.2e} (< 1e-10), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_2_boundary_functional(acceptance):
    g = ScalarField.linear([1.0])
    err = abs(solve_penalized(UNIT, drop_path(), 1000.0).boundary_integral(g, 0.0) + 0.125)
    limit = evaluate_IT(g, solve_reflection(UNIT, drop_path()), 0.0)
    ok = err < 1e-3 and abs(limit + 0.125) <= 1e-10
    acceptance(2, ok, f"|I_n + 0.125| = {err:.2e} at n = 1000 (< 1e-3), limit pair {limit:.12f} (-0.125 +- 1e-10)")
    assert ok


def test_criterion_3_still_process(acceptance):
    cases = [interval_exterior(), ball_exterior()]
    estimate_u(cases[0].problem, cases[0].points[0])  # warm-up
    start = time.perf_counter()
    worst, count = 0.0, 0
    for case in cases:
        for x in case.points:
            est = estimate_u(case.problem, x)
            assert est.n_paths == 1
            worst = max(worst, abs(est.mean - oracle_u(case, x)))
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 1.0 and all(len(c.points) >= 5 for c in cases)
    acceptance(3, ok, f"{count} exterior points, max |estimate - oracle| = {worst:.2e} (< 1e-10), "
                      f"{elapsed:.3f} s (< 1 s)")
    assert ok


@pytest.mark.slow
def test_criterion_4_constant_source(acceptance):
    problem = disc_problem(0.0)
    start = time.perf_counter()
    est = estimate_u(problem, [0.3, 0.2], McConfig(n_paths=10_000, seed=3))
    elapsed = time.perf_counter() - start
    tol = max(3 * est.std_error, math.exp(-est.horizon))
    ok = abs(est.mean - 1.0) <= tol and elapsed < 60.0
    acceptance(4, ok, f"mean {est.mean:.6f}, |mean - 1| = {abs(est.mean - 1):.2e} <= {tol:.2e}, "
                      f"T = {est.horizon:g}, {elapsed:.1f} s (< 60 s)")
    assert ok


@pytest.mark.slow
def test_criterion_5_exterior_extension(acceptance):
    problem = disc_problem(1.0)
    cfg = McConfig(n_paths=10_000, seed=3)
    points = ([1.5, 0.0], [0.0, -2.0], [1.2, 1.2], [-1.1, 0.3], [0.8, -0.9])
    worst_ratio, parts = 0.0, []
    for x in points:
        direct = estimate_u(problem, x, cfg)
        ext = extend_exterior(estimate_u(problem, DISC.project(np.array(x)), cfg), problem, x)
        gap = abs(direct.mean - ext.mean)
        se = math.hypot(direct.std_error, ext.std_error)
        worst_ratio = max(worst_ratio, gap / (3 * se))
        parts.append(f"{gap:.1e}")
    ok = worst_ratio <= 1.0
    acceptance(5, ok, f"gaps {', '.join(parts)}; worst gap / (3 SE) = {worst_ratio:.3f} (<= 1)")
    assert ok


@pytest.mark.slow
def test_criterion_6_penalized_convergence(acceptance):
    # D = (0, 1), sigma = 1, f = x, g = 1, lam = 1, x = 0.5; 4x refined grid
    spec = FunctionalSpec(ScalarField.linear([1.0]), ScalarField.constant(1.0), 1.0)
    problem = NeumannProblem(UNIT, SdeCoefficients.isotropic(1, 1.0), LevyDriverSpec(1), spec)
    start = time.perf_counter()
    table = run_sweep(problem, PENALIZATION, [4, 16, 64, 256], [[0.5]],
                      McConfig(n_paths=10_000, steps=4 * 4096, seed=5))
    elapsed = time.perf_counter() - start
    rows = table.rows
    gaps = [abs(r.error) for r in rows]
    monotone = all(b <= a + 3 * r.combined_se for a, b, r in zip(gaps, gaps[1:], rows[1:]))
    final = rows[-1]
    close = gaps[-1] < 3 * final.combined_se
    ok = monotone and close and elapsed < 300.0
    acceptance(6, ok, "gaps " + ", ".join(f"n={r.param:g}: {abs(r.error):.2e}" for r in rows)
               + f"; non-increasing within CI: {monotone}; final {gaps[-1]:.2e} vs 3 SE {3 * final.combined_se:.2e}"
               + f"; {elapsed:.0f} s (< 300 s)")
    assert monotone, "gap grows beyond the confidence width"
    assert elapsed < 300.0
    assert close, "final penalization gap exceeds 3 combined standard errors"


@pytest.mark.slow
def test_criterion_7_alpha_to_two(acceptance):
    # D = (-1, 1), sigma = 0, f = x^2, g = 0, x = 0; u at alpha = 2 is 2 - 2 / sinh(1)
    spec = FunctionalSpec(ScalarField.polynomial([0.0, 0.0, 1.0]), ScalarField.constant(0.0), 1.0)
    problem = NeumannProblem(Interval(-1.0, 1.0), SdeCoefficients(np.zeros((1, 0))),
                             LevyDriverSpec(1, stable=StablePart(1.8), p=1.2), spec)
    start = time.perf_counter()
    table = run_sweep(problem, ALPHA, [1.8, 1.9, 1.95], [[0.0]],
                      McConfig(n_paths=100_000, horizon=10.0, steps=4096, seed=11))
    elapsed = time.perf_counter() - start
    rows = table.rows
    errs = [abs(r.error) for r in rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    final = rows[-1]
    close = errs[-1] < 3 * final.combined_se
    ok = decreasing and close and elapsed < 600.0
    acceptance(7, ok, "errors " + ", ".join(f"alpha={r.param:g}: {abs(r.error):.2e}" for r in rows)
               + f"; decreasing: {decreasing}; final {errs[-1]:.2e} vs 3 SE {3 * final.combined_se:.2e}"
               + f"; target {rows[0].target.mean:.5f} (exact {2 - 2 / math.sinh(1):.5f}); {elapsed:.0f} s (< 600 s)")
    assert decreasing
    assert elapsed < 600.0
    assert close, "alpha = 1.95 error exceeds 3 combined standard errors"


@pytest.mark.slow
def test_criterion_8_moment_monitoring(acceptance):
    spec = FunctionalSpec(ScalarField.constant(0.0), ScalarField.constant(0.0), 1.0)
    problem = NeumannProblem(UNIT, SdeCoefficients.zero(1), LevyDriverSpec(1, stable=StablePart(1.5), p=1.2), spec)
    table = moment_experiment(problem, [0.5], [1, 10, 100, 1000], [1, 2, 4, 8],
                              McConfig(n_paths=2000, steps=4096, seed=1))
    slopes, expo = table.n_slopes(), table.t_exponents(1.0)
    flat = bool(np.all(np.abs(slopes) <= 0.1))
    growth = bool(np.all(expo <= table.p + 0.5))
    acceptance(8, flat and growth,
               "n-slopes " + ", ".join(f"{s:+.3f}" for s in slopes) + f" (|.| <= 0.1: {flat}); "
               "t-exponents " + ", ".join(f"{e:.3f}" for e in expo) + f" (<= {table.p + 0.5:g}: {growth})")
    assert growth
    assert flat, "E|K_n|_t^p drifts with n"


@pytest.mark.slow
def test_criterion_9_reflection_vs_penalization(acceptance):
    coeffs = SdeCoefficients.isotropic(2, 0.5)
    levy = LevyDriverSpec(2, compound=CompoundPoisson(3.0, "normal", {"std": 0.5}), p=1.2)
    medians = {}
    for steps in (4096, 4 * 4096):
        dist = []
        for i in range(100):
            r = simulate_reflected([0.5, 0.0], coeffs, levy, DISC, 1.0, steps, stream(7, i))
            p = simulate_penalized([0.5, 0.0], coeffs, levy, DISC, 1e4, 1.0, steps, stream(7, i))
            # the penalized path overshoots at every exit jump; compare its projection
            dist.append(np.max(np.abs(DISC.project(p.X.values) - r.X.values)))
        medians[steps] = float(np.median(dist))
    small = medians[4096] < 1e-2
    refining = medians[4 * 4096] < medians[4096]
    acceptance(9, small and refining,
               f"median sup-distance {medians[4096]:.2e} at 4096 steps (< 1e-2: {small}), "
               f"{medians[4 * 4096]:.2e} at 16384 steps (decreasing: {refining})")
    assert small
    assert refining, "agreement does not improve under grid refinement"


def test_criterion_10_reproducible_csv(acceptance, tmp_path):
    spec = {
        "domain": {"shape": "ball", "center": [0.0, 0.0], "radius": 1.0},
        "coefficients": {"sigma": 0.5},
        "levy": {"compound": {"intensity": 2.0, "law": "normal", "params": {"std": 0.5}},
                 "stable": {"alpha": 1.5}, "p": 1.2},
        "f": {"name": "constant", "c": 1.0},
        "g": {"name": "constant", "c": 1.0},
        "points": [[0.3, 0.2], [1.5, 0.0]],
        "mc": {"paths": 500, "steps": 256},
        "seed": 4,
    }
    blobs = []
    for run in ("a", "b"):
        execute(RunConfig.from_dict(spec), str(tmp_path / run))
        blobs.append((tmp_path / run / "results.csv").read_bytes())
    ok = blobs[0] == blobs[1]
    acceptance(10, ok, f"two runs, results.csv byte-identical: {ok} ({len(blobs[0])} bytes)")
    assert ok
