import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levy_neumann.fields import ScalarField
from levy_neumann.functionals import (FunctionalError, FunctionalSpec, discounted_time_integral,
                                      evaluate_IT, jump_correction, segment_integral)
from levy_neumann.geometry import Ball, Interval
from levy_neumann.paths import CadlagPath
from levy_neumann.skorokhod import solve_penalized, solve_reflection

Z, A, T = 0.5, 0.25, 1.0
UNIT = Interval(0.0, 1.0)
IDENT = ScalarField.linear([1.0])


def drop_path(z=Z, m=400):
    t = np.linspace(0.0, T, m + 1)
    return CadlagPath.from_values(t, np.where(t >= A - 1e-12, -z, 0.0))


def test_constant_source_infinite_horizon():
    X = CadlagPath.from_values([0.0, 0.3, 2.0], [[0.1], [0.7], [0.2]])
    assert discounted_time_integral(ScalarField.constant(2.5), X, 0.5) == pytest.approx(5.0, rel=1e-14)
    assert discounted_time_integral(ScalarField.constant(0.0), X, 0.5) == 0.0


def test_frozen_state_quadratic():
    x0 = np.array([0.3, -0.4])
    X = CadlagPath.from_values(np.linspace(0, 10, 33), np.tile(x0, (33, 1)))
    f = ScalarField.radial([0.0, 0.0, 1.0], [0.0, 0.0])
    exact = 0.25 * (1 - math.exp(-10))
    assert discounted_time_integral(f, X, 1.0, 10.0) == pytest.approx(exact, rel=1e-13)
    fine = CadlagPath.from_values(np.linspace(0, 10, 1025), np.tile(x0, (1025, 1)))
    assert discounted_time_integral(f, fine, 1.0, 10.0) == pytest.approx(exact, rel=1e-13)


def test_infinite_horizon_needs_discount():
    X = CadlagPath.from_values([0.0, 1.0], [0.0, 0.0])
    with pytest.raises(FunctionalError):
        discounted_time_integral(IDENT, X, 0.0)


def test_jump_correction_constant_g_vanishes():
    assert jump_correction(ScalarField.constant(3.0), [0.0], [Z], UNIT) == 0.0


def test_jump_correction_linear_g():
    assert jump_correction(IDENT, [0.0], [Z], UNIT) == pytest.approx(-Z ** 2 / 2, abs=1e-15)
    # right wall: inward normal -1, gbar(1 + r) = r
    assert jump_correction(IDENT, [1.0], [-0.8], UNIT) == pytest.approx(0.32, abs=1e-15)


def test_jump_correction_rejects_interior_push():
    with pytest.raises(FunctionalError):
        jump_correction(IDENT, [0.5], [0.1], UNIT)


@pytest.mark.parametrize("deg", range(1, 9))
@pytest.mark.parametrize("size", [0.3, 1.7, 4.2])
def test_node_doubling_is_stable(deg, size):
    g = ScalarField.polynomial(np.linspace(1.0, -0.5, deg + 1))
    a = jump_correction(g, [0.0], [size], UNIT, nodes=32)
    b = jump_correction(g, [0.0], [size], UNIT, nodes=64)
    assert abs(a - b) < 1e-10


def test_segment_integral_panels():
    assert segment_integral(np.cos, 7.3) == pytest.approx(math.sin(7.3), abs=1e-14)
    assert segment_integral(np.cos, 0.0) == 0.0


def test_evaluate_on_single_drop():
    sol = solve_reflection(UNIT, drop_path())
    assert evaluate_IT(IDENT, sol, 0.0) == pytest.approx(-0.125, abs=1e-10)
    cos = ScalarField.cosine([2.0], phase=0.3)
    exact = (math.sin(0.3) - math.sin(0.3 - 2 * Z)) / 2  # int_0^z cos(0.3 - 2r) dr
    assert evaluate_IT(cos, sol, 0.0) == pytest.approx(exact, abs=1e-12)


def test_evaluate_discounted_drop():
    sol = solve_reflection(UNIT, drop_path())
    lam = 0.7
    assert evaluate_IT(IDENT, sol, lam) == pytest.approx(-0.125 * math.exp(-lam * A), abs=1e-12)


def test_evaluate_constant_g_is_discounted_mass():
    ball = Ball([0.0, 0.0], 1.0)
    t = np.linspace(0, 1, 11)
    y = CadlagPath.from_values(t, np.column_stack([2.0 + t, np.zeros(11)]))
    sol = solve_reflection(ball, y)
    # atom 1 at 0, then pushes of 0.1 at each stamp
    lam = 2.0
    mass = 1.0 + sum(0.1 * math.exp(-lam * s) for s in t[1:])
    assert evaluate_IT(ScalarField.constant(3.0, dim=2), sol, lam) == pytest.approx(3 * mass, rel=1e-12)


def test_evaluate_exterior_atom_carries_correction():
    ball = Ball([0.0, 0.0], 1.0)
    y = CadlagPath.from_values([0.0, 1.0], [[2.0, 0.0], [2.0, 0.0]])
    sol = solve_reflection(ball, y)
    g = ScalarField.linear([1.0, 0.0])
    # g(Pi) |k0| + int_0^1 (g(1 + r) - g(1)) dr = 1 + 1/2
    assert evaluate_IT(g, sol, 1.0) == pytest.approx(1.5, abs=1e-13)


@pytest.mark.parametrize("n", [10.0, 100.0, 1000.0])
def test_penalized_boundary_integral_converges(n):
    pen = solve_penalized(UNIT, drop_path(), n)
    val = pen.boundary_integral(IDENT, 0.0)
    tail = Z * math.exp(-n * (T - A))
    assert val == pytest.approx(-(Z ** 2 - tail ** 2) / 2, abs=1e-12)
    assert abs(val + 0.125) <= 1.0 * tail + 1e-12


@given(st.floats(0.01, 3.0), st.floats(0.0, 2.0))
def test_penalized_integral_matches_exact_flow(z, lam):
    n = 20.0
    pen = solve_penalized(UNIT, drop_path(z=z), n)
    # int (r/z)^{lam/n} (-r) dr from z e^{-n(T-a)} to z
    q = lam / n
    lo = z * math.exp(-n * (T - A))
    exact = -math.exp(-lam * A) * (z ** 2 - lo ** (2 + q) / z ** q) / (2 + q)
    assert pen.boundary_integral(IDENT, lam) == pytest.approx(exact, rel=1e-10, abs=1e-14)


def test_spec_validation_and_growth_monitor():
    with pytest.raises(FunctionalError):
        FunctionalSpec(IDENT, IDENT, 0.0)
    f = ScalarField.radial([0.0, 0.0, 1.0], [0.0])
    spec = FunctionalSpec(f, ScalarField.constant(1.0), 1.0, growth_K=1.0, p=2.0)
    assert spec.check_growth(np.linspace(-5, 5, 11))
    tight = FunctionalSpec(f, ScalarField.constant(1.0), 1.0, growth_K=0.1, p=1.0)
    assert not tight.check_growth([[4.0]])
    gbar = spec.gbar(UNIT)
    assert gbar(np.array([[-0.5]]))[0] == 0.0
