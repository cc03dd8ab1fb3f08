import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from levy_neumann.paths import (LINEAR, STEP, BVPath, CadlagPath, PathError,
                                discounted_stieltjes_integral, variation)

Z, A, T = 0.5, 0.25, 1.0


def step_k(z=Z, a=A, T=T):
    return BVPath.from_values([0.0, a, T], [0.0, z, z])


def test_step_variation_open_interval():
    assert variation(step_k(), T) == pytest.approx(Z)
    assert variation(step_k(), 0.1) == 0.0


def test_constant_path_has_no_variation():
    k = BVPath.from_values(np.linspace(0, 1, 7), np.full((7, 2), 3.0))
    assert variation(k, 1.0) == 0.0
    assert variation(k, 1.0, closed=True) == pytest.approx(3 * math.sqrt(2))


def test_atom_at_zero_only_in_closed_interval():
    k = BVPath.from_values([0.0, T], [Z, Z])
    assert variation(k, T) == 0.0
    assert variation(k, T, closed=True) == pytest.approx(Z)
    assert np.allclose(k.norm_variation(), Z)


def test_variation_beyond_horizon_rejected():
    with pytest.raises(PathError):
        variation(step_k(), 2.0)


def test_stieltjes_total_mass():
    assert discounted_stieltjes_integral(1.0, step_k(), 0.0, closed_at_zero=True) == pytest.approx(Z)


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_stieltjes_linear_integrator(lam):
    t = np.linspace(0, 2.0, 9)
    k = BVPath.from_values(t, t, interpolation=LINEAR)
    exact = (1 - math.exp(-lam * 2.0)) / lam
    quad, _ = integrate.quad(lambda s: math.exp(-lam * s), 0, 2.0)
    assert exact == pytest.approx(quad, rel=1e-13)
    assert discounted_stieltjes_integral(1.0, k, lam) == pytest.approx(exact, rel=1e-12)


def test_stieltjes_constant_integrator():
    k = BVPath.from_values(np.linspace(0, 1, 5), np.ones(5))
    assert discounted_stieltjes_integral(np.arange(5.0), k, 1.0, closed_at_zero=False) == 0.0


def test_stieltjes_grid_mismatch():
    with pytest.raises(PathError):
        discounted_stieltjes_integral(np.ones(3), BVPath.from_values(np.linspace(0, 1, 4), np.zeros(4)), 1.0)


def test_stieltjes_against_variation():
    k = BVPath.from_values([0.0, 0.5, 1.0], [0.0, 1.0, -1.0])
    assert discounted_stieltjes_integral(1.0, k, 0.0, against="variation") == pytest.approx(3.0)
    assert discounted_stieltjes_integral(1.0, k, 0.0) == pytest.approx(-1.0)


def test_right_continuity_and_jump_sizes():
    y = CadlagPath.from_values([0.0, 0.5, 1.0], [[0.0], [2.0], [2.5]], interpolation=STEP)
    assert y(0.5)[0, 0] == 2.0
    assert y(0.4999)[0, 0] == 0.0
    assert np.allclose(y.values - y.left_values(), y.jump_sizes)


def test_linear_path_with_flagged_jump():
    # linear on [0,1) towards 1, jump of -3 at t=1
    y = CadlagPath(np.array([0.0, 1.0, 2.0]), np.array([[0.0], [-2.0], [-1.0]]),
                   np.array([False, True, False]), np.array([[0.0], [-3.0], [0.0]]), LINEAR)
    assert y(0.5)[0, 0] == pytest.approx(0.5)
    assert y.left_values()[1, 0] == pytest.approx(1.0)
    assert BVPath(y).variation() == pytest.approx(1 + 3 + 1)


def test_unsorted_times_rejected():
    with pytest.raises(PathError):
        CadlagPath.from_values([0.0, 0.0, 1.0], [0, 1, 2])


values_2d = arrays(np.float64, (12, 2), elements=st.floats(-5, 5, allow_nan=False))


@given(values_2d, values_2d)
def test_triangle_property(a, b):
    t = np.linspace(0, 1, 12)
    ka, kb = BVPath.from_values(t, a), BVPath.from_values(t, b)
    ksum = BVPath.from_values(t, a + b)
    assert variation(ksum, 1.0) <= variation(ka, 1.0) + variation(kb, 1.0) + 1e-9
    assert variation(ksum, 1.0, True) <= variation(ka, 1.0, True) + variation(kb, 1.0, True) + 1e-9


@given(values_2d)
def test_variation_nondecreasing_and_dominates_jumps(v):
    k = BVPath.from_values(np.linspace(0, 1, 12), v)
    assert np.all(np.diff(k.cumulative_variation) >= 0)
    jump_total = sum(np.linalg.norm(d) for _, d in k.jump_list)
    assert jump_total <= k.norm_variation()[-1] + 1e-9


def test_refinement_monotone_and_convergent():
    def curve(s):
        return np.column_stack([np.cos(3 * s), np.sin(2 * s)])

    exact, _ = integrate.quad(lambda s: math.hypot(3 * math.sin(3 * s), 2 * math.cos(2 * s)), 0, 1,
                              epsabs=1e-14, limit=200)
    prev, errs = 0.0, []
    for m in range(6, 14):
        t = np.linspace(0, 1, 2 ** m + 1)
        v = BVPath.from_values(t, curve(t), interpolation=LINEAR).variation()
        assert v >= prev - 1e-15
        prev = v
        errs.append(exact - v)
    # second-order convergence: error ratio 4 under halving
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios[-3:] - 4.0) < 0.05)
    assert errs[-1] < 1e-6


def test_csv_round_trip(tmp_path):
    y = CadlagPath.from_values([0.0, 0.3, 0.7, 1.0], [[0.0, 1.0], [0.5, 1.0], [0.5, 1.0], [0.25, 2.0]])
    path = tmp_path / "y.csv"
    y.to_csv(path)
    back = CadlagPath.from_csv(path)
    assert np.array_equal(back.times, y.times)
    assert np.array_equal(back.values, y.values)
    assert np.array_equal(back.jump_mask, y.jump_mask)
    buf = io.StringIO()
    y.to_csv(buf)
    assert buf.getvalue().splitlines()[0] == "time,x0,x1,jump"
