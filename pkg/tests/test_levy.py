import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, stats

from levy_neumann.levy import (CompoundPoisson, LevyDriverSpec, LevyError, StablePart, build_driver,
                               riesz_potential_constant, sample_driver, sample_stable_increment,
                               sphere_area, stable_constant)
from levy_neumann.rng import stream


def _normalisation(d, alpha):
    """int (1 - cos y_1) |y|^{-d-alpha} dy, radially reduced and integrated by quad."""
    if d == 1:
        head, _ = integrate.quad(lambda r: 2 * (1 - math.cos(r)) * r ** (-1 - alpha), 0, 1)
        # tail split off so the oscillatory part goes to the Fourier-weight rule
        osc, _ = integrate.quad(lambda r: r ** (-1 - alpha), 1, math.inf, weight="cos", wvar=1.0)
        return head + 2 / alpha - 2 * osc
    # average of 1 - cos(r e_1 . u) over the sphere is 1 - J-type kernel; use mpmath hypergeometric form
    def sph(r):
        return 1 - float(mpmath.gamma(d / 2) * mpmath.besselj(d / 2 - 1, r) / (r / 2) ** (d / 2 - 1))
    val, _ = integrate.quad(lambda r: sph(r) * r ** (-1 - alpha), 0, 50, limit=500)
    tail, _ = integrate.quad(lambda r: r ** (-1 - alpha), 50, math.inf)
    return sphere_area(d) * (val + tail)


@pytest.mark.parametrize("d,alpha", [(1, 1.5), (1, 1.2), (2, 1.5), (3, 1.7)])
def test_stable_constant_normalises_the_exponent(d, alpha):
    # C * int (1 - cos theta.y) |y|^{-d-alpha} dy = |theta|^alpha at |theta| = 1
    assert stable_constant(d, alpha) * _normalisation(d, alpha) == pytest.approx(1.0, rel=2e-4)


def test_stable_constant_regression_value():
    ref = 1.5 * 2 ** 0.5 * mpmath.gamma(1.25) / (mpmath.sqrt(mpmath.pi) * mpmath.gamma(0.25))
    assert stable_constant(1, 1.5) == pytest.approx(float(ref), rel=1e-14)
    assert stable_constant(1, 1.5) == pytest.approx(0.29921, abs=1e-5)


def test_riesz_constant_is_the_printed_gamma_ratio():
    ref = mpmath.gamma(-0.25) / (2 ** 1.5 * mpmath.sqrt(mpmath.pi) * mpmath.gamma(0.75))
    assert riesz_potential_constant(1, 1.5) == pytest.approx(float(ref), rel=1e-14)
    assert riesz_potential_constant(1, 1.5) < 0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_stable_constant_limit_at_two(d):
    alpha = 1.999
    assert stable_constant(d, alpha) / (alpha * (2 - alpha)) == pytest.approx(d / sphere_area(d), rel=1e-2)


def test_stable_constant_positive_and_continuous():
    grid = np.linspace(1.1, 1.9, 161)
    vals = np.array([stable_constant(1, a) for a in grid])
    assert np.all(vals > 0)
    assert np.max(np.abs(np.diff(vals))) < 0.01


def test_stable_constant_rejects_bad_alpha():
    with pytest.raises(LevyError):
        stable_constant(1, 2.5)


def test_increment_deterministic_per_stream():
    a = sample_stable_increment(1.5, 2, 0.1, stream(3, 7), size=5)
    b = sample_stable_increment(1.5, 2, 0.1, stream(3, 7), size=5)
    c = sample_stable_increment(1.5, 2, 0.1, stream(3, 8), size=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert sample_stable_increment(1.5, 3, 0.1, stream(0)).shape == (3,)


def test_one_dimensional_law_matches_scipy():
    x = sample_stable_increment(1.5, 1, 1.0, np.random.default_rng(0), size=20000)[:, 0]
    assert stats.kstest(x, stats.levy_stable(1.5, 0.0).cdf).pvalue > 0.01


@pytest.mark.parametrize("d", [2, 3])
def test_isotropic_projections_are_unit_stable(d):
    x = sample_stable_increment(1.5, d, 1.0, np.random.default_rng(1), size=20000)
    e = np.ones(d) / math.sqrt(d)
    assert stats.kstest(x @ e, stats.levy_stable(1.5, 0.0).cdf).pvalue > 0.01
    assert stats.kstest(x[:, 0], stats.levy_stable(1.5, 0.0).cdf).pvalue > 0.01


def test_sign_symmetry_of_the_mean():
    n, alpha = 10 ** 6, 1.5
    x = sample_stable_increment(alpha, 1, 1.0, np.random.default_rng(2), size=n)[:, 0]
    # the mean of n unit draws is stable with scale n^{1/alpha - 1}
    q = stats.levy_stable(alpha, 0.0).ppf(0.99995)
    assert abs(x.mean()) / n ** (1 / alpha - 1) < q


def test_self_similarity():
    alpha = 1.5
    a = sample_stable_increment(alpha, 1, 4.0, np.random.default_rng(3), size=5000)[:, 0]
    b = sample_stable_increment(alpha, 1, 1.0, np.random.default_rng(4), size=5000)[:, 0] * 4 ** (1 / alpha)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_gaussian_limit_has_variance_two():
    x = sample_stable_increment(2.0, 1, 1.0, np.random.default_rng(5), size=200000)[:, 0]
    assert x.var() == pytest.approx(2.0, rel=0.02)
    assert stats.kstest(x / math.sqrt(2), "norm").pvalue > 0.01


def test_two_minus_alpha_limit_scale():
    st = StablePart(2.0, normalization="two_minus_alpha")
    assert st.time_scale(2) == pytest.approx(sphere_area(2) / 4)
    near = StablePart(1.9999, normalization="two_minus_alpha")
    assert near.time_scale(2) == pytest.approx(st.time_scale(2), rel=1e-3)


def test_zero_driver_is_linear_drift():
    spec = LevyDriverSpec(2, drift=[1.0, -0.5])
    y = build_driver(spec, 2.0, 16, stream(0))
    assert not y.jump_mask.any()
    assert np.allclose(y.values, np.outer(y.times, [1.0, -0.5]))


def test_compound_poisson_count():
    spec = LevyDriverSpec(1, compound=CompoundPoisson(3.0, "normal", {"std": 1.0}))
    counts = np.array([len(sample_driver(spec, 2.0, 8, stream(1, i)).jump_times) for i in range(10000)])
    mean, var = 6.0, 6.0
    assert abs(counts.mean() - mean) < 4 * math.sqrt(var / len(counts))


def test_stable_big_jump_probability():
    st = StablePart(1.5, representation="truncated", eps_trunc=0.05)
    spec = LevyDriverSpec(1, stable=st, p=1.2)
    hits = np.array([np.any(np.abs(sample_driver(spec, 1.0, 4, stream(2, i)).jump_sizes) > 1.0)
                     for i in range(4000)])
    p = 1 - math.exp(-st.tail_mass(1, 1.0))
    assert abs(hits.mean() - p) < 4 * math.sqrt(p * (1 - p) / len(hits))


def test_small_jump_compensation_variance():
    st = StablePart(1.5, representation="truncated", eps_trunc=0.1)
    # int_{|y|<eps} y^2 C |y|^{-1-alpha} dy, by quadrature
    ref, _ = integrate.quad(lambda y: 2 * y ** 2 * stable_constant(1, 1.5) * y ** (-2.5), 0, 0.1)
    assert st.small_jump_variance(1) == pytest.approx(ref, rel=1e-10)


def test_driver_jumps_are_flagged_and_consistent():
    spec = LevyDriverSpec(2, compound=CompoundPoisson(5.0, "sphere", {"radius": 0.3}),
                          stable=StablePart(1.5), p=1.2)
    y = build_driver(spec, 1.0, 32, stream(4))
    left = y.left_values()
    assert np.allclose(y.values[y.jump_mask] - left[y.jump_mask], y.jump_sizes[y.jump_mask])
    assert np.all(np.diff(y.times) > 0)


def test_moment_condition_enforced():
    with pytest.raises(LevyError):
        LevyDriverSpec(1, stable=StablePart(1.5), p=1.5)
    with pytest.raises(LevyError):
        LevyDriverSpec(1, compound=CompoundPoisson(1.0, "pareto", {"scale": 1.0, "index": 1.1}), p=1.5)
    with pytest.raises(LevyError):
        LevyDriverSpec(1, p=1.0)


def test_supremum_moment_stable_under_sample_growth():
    spec = LevyDriverSpec(1, stable=StablePart(1.5), p=1.2)
    sups = np.array([np.max(np.abs(build_driver(spec, 1.0, 64, stream(9, i)).values)) for i in range(5000)])
    small = np.mean(sups[:500] ** 1.2)
    large = np.mean(sups ** 1.2)
    assert 0.5 < large / small < 2.0


def test_dict_round_trip():
    spec = LevyDriverSpec(2, drift=[0.1, 0.0], compound=CompoundPoisson(1.0, "normal", {"std": 0.2}),
                          stable=StablePart(1.6), p=1.3, fixed_jumps=((0.5, [1.0, 0.0]),))
    again = LevyDriverSpec.from_dict(spec.to_dict(), 2)
    assert again.to_dict() == spec.to_dict()
    with pytest.raises(LevyError):
        LevyDriverSpec.from_dict({"jumps": 1}, 2)


def test_jump_law_parameters_checked():
    with pytest.raises(LevyError):
        CompoundPoisson(1.0, "normal", {"scale": 0.5})
    with pytest.raises(LevyError):
        CompoundPoisson(1.0, "pareto", {"scale": 1.0})
    assert CompoundPoisson(1.0, "normal", {"std": 0.5, "mean": 0.1}).params["std"] == 0.5
