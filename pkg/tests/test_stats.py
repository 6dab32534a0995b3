import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cliffordt import qcore, prcircuit
from cliffordt.stats import (
    DistanceSeries,
    Histogram,
    MomentAccumulator,
    TargetMasses,
    batch_means_standard_error,
    cue_l_cdf,
    cue_l_density,
    distance,
    fit_convergence,
    histogram_build,
    moment_cue,
    moment_deviation,
    moment_empirical,
    target_cue_l_mass,
    target_uniform_mass,
)


def exact_moment(k, N):
    return Fraction(math.factorial(k) * N**k * math.factorial(N - 1), math.factorial(N + k - 1))


# -- histograms


def test_histogram_single_value():
    h = histogram_build([0.5], 0.0, 1.0, 2)
    np.testing.assert_array_equal(h.masses, [0.0, 1.0])


def test_histogram_uniform_grid():
    h = histogram_build(np.arange(1000) / 1000, 0.0, 1.0, 10)
    np.testing.assert_allclose(h.masses, 0.1, atol=1e-15)


def test_histogram_routing():
    h = histogram_build([-np.inf, -1.0, 0.0, 1.0, 2.0], 0.0, 1.0, 4)
    assert h.underflow_mass == pytest.approx(0.4)
    assert h.overflow_mass == pytest.approx(0.2)
    assert h.masses[0] == pytest.approx(0.2)
    assert h.masses[-1] == pytest.approx(0.2)  # v == hi lands in the last bin
    assert h.masses.sum() + h.underflow_mass + h.overflow_mass == pytest.approx(1.0, abs=1e-12)


def test_histogram_rejects_bad_args():
    with pytest.raises(ValueError):
        Histogram(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        Histogram(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        histogram_build([np.nan], 0, 1, 2)
    with pytest.raises(ValueError):
        Histogram(0, 1, 2).masses


def test_histogram_weights():
    h = Histogram(0, 1, 2).add([0.1], 0.5).add([0.9], 0.5)
    np.testing.assert_allclose(h.masses, [0.5, 0.5])


@settings(max_examples=50, deadline=None)
@given(
    a=st.lists(st.floats(-2, 3, allow_nan=False), min_size=1, max_size=50),
    b=st.lists(st.floats(-2, 3, allow_nan=False), min_size=1, max_size=50),
)
def test_histogram_merge_commutes(a, b):
    ha, hb = histogram_build(a, 0, 1, 5), histogram_build(b, 0, 1, 5)
    whole = histogram_build(a + b, 0, 1, 5)
    for merged in (ha + hb, hb + ha):
        np.testing.assert_allclose(merged.masses, whole.masses, atol=1e-15)
        assert merged.underflow_mass == pytest.approx(whole.underflow_mass)
        assert merged.overflow_mass == pytest.approx(whole.overflow_mass)


def test_histogram_merge_rejects_mismatch():
    with pytest.raises(ValueError):
        Histogram(0, 1, 4) + Histogram(0, 1, 5)


# -- targets


def test_uniform_target():
    np.testing.assert_allclose(target_uniform_mass(4).masses, [0.25] * 4)
    np.testing.assert_allclose(target_uniform_mass(100).masses, 0.01)
    assert target_uniform_mass(100).total == pytest.approx(1.0, abs=1e-15)


def test_cue_cdf_n2_at_zero():
    assert cue_l_cdf(0.0, 2) == pytest.approx(0.5, abs=1e-15)


def test_cue_mass_n2_closed_form():
    t = target_cue_l_mass(2, -3.0, math.log(2), 7)
    edges = np.linspace(-3.0, math.log(2), 8)
    np.testing.assert_allclose(t.masses, (np.exp(edges[1:]) - np.exp(edges[:-1])) / 2, atol=1e-15)


@pytest.mark.parametrize("N", [2, 4, 64, 1024])
def test_cue_mass_matches_quadrature(N):
    lo, hi = -15.0, math.log(N)
    t = target_cue_l_mass(N, lo, hi, 12)
    edges = np.linspace(lo, hi, 13)
    quad = [integrate.quad(cue_l_density, a, b, args=(N,), epsabs=1e-14)[0] for a, b in zip(edges[:-1], edges[1:])]
    np.testing.assert_allclose(t.masses, quad, rtol=1e-8, atol=1e-14)


@pytest.mark.parametrize("N", [4, 64, 1024])
def test_cue_mass_total_and_nonnegative(N):
    t = target_cue_l_mass(N, -15.0, math.log(N), 60)
    assert np.all(t.masses >= 0)
    assert t.total == pytest.approx(1.0, abs=1e-12)
    assert t.overflow == 0.0
    assert t.underflow < 1e-6


def test_cue_full_range_total():
    t = target_cue_l_mass(8, -700.0, math.log(8), 50)
    assert t.underflow < 1e-300
    assert math.fsum(t.masses) == pytest.approx(1.0, abs=1e-12)


def test_cue_target_rejects_above_support():
    with pytest.raises(ValueError):
        target_cue_l_mass(4, -1.0, math.log(4) + 0.1, 10)


# -- distance


def test_distance_examples():
    h = histogram_build([0.75], 0, 1, 2)
    assert distance(h, TargetMasses(np.array([0.0, 1.0]))) == 0.0
    assert distance(h, TargetMasses(np.array([1.0, 0.0]))) == pytest.approx(2.0)


def test_distance_counts_tails():
    h = histogram_build([-1.0, 0.5], 0, 1, 2)
    assert distance(h, TargetMasses(np.array([0.0, 1.0]))) == pytest.approx(0.25 + 0.25)


def test_distance_shape_mismatch():
    with pytest.raises(ValueError):
        distance(histogram_build([0.1], 0, 1, 2), target_uniform_mass(3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.permutations(range(4)))
def test_distance_symmetric_and_permutation_invariant(weights, perm):
    a = histogram_build([0.1, 0.3, 0.6, 0.8, 0.8], 0, 1, 4)
    b = Histogram(0, 1, 4)
    b.counts = np.asarray(weights) + 1e-3
    b.total_count = b.counts.sum()
    ta = TargetMasses(a.masses)
    tb = TargetMasses(b.masses)
    assert distance(a, tb) == pytest.approx(distance(b, ta), abs=1e-15)
    ap, bp = Histogram(0, 1, 4), Histogram(0, 1, 4)
    ap.counts, ap.total_count = a.counts[list(perm)], a.total_count
    bp.counts, bp.total_count = b.counts[list(perm)], b.total_count
    assert distance(ap, TargetMasses(bp.masses)) == pytest.approx(distance(a, tb), abs=1e-15)
    assert distance(a, ta) == 0.0


def test_haar_l_distance_small():
    rng = np.random.default_rng(3)
    N = 64
    h = Histogram(-15.0, math.log(N), 60)
    for _ in range(5):
        u = qcore.haar_cue_sample(N, rng, size=50)
        h.add(prcircuit.l_values(u))
    t = target_cue_l_mass(N, -15.0, math.log(N), 60)
    # multinomial expectation for 256000 draws is (1 - sum p^2) / M ~ 4e-6
    assert distance(h, t) < 2e-5


# -- moments


@pytest.mark.parametrize("N", range(2, 65))
def test_moment_cue_matches_exact(N):
    for k in range(1, 9):
        assert moment_cue(k, N) == pytest.approx(float(exact_moment(k, N)), rel=1e-12)


def test_moment_cue_examples():
    assert moment_cue(1, 17) == 1.0
    assert moment_cue(2, 2) == pytest.approx(4 / 3, rel=1e-15)
    assert moment_cue(2, 16) == pytest.approx(512 / 272, rel=1e-15)
    big = moment_cue(8, 2**14)
    assert math.isfinite(big) and big == pytest.approx(math.factorial(8), rel=1e-2)


def test_moment_empirical_examples():
    rng = np.random.default_rng(0)
    u = qcore.haar_cue_sample(8, rng)
    assert moment_empirical(1, np.abs(u) ** 2, 8) == pytest.approx(1.0, abs=1e-12)
    assert moment_empirical(2, np.abs(np.eye(4)) ** 2, 4) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        moment_empirical(2, [], 4)


def test_moment_deviation():
    assert moment_deviation(2, 3.0, 3.0) == 0.0
    assert moment_deviation(2, 6.0, 3.0) == 1.0
    with pytest.raises(ValueError):
        moment_deviation(2, 1.0, 0.0)


def test_moment_accumulator_haar():
    rng = np.random.default_rng(5)
    N = 16
    acc = MomentAccumulator(N, (1, 2, 4))
    for _ in range(10):
        u = qcore.haar_cue_sample(N, rng, size=100)
        acc.add(prcircuit.l_values(u).reshape(100, -1))
    assert acc.empirical(1) == pytest.approx(1.0, abs=1e-12)
    assert acc.report(1).deviation < 1e-12
    for k in (2, 4):
        rep = acc.report(k)
        assert abs(rep.mu_empirical - rep.mu_cue) < 3 * acc.standard_error(k)


def test_batch_means_standard_error():
    x = np.random.default_rng(0).standard_normal(100_000)
    assert batch_means_standard_error(x, 20) == pytest.approx(1 / math.sqrt(1e5), rel=0.5)
    with pytest.raises(ValueError):
        batch_means_standard_error([1.0])


# -- fits


def series_of(ts, values, label="D"):
    s = DistanceSeries(label)
    for t, v in zip(ts, values):
        s.append(t, v)
    return s


def test_fit_exponential_exact():
    ts = np.arange(1, 15)
    fit = fit_convergence(series_of(ts, np.exp(2.21 - 1.71 * ts)), "exponential", (1, 14))
    assert fit.a == pytest.approx(2.21, abs=1e-9)
    assert fit.rate == pytest.approx(1.71, abs=1e-9)
    assert fit.residual_sum_squares < 1e-18


def test_fit_gaussian_exact():
    ts = np.arange(0, 8)
    fit = fit_convergence(series_of(ts, np.exp(1 - 0.5 * ts**2)), "gaussian")
    assert fit.a == pytest.approx(1.0, abs=1e-9)
    assert fit.rate == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(fit.predict(ts), np.exp(1 - 0.5 * ts**2), rtol=1e-9)


def test_fit_window_and_zero_points():
    ts = np.arange(1, 10)
    vals = np.exp(-ts.astype(float))
    vals[4] = 0.0
    fit = fit_convergence(series_of(ts, vals), "exponential", (3, 8))
    assert fit.n_points == 5
    assert fit.window == (3, 8)
    assert fit.rate == pytest.approx(1.0, abs=1e-12)


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_convergence(series_of([1, 2, 3], [1.0, 0.0, 0.5]), "exponential")
    with pytest.raises(ValueError):
        fit_convergence(series_of([1, 2, 3], [1.0, 0.5, 0.2]), "cubic")


def test_series_invariants():
    s = DistanceSeries("D")
    s.append(1, 0.5)
    with pytest.raises(ValueError):
        s.append(1, 0.4)
    with pytest.raises(ValueError):
        s.append(2, -1.0)
