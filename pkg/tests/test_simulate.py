import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctma.kernels import CustomKernel, GammaKernel, OUKernel
from ctma.levy import (LevyTriplet, alpha_stable, compound_poisson, gamma_subordinator,
                       gaussian)
from ctma.simulate import (BLOCK, CoverageError, Grid, IncrementPath, SamplePath, aggregate,
                           convolve, kernel_weights, read_csv, read_increments_csv,
                           simulate_ctma, simulate_increment_matrix, simulate_increments,
                           simulate_ou_exact, small_jump_threshold, write_csv)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0.0, 0.0, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 0.1, 0)


# -- increments ----------------------------------------------------------------------


def test_gaussian_increment_moments():
    inc = simulate_increments(gaussian(1.0), Grid(0.0, 1.0, 10_000), seed=3).increments
    assert abs(inc.mean()) < 4 / math.sqrt(10_000)
    assert inc.var() == pytest.approx(1.0, rel=0.1)


def test_poisson_sum_mean():
    # default drift = int tau dnu, so the process is the plain Poisson count
    t = compound_poisson(1.0, atoms=[(1.0, 1.0)])
    T, reps = 10.0, 2000
    sums = simulate_increment_matrix(t, 0.01, int(T / 0.01), reps, seed=5).sum(axis=1)
    assert abs(sums.mean() - T) < 4 * math.sqrt(T / reps)
    np.testing.assert_allclose(sums, np.round(sums), atol=1e-9)


def test_drift_only_increments_are_exactly_dt():
    inc = simulate_increments(LevyTriplet(1.0, 0.0), Grid(0.0, 0.01, 1000), seed=0)
    assert np.all(inc.increments == 0.01)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 63 - 1))
def test_increments_bit_identical_per_seed(seed):
    t = compound_poisson(2.0, "normal", b=0.5)
    g = Grid(-3.0, 0.01, 500)
    a = simulate_increments(t, g, seed)
    b = simulate_increments(t, g, seed)
    assert a.increments.tobytes() == b.increments.tobytes()
    assert a.scheme == b.scheme


def test_streams_are_per_block():
    # a longer grid starts with exactly the same cells
    g = gaussian(1.0)
    short = simulate_increments(g, Grid(0.0, 0.01, 100), 11).increments
    long = simulate_increments(g, Grid(0.0, 0.01, BLOCK + 100), 11).increments
    assert short.tobytes() == long[:100].tobytes()
    assert not np.array_equal(long[:100], long[BLOCK:BLOCK + 100])


def test_matrix_independent_of_block_size():
    t = compound_poisson(1.0, atoms=[(1.0, 0.5), (-2.0, 0.5)], b=1.0)
    a = simulate_increment_matrix(t, 0.1, 20, 64, seed=9, paths_per_block=64)
    b = simulate_increment_matrix(t, 0.1, 20, 64, seed=9, paths_per_block=64)
    assert a.tobytes() == b.tobytes()
    assert a.shape == (64, 20)


def test_small_jump_threshold_criterion():
    nu = gamma_subordinator(1.0, 1.0).nu
    dt = 1e-2
    eps = small_jump_threshold(nu, dt, horizon=10.0)
    assert math.sqrt(nu.small_jump_variance(eps)) <= 0.01 * math.sqrt(dt) * (1 + 1e-6)
    assert eps >= 1e-6
    assert small_jump_threshold(compound_poisson(1.0).nu, dt, 10.0) == 0.0


def test_infinite_activity_increment_law():
    # gamma subordinator: L_1 ~ Gamma(shape, rate)
    t = gamma_subordinator(2.0, 1.0)
    x = simulate_increment_matrix(t, 0.05, 20, 20_000, seed=2).sum(axis=1)
    assert x.mean() == pytest.approx(2.0, abs=4 * math.sqrt(2.0 / 20_000))
    assert x.var() == pytest.approx(2.0, rel=0.05)


def test_stable_increments_scale_free_median():
    # symmetric 1.5-stable, scale 1: median of |L_1| is about 1.1 (independent table value
    # not needed: compare to the unit-time sum of finer cells)
    t = alpha_stable(1.5)
    x = simulate_increment_matrix(t, 0.1, 10, 20_000, seed=4).sum(axis=1)
    y = simulate_increment_matrix(t, 1.0, 1, 20_000, seed=8).ravel()
    assert np.median(np.abs(x)) == pytest.approx(np.median(np.abs(y)), rel=0.05)


def test_aggregate_sums_cells():
    inc = simulate_increments(gaussian(1.0), Grid(0.0, 0.01, 103), 1)
    agg = aggregate(inc, 4)
    assert agg.grid == Grid(0.0, 0.04, 25)
    np.testing.assert_allclose(agg.increments, inc.increments[:100].reshape(25, 4).sum(1),
                               rtol=1e-15)
    np.testing.assert_allclose(agg.levy_path().values, inc.levy_path().values[:101:4],
                               atol=1e-13)


# -- convolution ---------------------------------------------------------------------


@settings(max_examples=25)
@given(st.integers(1, 4096), st.integers(1, 512), st.integers(0, 2 ** 32 - 1))
def test_fft_matches_direct(n, m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n + m)
    w = rng.standard_normal(m)
    np.testing.assert_allclose(convolve(x, w, "fft"), convolve(x, w, "direct"),
                               atol=1e-10, rtol=0)


def test_window_kernel_with_unit_drift_is_one():
    inc = simulate_increments(LevyTriplet(1.0, 0.0), Grid(0.0, 0.01, 500), 0)
    x = simulate_ctma(CustomKernel.indicator(0.0, 1.0), inc, warmup=1.0)
    np.testing.assert_allclose(x.values, 1.0, atol=1e-12)
    assert x.grid.t0 == pytest.approx(1.0)


def test_ou_stationary_variance():
    lam = 1.0
    inc = simulate_increments(gaussian(1.0), Grid(0.0, 0.01, 1_000_000), 21)
    x = simulate_ctma(OUKernel(lam), inc)
    assert x.values.var() == pytest.approx(1 / (2 * lam), rel=0.05)


def test_gamma_first_weight_is_incomplete_gamma():
    from scipy import special

    dt = 1e-3
    w, k0, k1 = kernel_weights(GammaKernel(-0.4), dt, 40.0)
    assert k0 == 0 and k1 == 40_000
    assert math.isfinite(w[0])
    assert w[0] == pytest.approx(special.gamma(0.6) * special.gammainc(0.6, dt) / dt, rel=1e-10)


def test_warmup_coverage_errors():
    inc = simulate_increments(gaussian(1.0), Grid(0.0, 0.01, 100), 0)
    with pytest.raises(CoverageError) as info:
        simulate_ctma(OUKernel(1.0), inc, warmup=5.0)
    assert info.value.required > 0
    long = simulate_increments(gaussian(1.0), Grid(0.0, 0.01, 10_000), 0)
    with pytest.raises(CoverageError):
        simulate_ctma(OUKernel(1.0), long, warmup=5.0)
    simulate_ctma(OUKernel(1.0), long, warmup=5.0, strict=False)


def test_anticipating_kernel_uses_future_increments():
    from ctma.kernels import AnticipatingOUKernel

    inc = simulate_increments(LevyTriplet(1.0, 0.0), Grid(0.0, 0.01, 5000), 0)
    x = simulate_ctma(AnticipatingOUKernel(1.0), inc, warmup=30.0)
    # int_t^inf e^{-(s-t)} ds = 1
    np.testing.assert_allclose(x.values, 1.0, rtol=1e-10)
    assert x.grid.t0 == 0.0


# -- exact OU recursion -------------------------------------------------------------------


def test_ou_exact_homogeneous_decay():
    inc = IncrementPath(Grid(0.0, 0.1, 50), np.zeros(50))
    x = simulate_ou_exact(2.0, inc, x0=3.0)
    np.testing.assert_allclose(x.values, 3.0 * np.exp(-2.0 * 0.1 * np.arange(51)), rtol=1e-13)


def test_ou_exact_lag_one_autocorrelation():
    dt = 0.1
    inc = simulate_increments(gaussian(1.0), Grid(0.0, dt, 400_000), 17)
    v = simulate_ou_exact(1.0, inc, warmup=20.0).values
    r = np.corrcoef(v[:-1], v[1:])[0, 1]
    # AR(1) with phi near 1: sd of the estimate is about sqrt((1 - phi^2) / n)
    assert r == pytest.approx(math.exp(-dt), abs=4 * math.sqrt((1 - math.exp(-2 * dt)) / 4e5))


def test_ou_exact_drift_limit():
    dt, lam = 1e-3, 1.5
    inc = simulate_increments(LevyTriplet(1.0, 0.0), Grid(0.0, dt, 5000), 0)
    x = simulate_ou_exact(lam, inc)
    t = x.grid.times
    np.testing.assert_allclose(x.values, (1 - np.exp(-lam * t)) / lam, rtol=2 * dt, atol=1e-15)


def _ou_sup_differences(seed):
    fine = simulate_increments(gaussian(1.0), Grid(0.0, 1.25e-4, 8 * 60_000), seed)
    out = []
    for f in (32, 16, 8):
        inc = aggregate(fine, f)
        x = simulate_ctma(OUKernel(1.0), inc, warmup=30.0)
        y = simulate_ou_exact(1.0, inc)
        off = int(round((x.grid.t0 - y.grid.t0) / inc.grid.dt))
        out.append(float(np.max(np.abs(x.values - y.values[off:off + x.grid.n]))))
    return out


def test_ou_ctma_and_exact_recursion_converge_together():
    d = _ou_sup_differences(7)
    for a, b in zip(d, d[1:]):
        assert a / b >= 1.6


@pytest.mark.xfail(strict=True, reason="the two schemes agree to second order: the ratio is "
                                      "about 4, above the first-order band")
def test_ou_ctma_vs_exact_first_order_band():
    d = _ou_sup_differences(7)
    for a, b in zip(d, d[1:]):
        assert 1.6 <= a / b <= 2.4


# -- CSV -------------------------------------------------------------------------------


def test_csv_roundtrip(tmp_path):
    inc = simulate_increments(gaussian(1.0), Grid(-1.5, 0.01, 300), 4)
    write_csv(inc, tmp_path / "inc.csv")
    back = read_increments_csv(tmp_path / "inc.csv")
    assert back.increments.tobytes() == inc.increments.tobytes()
    assert back.grid.t0 == -1.5 and back.grid.n == 300
    assert back.grid.dt == pytest.approx(0.01, rel=1e-12)
    path = SamplePath(Grid(0.0, 0.5, 3), np.array([1 / 3, -2e-300, 7.0]))
    write_csv(path, tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,value"
    assert read_csv(tmp_path / "p.csv").values.tobytes() == path.values.tobytes()


def test_csv_rejects_bad_header(tmp_path):
    (tmp_path / "x.csv").write_text("time,v\n0,1\n")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "x.csv")
