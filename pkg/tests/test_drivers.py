import math

import numpy as np
import pytest
from scipy import stats

from vmvfd.drivers import (LEVY, SUBORDINATOR, Brownian, CompoundPoisson, IncrementStream,
                           InverseGaussian, inverse_gaussian_variates, moments, sample_increment_matrix,
                           sample_increments, stream_rng)


def test_moments_examples():
    assert moments(Brownian(2.0)) == (0.0, 2.0)
    assert moments(InverseGaussian(15.0, 1.0)) == (0.0, 15.0)
    assert moments(InverseGaussian(15.0, 1.0, compensated=False)) == (15.0, 15.0)
    assert moments(InverseGaussian(2.0, 2.0, compensated=False)) == (1.0, 0.25)
    assert moments(CompoundPoisson(3.0, 1.0, 4.0)) == (0.0, 12.0)


@pytest.mark.parametrize("bad", [
    lambda: Brownian(0.0),
    lambda: InverseGaussian(0.0, 1.0),
    lambda: InverseGaussian(1.0, -1.0),
    lambda: CompoundPoisson(-1.0, 0.0, 1.0),
    lambda: CompoundPoisson(1.0, 2.0, 1.0),  # second moment below mean squared
])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        bad()


def test_count_checks():
    with pytest.raises(ValueError):
        sample_increments(Brownian(), 0.01, 0, seed=1)
    with pytest.raises(ValueError):
        sample_increments(Brownian(), 0.0, 5, seed=1)
    assert sample_increments(Brownian(), 0.01, 1, seed=1).n == 1


def test_brownian_mean_and_variance():
    inc = sample_increments(Brownian(1.0), 0.01, 10**6, seed=11).values
    se = math.sqrt(0.01 / inc.size)
    assert abs(inc.mean()) < 3 * se
    assert inc.var() / 0.01 == pytest.approx(1.0, abs=4 * math.sqrt(2 / inc.size))


@pytest.mark.parametrize("dt", [0.1, 0.01, 0.001])
def test_compensated_ig_mean_zero_and_variance_scaling(dt):
    inc = sample_increments(InverseGaussian(15.0, 1.0), dt, 10**5, seed=5).values
    c1 = 15.0
    assert abs(inc.mean()) < 4 * math.sqrt(c1 * dt / inc.size)
    # IG fourth cumulant makes the variance estimator noisier than the Gaussian one
    kurt = stats.kurtosis(inc, fisher=False)
    se_var = c1 * dt * math.sqrt((kurt - 1) / inc.size)
    assert abs(inc.var() - c1 * dt) < 4 * se_var


@pytest.mark.parametrize("dt", [0.1, 0.01])
def test_compound_poisson_moments(dt):
    d = CompoundPoisson(3.0, 1.0, 4.0)
    inc = sample_increments(d, dt, 2 * 10**5, seed=3).values
    assert abs(inc.mean()) < 4 * math.sqrt(12.0 * dt / inc.size)
    kurt = stats.kurtosis(inc, fisher=False)
    assert abs(inc.var() - 12.0 * dt) < 4 * 12.0 * dt * math.sqrt((kurt - 1) / inc.size)


def test_ig_variates_law():
    rng = np.random.default_rng(0)
    x = inverse_gaussian_variates(rng, 0.15, 0.0225, 200000)
    ref = stats.invgauss(mu=0.15 / 0.0225, scale=0.0225)
    assert np.all(x > 0)
    assert stats.kstest(x, ref.cdf).pvalue > 1e-3


def test_uncompensated_ig_is_positive():
    inc = sample_increments(InverseGaussian(15.0, 1.0, compensated=False), 0.01, 10**4, seed=2).values
    assert np.all(inc > 0)


def test_zero_intensity_poisson_is_zero():
    inc = sample_increments(CompoundPoisson(0.0, 1.0, 2.0, compensated=False), 0.1, 100, seed=1).values
    assert np.all(inc == 0.0)


def test_reproducible_streams():
    a = sample_increments(InverseGaussian(15, 1), 0.01, 500, seed=42, stream=LEVY, index=3)
    b = sample_increments(InverseGaussian(15, 1), 0.01, 500, seed=42, stream=LEVY, index=3)
    assert a.values.tobytes() == b.values.tobytes()


def test_streams_are_distinct_and_uncorrelated():
    n = 20000
    a = sample_increments(Brownian(), 0.01, n, seed=42, stream=LEVY).values
    b = sample_increments(Brownian(), 0.01, n, seed=42, stream=SUBORDINATOR).values
    c = sample_increments(Brownian(), 0.01, n, seed=42, stream=LEVY, index=1).values
    assert not np.array_equal(a, b)
    for other in (b, c):
        r = np.corrcoef(a, other)[0, 1]
        assert abs(r) < 4 / math.sqrt(n)


def test_stream_rng_separates_seed_label_index():
    draws = {(s, lab, i): stream_rng(s, lab, i).random()
             for s in (1, 2) for lab in ("levy", "subordinator") for i in (0, 1)}
    assert len(set(draws.values())) == len(draws)


def test_matrix_rows_match_single_streams():
    d = InverseGaussian(15, 1)
    mat = sample_increment_matrix(d, 0.01, 50, seed=9, paths=4, first_index=2)
    for i in range(4):
        row = sample_increments(d, 0.01, 50, seed=9, index=2 + i).values
        assert mat[i].tobytes() == row.tobytes()


def test_csv_round_trip(tmp_path):
    s = sample_increments(InverseGaussian(15, 1), 0.01, 100, seed=7, index=4)
    p = tmp_path / "inc.csv"
    s.to_csv(p)
    back = IncrementStream.from_csv(p)
    assert back.values.tobytes() == s.values.tobytes()
    assert (back.dt, back.seed, back.stream, back.index) == (s.dt, s.seed, s.stream, s.index)
    lines = p.read_text().splitlines()
    assert len(lines) == 101  # header comment plus one increment per line


def test_bytes_round_trip():
    s = sample_increments(Brownian(), 0.01, 64, seed=1)
    back = IncrementStream.from_bytes(s.to_bytes(), dt=0.01, seed=1)
    assert back.values.tobytes() == s.values.tobytes()
    assert len(s.to_bytes()) == 64 * 8
