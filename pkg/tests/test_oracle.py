import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from vmvfd import kernels as K
from vmvfd.drivers import Brownian, InverseGaussian
from vmvfd.errors import NonLipschitzError
from vmvfd.grid import GridSpec
from vmvfd.oracle import (error_budget, exact_ou_mse, exact_ou_path, lattice_moments, moments_formula,
                          numint_boundary, numint_field, numint_value, truncation_constant,
                          truncation_error)
from vmvfd.scheme import HSPDEModel, sample_inputs, solve_batch
from vmvfd.volatility import Deterministic, OUSubordinator, PathPair

IG_SUB = InverseGaussian(15.0, 1.0, compensated=False)
BJ = K.BjerksundBlend(1.0, 1.0, 0.01)


def _inputs(model, grid, seed, index=0):
    dM, a, s = sample_inputs(model, grid, seed, first_index=index)
    return dM, a, s, PathPair(t=grid.times(), a=a[0], sigma=s[0])


def test_numint_trivial_cases():
    grid = GridSpec(0, 0.01, 10, 0.02, 3)
    m = HSPDEModel(mu=2.5)
    dM, _, _, pair = _inputs(m, grid, 1)
    assert numint_value(m, grid, dM[0], pair, 7, 0.04) == 2.5
    m2 = HSPDEModel(mu=-1.0, vol_kernel=BJ)
    assert numint_value(m2, grid, dM[0], pair, 0) == -1.0
    with pytest.raises(ValueError):
        numint_value(m2, grid, dM[0], pair, 3, -0.01)


@pytest.mark.parametrize("model", [
    HSPDEModel(vol_kernel=K.Exponential(1.0)),
    HSPDEModel(mu=1.0, drift_kernel=K.Exponential(0.3), vol_kernel=BJ, drift=Deterministic(0.2),
               volatility=OUSubordinator(0.01, IG_SUB), driver=InverseGaussian(15.0, 1.0, compensated=False)),
    HSPDEModel(vol_kernel=K.RegularizedFBm(0.3, 0.02), driver=Brownian(2.0)),
])
def test_numint_boundary_bit_identical_at_lambda_one(model):
    grid = GridSpec(0.0, 0.01, 60, 0.01, 0)
    for index in range(3):
        dM, a, s, pair = _inputs(model, grid, 17, index)
        fd = solve_batch(model, grid, dM, a, s)[0]
        assert fd.tobytes() == numint_boundary(model, grid, dM[0], pair).tobytes()


def test_numint_field_matches_fd_rectangle_at_lambda_one():
    grid = GridSpec(0.0, 0.01, 30, 0.01, 12)
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB))
    dM, a, s, pair = _inputs(m, grid, 2)
    _, values = solve_batch(m, grid, dM, a, s, retain=True)
    ref = numint_field(m, grid, dM[0], pair)
    np.testing.assert_allclose(values[0, :, :13], ref, rtol=1e-12, atol=1e-12)


def test_exact_ou_zero_decay_is_random_walk():
    grid = GridSpec(0, 0.01, 50, 0.01)
    dM = np.random.default_rng(0).normal(0, 0.1, 50)
    x = exact_ou_path(0.0, 2.0, grid, dM, aux=np.zeros(50))
    np.testing.assert_allclose(x, np.concatenate([[0.0], 2.0 * np.cumsum(dM)]), rtol=1e-14, atol=1e-15)


def test_exact_ou_innovation_variance_and_coupling():
    n = 200000
    grid = GridSpec(0, 0.01, n, 0.01)
    rng = np.random.default_rng(5)
    dM = rng.normal(0, 0.1, n)
    x = exact_ou_path(1.0, 1.0, grid, dM, aux=rng.standard_normal(n))
    innov = x[1:] - math.exp(-0.01) * x[:-1]
    target = -math.expm1(-0.02) / 2
    assert target == pytest.approx(0.009901, rel=1e-4)
    assert innov.var() == pytest.approx(target, rel=4 * math.sqrt(2 / n))
    # covariance with the Brownian increment is int_0^dt exp(-s) ds
    assert np.mean(innov * dM) == pytest.approx(-math.expm1(-0.01), rel=0.02)


def test_exact_ou_stationary_variance():
    n = 400000
    grid = GridSpec(0, 0.05, n, 0.05)
    rng = np.random.default_rng(3)
    x = exact_ou_path(2.0, 1.5, grid, rng.normal(0, math.sqrt(0.05), n), aux=rng.standard_normal(n))
    assert x[1000:].var() == pytest.approx(1.5**2 / 4.0, rel=0.03)


def test_moments_formula_exponential_closed_form():
    m = HSPDEModel(vol_kernel=K.Exponential(0.7))
    _, second = moments_formula(m, 1.3, 0.3)
    assert second == pytest.approx(-math.expm1(-2 * 0.7 * 1.0) / 1.4, rel=1e-10)


def test_moments_formula_level_only():
    assert moments_formula(HSPDEModel(mu=5.0), 2.0) == (5.0, 25.0)


def test_moments_formula_bjerksund_ig_ou():
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB),
                   driver=InverseGaussian(15.0, 1.0))
    g2, _ = integrate.quad(lambda u: (math.exp(-0.01 * u) / (1 + u)) ** 2, 0, 1, epsabs=0, epsrel=1e-12)
    mean, second = moments_formula(m, 1.0)
    assert mean == 0.0
    assert second == pytest.approx(15 * 1500 * g2, rel=1e-9)
    brownian = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB))
    assert moments_formula(brownian, 1.0)[1] == pytest.approx(1500 * g2, rel=1e-9)


def test_moments_formula_drift_terms():
    m = HSPDEModel(mu=1.0, drift_kernel=K.Exponential(1.0), drift=Deterministic(2.0),
                   vol_kernel=K.Exponential(1.0), driver=InverseGaussian(4.0, 2.0, compensated=False))
    mean, second = moments_formula(m, 1.0)
    level = 1.0 + 2.0 * -math.expm1(-1.0) + 2.0 * -math.expm1(-1.0)
    assert mean == pytest.approx(level, rel=1e-10)
    assert second == pytest.approx(level**2 + 0.5 * -math.expm1(-2.0) / 2.0, rel=1e-10)


def test_truncation_error_examples():
    m = HSPDEModel(vol_kernel=K.Exponential(1.0))
    assert truncation_error(m, 1.0, -math.inf) == 0.0
    assert truncation_error(m, 1.0, -1.5) == pytest.approx(math.exp(-5.0) / 2, rel=1e-10)
    full = HSPDEModel(drift_kernel=K.Exponential(2.0), vol_kernel=K.Exponential(1.0))
    assert truncation_error(full, 1.0, 1.0) == pytest.approx(0.25 + 0.5, rel=1e-10)
    with pytest.raises(ValueError):
        truncation_error(m, 1.0, 2.0)


def test_truncation_constant():
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB), drift=Deterministic(3.0))
    assert truncation_constant(m) == pytest.approx(max(9.0, 1.0 * 1500.0))


def test_budget_lambda_one_drops_first_term():
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB))
    b = error_budget(m, GridSpec(0, 0.01, 100, 0.01, 200), 100)
    assert b.total == pytest.approx(b.c2 * 0.01**2 + b.c3 * b.modulus_a + b.c4 * b.modulus_sigma, rel=1e-14)


def test_budget_deterministic_coefficients():
    m = HSPDEModel(vol_kernel=K.Exponential(1.0))
    b = error_budget(m, GridSpec(0, 0.005, 100, 0.01, 0), 100)
    assert b.modulus_a == 0.0 and b.modulus_sigma == 0.0
    assert b.total == pytest.approx(b.c1 * 0.005 + b.c2 * 0.005**2, rel=1e-14)


def test_budget_constants_follow_formulas():
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB), driver=Brownian(2.0))
    grid = GridSpec(0.0, 0.005, 200, 0.01, 0)
    b = error_budget(m, grid, 120)
    span = 120 * 0.005
    bracket = 2.0 * span
    assert b.bracket == pytest.approx(bracket)
    assert b.c1 == pytest.approx(3 * b.lipschitz * span * (1 + 4 * span**2 + 4 * bracket), rel=1e-14)
    assert b.c2 == pytest.approx(12 * b.lipschitz * (span**2 + bracket), rel=1e-14)
    assert b.c3 == pytest.approx(12 * b.k_bound * b.lipschitz * span**2, rel=1e-14)
    assert b.c4 == pytest.approx(12 * b.k_bound * bracket, rel=1e-14)
    assert b.k_bound >= 1.0
    assert min(b.c1, b.c2, b.c3, b.c4, b.modulus_sigma) >= 0.0


def test_budget_shrinks_under_refinement():
    m = HSPDEModel(vol_kernel=BJ, volatility=OUSubordinator(0.01, IG_SUB))
    totals = [error_budget(m, GridSpec(0, dt, round(1 / dt), 2 * dt, 0), round(1 / dt)).total
              for dt in (0.02, 0.01, 0.005)]
    assert totals[0] > totals[1] > totals[2]


def test_budget_rejects_non_lipschitz():
    with pytest.raises(NonLipschitzError):
        error_budget(HSPDEModel(vol_kernel=K.PowerFBm(0.3)), GridSpec(0, 0.01, 10, 0.01), 10)


def test_budget_reports():
    b = error_budget(HSPDEModel(vol_kernel=K.Exponential(1.0)), GridSpec(0, 0.005, 10, 0.01), 10)
    text = b.to_text()
    assert "total: " in text and text.count("\n") == len(b.as_dict())
    header, values = b.to_csv().splitlines()
    assert header.split(",")[-1] == "total"
    assert float(values.split(",")[-1]) == b.total


def test_lattice_moments_exact():
    for m in (1, 3, 10, 64):
        for dx, dt in ((Fraction(1, 10), Fraction(1, 40)), (Fraction(1, 3), Fraction(1, 3))):
            mean, var = lattice_moments(m, dx, dt)
            t = m * dt
            assert mean == t and var == t * (dx - dt)


def test_exact_ou_rmse_falls_with_dt():
    rmse = []
    for dt in (0.04, 0.02, 0.01):
        grid = GridSpec(0.0, dt, round(1 / dt), 2 * dt, 0)
        mse, _ = exact_ou_mse(1.0, grid, 300, seed=21)
        rmse.append(math.sqrt(mse[-1]))
    assert rmse[0] > rmse[1] > rmse[2]
