import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from vmvfd import kernels as K
from vmvfd.errors import DivergenceError, NonLipschitzError, SingularityError


def test_bjerksund_at_zero_is_a_over_b():
    assert K.eval_kernel(K.BjerksundBlend(1.0, 1.0, 0.01), 0.0) == 1.0
    assert K.BjerksundBlend(3.0, 2.0, 0.5)(0.0) == 1.5


def test_exponential_at_zero_is_one():
    assert K.Exponential(0.7)(0.0) == 1.0


def test_regularized_fbm_is_flat_below_eps():
    k = K.RegularizedFBm(0.75, 0.1)
    assert k(0.05) == pytest.approx(0.1**0.25, rel=1e-15)
    assert k(0.05) == pytest.approx(0.5623413251903491, rel=1e-14)
    assert k(0.0) == k(0.1)


@pytest.mark.parametrize("hurst", [0.25, 0.5, 0.75])
def test_regularized_matches_power_beyond_eps(hurst):
    reg, power = K.RegularizedFBm(hurst, 0.01), K.PowerFBm(hurst)
    u = np.linspace(0.01, 3.0, 50)
    np.testing.assert_array_equal(reg(u), power(u))


def test_power_fbm_singular_at_zero_for_small_hurst():
    with pytest.raises(SingularityError):
        K.PowerFBm(0.25)(0.0)
    assert K.PowerFBm(0.75)(0.0) == 0.0
    assert K.PowerFBm(0.5)(0.0) == 1.0


def test_array_evaluation_keeps_shape():
    u = np.linspace(0, 2, 7)
    out = K.BjerksundBlend(1.0, 1.0, 0.01)(u)
    assert out.shape == u.shape
    np.testing.assert_allclose(out, np.exp(-0.01 * u) / (u + 1.0), rtol=1e-15)


@pytest.mark.parametrize("bad", [
    lambda: K.Exponential(-1.0),
    lambda: K.BjerksundBlend(0.0, 1.0, 0.1),
    lambda: K.BjerksundBlend(1.0, -1.0, 0.1),
    lambda: K.BjerksundBlend(1.0, 1.0, -0.1),
    lambda: K.PowerFBm(0.0),
    lambda: K.PowerFBm(1.0),
    lambda: K.RegularizedFBm(0.5, 0.0),
    lambda: K.RegularizedFBm(1.5, 0.1),
])
def test_parameter_ranges_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        K.eval_kernel(K.Exponential(1.0), -0.1)


def test_tail_norms_exponential_examples():
    assert K.tail_norms(K.Zero(), K.Exponential(0.5), 0.0).l2_tail_sq == pytest.approx(1.0, rel=1e-10)
    tn = K.tail_norms(K.Zero(), K.Exponential(0.5), 2.0)
    assert tn.l2_tail_sq == pytest.approx(math.exp(-2.0), rel=1e-10)
    assert tn.l1_tail == 0.0
    assert tn.horizon == 2.0


def test_tail_norms_bjerksund_shrinks():
    g = K.BjerksundBlend(1.0, 1.0, 0.01)
    at0 = K.tail_norms(K.Zero(), g, 0.0).l2_tail_sq
    at10 = K.tail_norms(K.Zero(), g, 10.0).l2_tail_sq
    assert 0.0 < at10 < at0
    # brute-force reference on a long finite range; the remainder beyond 5000 is below e^-100
    ref, _ = integrate.quad(lambda u: g(u) ** 2, 10.0, 5000.0, limit=500)
    assert at10 == pytest.approx(ref, rel=1e-6)


def test_tail_norms_l1_closed_form_bjerksund():
    a, b, alpha, r = 2.0, 0.5, 0.3, 1.5
    tn = K.tail_norms(K.BjerksundBlend(a, b, alpha), K.Zero(), r)
    expected = a * math.exp(alpha * b) * special.exp1(alpha * (r + b))
    assert tn.l1_tail == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("k", [K.Constant(1.0), K.PowerFBm(0.75), K.PowerFBm(0.25), K.Exponential(0.0)])
def test_divergent_tails_raise(k):
    with pytest.raises(DivergenceError):
        K.tail_norms(K.Zero(), k, 1.0)


def test_truncated_kernel_has_finite_tail():
    k = K.Truncated(K.Constant(2.0), 3.0)
    assert K.tail_norms(K.Zero(), k, 1.0).l2_tail_sq == pytest.approx(8.0, rel=1e-10)
    assert K.tail_norms(K.Zero(), k, 4.0).l2_tail_sq == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_tail_norms_nonincreasing(alpha, r1, r2):
    g = K.BjerksundBlend(1.0, 1.0, alpha)
    p = K.Exponential(alpha)
    lo, hi = min(r1, r2), max(r1, r2)
    a, b = K.tail_norms(p, g, lo), K.tail_norms(p, g, hi)
    assert b.l1_tail <= a.l1_tail * (1 + 1e-9)
    assert b.l2_tail_sq <= a.l2_tail_sq * (1 + 1e-9)


def test_truncation_horizon_exponential_inverts_closed_form():
    tol = math.sqrt(math.exp(-2.0) / 2.0)
    r = K.truncation_horizon(K.Zero(), K.Exponential(1.0), tol)
    assert r == pytest.approx(1.0, abs=1e-6)
    assert K.tail_norms(K.Zero(), K.Exponential(1.0), r).combined <= tol**2 * (1 + 1e-9)


def test_truncation_horizon_zero_kernels():
    assert K.truncation_horizon(K.Zero(), K.Zero(), 0.1) == 0.0


def test_truncation_horizon_truncated_fbm_is_finite():
    g = K.Truncated(K.RegularizedFBm(0.25, 0.01), 5.0)
    tol = 0.05
    r = K.truncation_horizon(K.Zero(), g, tol)
    assert 0.0 < r <= 5.0
    assert K.tail_norms(K.Zero(), g, r).combined <= tol**2 * (1 + 1e-9)
    assert K.tail_norms(K.Zero(), g, 0.95 * r).combined > tol**2


def test_truncation_horizon_rejects_nonpositive_tol():
    with pytest.raises(ValueError):
        K.truncation_horizon(K.Zero(), K.Exponential(1.0), 0.0)


def test_lipschitz_examples():
    assert K.lipschitz_constant(K.Exponential(0.01)) == 0.01
    assert K.lipschitz_constant(K.Constant(3.0)) == 0.0
    assert K.lipschitz_constant(K.RegularizedFBm(0.75, 0.1)) == pytest.approx(0.25 * 0.1**-0.75, rel=1e-12)
    assert K.lipschitz_constant(K.BjerksundBlend(1.0, 1.0, 0.01)) == pytest.approx(1.01, rel=1e-9)


def test_lipschitz_power_fbm_rejected():
    with pytest.raises(NonLipschitzError):
        K.lipschitz_constant(K.PowerFBm(0.25))


def test_regularized_lipschitz_matches_finite_differences():
    k = K.RegularizedFBm(0.75, 0.1)
    u = np.linspace(0.0, 2.0, 200001)
    slopes = np.abs(np.diff(k(u)) / np.diff(u))
    assert slopes.max() <= K.lipschitz_constant(k)
    assert slopes.max() == pytest.approx(K.lipschitz_constant(k), rel=1e-3)


_kernels = st.one_of(
    st.builds(K.Exponential, st.floats(0.0, 5.0)),
    st.builds(K.BjerksundBlend, st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.0, 3.0)),
    st.builds(K.RegularizedFBm, st.floats(0.05, 0.95), st.floats(0.01, 1.0)),
    st.builds(K.Constant, st.floats(-5.0, 5.0)),
    st.just(K.Zero()),
)


@settings(max_examples=200, deadline=None)
@given(_kernels, st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_lipschitz_bound_on_random_pairs(k, u1, u2):
    lip = K.lipschitz_constant(k)
    assert abs(k(u1) - k(u2)) <= lip * abs(u1 - u2) * (1 + 1e-9) + 1e-14


def test_fbm_bound_examples():
    assert K.fbm_regularization_error(0.5, 0.01) == pytest.approx(0.04, rel=1e-14)
    assert K.fbm_regularization_error(0.75, 0.01) == pytest.approx((2 + 4 / 3) * 1e-3, rel=1e-14)
    assert K.fbm_regularization_error(0.5, 1e-12) < 1e-10


def test_fbm_bound_power_law_in_eps():
    h = 0.3
    ratio = K.fbm_regularization_error(h, 0.005) / K.fbm_regularization_error(h, 0.01)
    assert ratio == pytest.approx(2 ** (-2 * h), rel=1e-12)


def test_fbm_exact_against_closed_form():
    # int_0^eps (u^c - eps^c)^2 du with c = H - 1/2
    h, eps = 0.75, 0.1
    c = h - 0.5
    closed = eps ** (2 * c + 1) * (1 / (2 * c + 1) - 2 / (c + 1) + 1)
    assert K.fbm_regularization_error_exact(h, eps) == pytest.approx(closed, rel=1e-9)
    assert K.fbm_regularization_error_exact(0.5, 0.1) == pytest.approx(0.0, abs=1e-15)


def test_fbm_range_checks():
    with pytest.raises(ValueError):
        K.fbm_regularization_error(1.0, 0.1)
    with pytest.raises(ValueError):
        K.fbm_regularization_error(0.5, 0.0)


def test_shifted_kernel_reads_ahead():
    base = K.Exponential(1.0)
    k = K.Shifted(base, 0.3)
    np.testing.assert_array_equal(k(np.array([0.0, 1.0])), base(np.array([0.3, 1.3])))
