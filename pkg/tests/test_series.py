import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from wfarima.series import (
    convolve,
    fracdiff_coeffs,
    fracdiff_coeffs_d2deriv,
    fracdiff_coeffs_dderiv,
    fracdiff_derivs,
    identity_series,
    log_one_minus_z,
    poly_inverse,
)


def test_fracdiff_trivial_cases():
    np.testing.assert_array_equal(fracdiff_coeffs(0.3, 0), [1.0])
    np.testing.assert_array_equal(fracdiff_coeffs(0.0, 3), [1.0, 0.0, 0.0, 0.0])


def test_fracdiff_matches_gamma_ratio():
    d = 0.3
    j = np.arange(1, 3)
    oracle = gamma(j - d) / (gamma(j + 1) * gamma(-d))
    np.testing.assert_allclose(fracdiff_coeffs(d, 2), [1.0, -0.3, -0.105], rtol=0, atol=1e-15)
    np.testing.assert_allclose(fracdiff_coeffs(d, 2)[1:], oracle, rtol=1e-13)
    # longer range, still inside the domain of the Gamma function
    j = np.arange(1, 120)
    oracle = gamma(j - d) / (gamma(j + 1) * gamma(-d))
    np.testing.assert_allclose(fracdiff_coeffs(d, 119)[1:], oracle, rtol=1e-11)


def test_fracdiff_large_N_is_finite():
    a = fracdiff_coeffs(0.45, 200_000)
    assert a.shape == (200_001,)
    assert np.all(np.isfinite(a))


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_fracdiff_decay_slope(d):
    a = np.abs(fracdiff_coeffs(d, 10_000))
    j = np.arange(100, 10_001)
    slope = np.polyfit(np.log(j), np.log(a[j]), 1)[0]
    assert abs(slope + (1 + d)) <= 0.05
    # |alpha_j| j^{d+1} tends to 1/|Gamma(-d)|; the tail constant bounds the
    # whole sequence from j=2 on up to a modest factor
    C_tail = np.exp(np.mean(np.log(a[j] * j ** (d + 1))))
    assert C_tail == pytest.approx(1.0 / abs(gamma(-d)), rel=0.01)
    jj = np.arange(2, 10_001)
    assert np.all(a[jj] <= 1.5 * C_tail * jj ** (-d - 1.0))


def test_dderiv_examples():
    np.testing.assert_array_equal(fracdiff_coeffs_dderiv(0.3, 0), [0.0])
    for d in (0.0, 0.1, 0.3, 0.49):
        assert fracdiff_coeffs_dderiv(d, 3)[1] == pytest.approx(-1.0, abs=1e-15)
    assert fracdiff_coeffs_dderiv(0.3, 2)[2] == pytest.approx(-0.2, abs=1e-14)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_dderiv_matches_finite_differences(d):
    N, h = 400, 1e-6
    fd = (fracdiff_coeffs(d + h, N) - fracdiff_coeffs(d - h, N)) / (2 * h)
    an = fracdiff_coeffs_dderiv(d, N)
    mask = np.abs(an) > 1e-12
    assert np.max(np.abs(fd[mask] - an[mask]) / np.abs(an[mask])) <= 1e-6
    assert an[0] == 0.0


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_d2deriv_matches_finite_differences(d):
    N, h = 300, 1e-5
    fd = (fracdiff_coeffs_dderiv(d + h, N) - fracdiff_coeffs_dderiv(d - h, N)) / (2 * h)
    an = fracdiff_coeffs_d2deriv(d, N)
    mask = np.abs(an) > 1e-10
    assert np.max(np.abs(fd[mask] - an[mask]) / np.abs(an[mask])) <= 1e-6


def _derivs_by_recursion(d, N):
    a, a1, a2 = np.zeros(N + 1), np.zeros(N + 1), np.zeros(N + 1)
    a[0] = 1.0
    for j in range(1, N + 1):
        a[j] = a[j - 1] * (j - 1 - d) / j
        a1[j] = a1[j - 1] * (j - 1 - d) / j - a[j - 1] / j
        a2[j] = a2[j - 1] * (j - 1 - d) / j - 2 * a1[j - 1] / j
    return a, a1, a2


@pytest.mark.parametrize("d", [0.0, 1e-12, 0.3, 0.499, 1.0, -0.3, 2.5])
def test_derivs_agree_with_plain_recursion(d):
    N = 500
    want = _derivs_by_recursion(d, N)
    got = fracdiff_derivs(d, N)
    for w, g in zip(want, got):
        np.testing.assert_allclose(g, w, rtol=1e-10, atol=1e-13)


def test_convolve_examples():
    b = np.array([3.0, -1.0, 2.0, 5.0])
    np.testing.assert_array_equal(convolve([1.0], b, 2), b[:3])
    np.testing.assert_array_equal(convolve([1.0, 1.0], [1.0, 1.0], 2), [1.0, 2.0, 1.0])
    # zero-padding of short inputs
    np.testing.assert_array_equal(convolve([1.0], [2.0], 3), [2.0, 0.0, 0.0, 0.0])


def test_fractional_pair_is_identity():
    N = 50
    c = convolve(fracdiff_coeffs(0.3, N), fracdiff_coeffs(-0.3, N), N)
    np.testing.assert_allclose(c, identity_series(N), rtol=0, atol=1e-10)


finite = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(finite, min_size=1, max_size=12),
    st.lists(finite, min_size=1, max_size=12),
    st.lists(finite, min_size=1, max_size=12),
    st.integers(0, 15),
)
def test_convolution_ring_identities(a, b, c, N):
    ab = convolve(a, b, N)
    np.testing.assert_allclose(ab, convolve(b, a, N), rtol=0, atol=1e-12)
    left = convolve(ab, c, N)
    right = convolve(a, convolve(b, c, N), N)
    np.testing.assert_allclose(left, right, rtol=0, atol=1e-12)


def test_poly_inverse_examples():
    np.testing.assert_array_equal(poly_inverse([1.0], 3), [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(poly_inverse([1.0, -0.5], 3), [1.0, 0.5, 0.25, 0.125], rtol=0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.4, 0.4), min_size=0, max_size=5), st.integers(0, 60))
def test_poly_inverse_defining_property(tail, N):
    poly = np.concatenate([[1.0], tail])
    c = poly_inverse(poly, N)
    np.testing.assert_allclose(convolve(poly, c, N), identity_series(N), rtol=0, atol=1e-12)


def test_poly_inverse_rejects_non_monic():
    with pytest.raises(ValueError):
        poly_inverse([2.0, 1.0], 4)


def test_log_series():
    c = log_one_minus_z(5)
    assert c[0] == 0.0
    assert c[1] == -1.0
    assert c[2] == -0.5
    np.testing.assert_allclose(c[1:], -1.0 / np.arange(1, 6))
    with pytest.raises(ValueError):
        log_one_minus_z(0)


def test_negative_truncation_rejected():
    with pytest.raises(ValueError):
        fracdiff_coeffs(0.3, -1)
