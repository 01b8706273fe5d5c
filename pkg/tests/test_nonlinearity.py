import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdm_pme.nonlinearity import PowerLaw

exponents = st.floats(0.1, 4.0).filter(lambda m: abs(m - 1.0) > 1e-3)


def test_beta_values():
    assert PowerLaw(2).beta(3.0) == pytest.approx(9.0)
    assert PowerLaw(2).beta(-3.0) == pytest.approx(-9.0)
    assert PowerLaw(0.5).beta(4.0) == pytest.approx(2.0)
    assert PowerLaw(0.3).beta(0.0) == 0.0


def test_beta_inv_values():
    assert PowerLaw(2).beta_inv(9.0) == pytest.approx(3.0)
    assert PowerLaw(0.5).beta_inv(2.0) == pytest.approx(4.0)
    assert PowerLaw(0.5).beta_inv(0.0) == 0.0


def test_zeta_values():
    assert PowerLaw(2).zeta(3.0) == pytest.approx(9.0)
    assert PowerLaw(1).zeta(2.0) == pytest.approx(2.0)
    assert PowerLaw(0.4).zeta(0.0) == 0.0


def test_no_nan_at_zero_for_fast_diffusion():
    law = PowerLaw(0.3)
    z = np.zeros(4)
    assert np.all(np.isfinite(law.beta(z))) and np.all(np.isfinite(law.beta_inv(z)))


def test_m_hat():
    assert PowerLaw(0.25).m_hat == 4.0
    assert PowerLaw(3.0).m_hat == 1.0


def test_nonpositive_exponent_rejected():
    with pytest.raises(ValueError):
        PowerLaw(0.0)


@given(m=st.floats(0.1, 4.0), seed=st.integers(0, 2**32 - 1))
def test_inverse_property(m, seed):
    law = PowerLaw(m)
    s = np.random.default_rng(seed).uniform(-5, 5, 1000)
    np.testing.assert_allclose(law.beta_inv(law.beta(s)), s, rtol=1e-12)


@given(m=st.floats(0.1, 4.0), seed=st.integers(0, 2**32 - 1))
def test_power_identities(m, seed):
    law = PowerLaw(m)
    u = np.random.default_rng(seed).uniform(-3, 3, 500)
    np.testing.assert_allclose(np.abs(law.beta(u)), np.abs(u) ** m, rtol=1e-12)
    np.testing.assert_allclose(u * law.beta(u), np.abs(u) ** (m + 1), rtol=1e-12)


@given(m=st.floats(0.1, 4.0))
def test_monotone_odd_even(m):
    law = PowerLaw(m)
    s = np.linspace(-3, 3, 601)
    assert np.all(np.diff(law.beta(s)) > 0)
    np.testing.assert_array_equal(law.beta(-s), -law.beta(s))
    np.testing.assert_array_equal(law.zeta(-s), law.zeta(s))


@given(m=st.floats(0.1, 4.0), seed=st.integers(0, 2**32 - 1))
def test_zeta_below_tangent_bound(m, seed):
    law = PowerLaw(m)
    a, b = np.random.default_rng(seed).uniform(-3, 3, (2, 10_000))
    assert np.all(law.zeta(b) - law.zeta(a) <= (b - a) * law.beta(b) + 1e-12)


@given(m=exponents, s=st.floats(0.05, 3.0))
def test_dbeta_matches_difference_quotient(m, s):
    law = PowerLaw(m)
    eps = 1e-6 * s
    fd = (law.beta(s + eps) - law.beta(s - eps)) / (2 * eps)
    assert law.dbeta(s) == pytest.approx(fd, rel=1e-6)
    assert law.dbeta_inv(law.beta(s)) * law.dbeta(s) == pytest.approx(1.0, rel=1e-12)


def test_cutoff_fast_examples():
    law = PowerLaw(0.5)
    assert law.cutoff_fast(0.25, 2.0) == pytest.approx(2**0.5 * 0.25)
    assert law.cutoff_fast(1.0, 2.0) == pytest.approx(1.0)
    assert law.lipschitz_fast(2.0) == pytest.approx(2**0.5)


@given(m=st.floats(0.05, 0.95), k=st.floats(0.1, 20.0))
def test_cutoff_fast_continuous(m, k):
    law = PowerLaw(m)
    assert law.cutoff_fast(1.0 / k, k) == pytest.approx(law.beta(1.0 / k), rel=1e-12)
    assert k ** (1 - m) / k == pytest.approx(k ** (-m), rel=1e-12)


def test_cutoff_slow_examples():
    law = PowerLaw(2.0)
    assert law.cutoff_slow(5.0, 3.0) == pytest.approx(9.0)
    assert law.cutoff_slow(2.0, 3.0) == pytest.approx(4.0)
    assert law.cutoff_slow(-5.0, 3.0) == pytest.approx(-9.0)
    assert law.lipschitz_slow(3.0) == pytest.approx(6.0)


def test_cutoff_regime_misuse():
    with pytest.raises(ValueError):
        PowerLaw(2.0).cutoff_fast(0.1, 1.0)
    with pytest.raises(ValueError):
        PowerLaw(0.5).cutoff_slow(0.1, 1.0)
    with pytest.raises(ValueError):
        PowerLaw(1.0).cutoff_slow(0.1, 1.0)


def _cutoff_samples(rng, n, slow):
    m = rng.uniform(1.05, 4.0, n) if slow else rng.uniform(0.05, 0.95, n)
    a, b = rng.uniform(-4, 4, (2, n))
    k = np.exp(rng.uniform(np.log(0.05), np.log(20.0), n))
    return m, a, b, k


@pytest.mark.parametrize("slow", [True, False], ids=["slow", "fast"])
def test_cutoff_inequality_random(slow):
    rng = np.random.default_rng(43 if slow else 44)
    worst = -np.inf
    for m, a, b, k in zip(*_cutoff_samples(rng, 10_000, slow)):
        law = PowerLaw(m)
        cut, lip = (law.cutoff_slow, law.lipschitz_slow) if slow else (law.cutoff_fast, law.lipschitz_fast)
        lhs = (cut(b, k) - cut(a, k)) ** 2
        rhs = law.m_hat * lip(k) * (b - a) * (law.beta(b) - law.beta(a))
        worst = max(worst, lhs - rhs)
    assert worst <= 1e-12
